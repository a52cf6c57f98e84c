#include "bridgedist/polynomial.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "bridgedist/errors.hpp"

namespace bridgedist {
namespace {

void require_distinct_x(std::span<const Point> points) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(points.size());
  for (const Point& pt : points) {
    if (!seen.insert(pt.x.value).second) {
      throw Error(Errc::kDuplicateX, "x = " + std::to_string(pt.x.value) + " appears twice");
    }
  }
}

}  // namespace

Polynomial::Polynomial(std::vector<FieldElement> coefficients) : coeffs_(std::move(coefficients)) {
  while (!coeffs_.empty() && coeffs_.back().value == 0) coeffs_.pop_back();
}

FieldElement poly_eval(const PrimeField& field, const Polynomial& f, FieldElement x) {
  FieldElement acc{};
  auto c = f.coefficients();
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = field.add(field.mul(acc, x), *it);
  return acc;
}

Polynomial poly_mul(const PrimeField& field, const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  auto ca = a.coefficients();
  auto cb = b.coefficients();
  std::vector<FieldElement> out(ca.size() + cb.size() - 1);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    for (std::size_t j = 0; j < cb.size(); ++j) out[i + j] = field.add(out[i + j], field.mul(ca[i], cb[j]));
  }
  return Polynomial(std::move(out));
}

std::pair<Polynomial, Polynomial> poly_divmod(const PrimeField& field, const Polynomial& num, const Polynomial& den) {
  if (den.is_zero()) throw Error(Errc::kPrecondition, "polynomial division by zero");
  std::vector<FieldElement> rem(num.coefficients().begin(), num.coefficients().end());
  const int dd = den.degree();
  if (num.degree() < dd) return {Polynomial{}, num};

  std::vector<FieldElement> quot(static_cast<std::size_t>(num.degree() - dd + 1));
  const FieldElement lead_inv = field.inverse(den.coefficient(static_cast<std::size_t>(dd)));
  for (int k = num.degree() - dd; k >= 0; --k) {
    const FieldElement c = field.mul(rem[static_cast<std::size_t>(k + dd)], lead_inv);
    quot[static_cast<std::size_t>(k)] = c;
    if (c.value == 0) continue;
    for (int j = 0; j <= dd; ++j) {
      auto& r = rem[static_cast<std::size_t>(k + j)];
      r = field.sub(r, field.mul(c, den.coefficient(static_cast<std::size_t>(j))));
    }
  }
  return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
}

Polynomial lagrange_interpolate(const PrimeField& field, std::span<const Point> points) {
  if (points.empty()) throw Error(Errc::kPrecondition, "interpolation needs at least one point");
  require_distinct_x(points);

  // master(x) = prod (x - x_j); each basis numerator is master / (x - x_i).
  std::vector<FieldElement> master{FieldElement{1}};
  for (const Point& pt : points) {
    std::vector<FieldElement> next(master.size() + 1);
    for (std::size_t k = 0; k < master.size(); ++k) {
      next[k + 1] = field.add(next[k + 1], master[k]);
      next[k] = field.sub(next[k], field.mul(master[k], pt.x));
    }
    master = std::move(next);
  }

  const std::size_t n = points.size();
  std::vector<FieldElement> result(n);
  std::vector<FieldElement> basis(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Synthetic division of master by (x - x_i).
    FieldElement carry{};
    for (std::size_t k = n; k-- > 0;) {
      carry = field.add(master[k + 1], field.mul(carry, points[i].x));
      basis[k] = carry;
    }
    FieldElement denom{1};
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) denom = field.mul(denom, field.sub(points[i].x, points[j].x));
    }
    const FieldElement scale = field.mul(points[i].y, field.inverse(denom));
    for (std::size_t k = 0; k < n; ++k) result[k] = field.add(result[k], field.mul(scale, basis[k]));
  }
  return Polynomial(std::move(result));
}

std::optional<std::vector<FieldElement>> solve_linear_system(const PrimeField& field,
                                                             std::vector<std::vector<FieldElement>> a,
                                                             std::vector<FieldElement> b) {
  const std::size_t rows = a.size();
  const std::size_t cols = rows == 0 ? 0 : a.front().size();
  std::vector<std::size_t> pivot_col_of_row;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    while (piv < rows && a[piv][c].value == 0) ++piv;
    if (piv == rows) continue;
    std::swap(a[piv], a[r]);
    std::swap(b[piv], b[r]);
    const FieldElement inv = field.inverse(a[r][c]);
    for (std::size_t k = c; k < cols; ++k) a[r][k] = field.mul(a[r][k], inv);
    b[r] = field.mul(b[r], inv);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c].value == 0) continue;
      const FieldElement factor = a[i][c];
      for (std::size_t k = c; k < cols; ++k) a[i][k] = field.sub(a[i][k], field.mul(factor, a[r][k]));
      b[i] = field.sub(b[i], field.mul(factor, b[r]));
    }
    pivot_col_of_row.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i) {
    if (b[i].value != 0) return std::nullopt;
  }
  std::vector<FieldElement> x(cols);
  for (std::size_t i = 0; i < r; ++i) x[pivot_col_of_row[i]] = b[i];
  return x;
}

int max_decodable_errors(int num_points, int tau) {
  // epsilon < (n - tau + 1) / 2  <=>  2 * epsilon <= n - tau
  const int slack = num_points - tau;
  return slack < 0 ? -1 : slack / 2;
}

int unique_decoding_radius(int num_points, int tau) {
  const int slack = num_points - tau - 1;
  return slack < 0 ? -1 : slack / 2;
}

Polynomial berlekamp_welch_decode(const PrimeField& field, std::span<const Point> points, int tau, int epsilon) {
  const int eta = static_cast<int>(points.size());
  if (tau < 0 || epsilon < 0 || 2 * epsilon >= eta - tau + 1) {
    throw Error(Errc::kPrecondition, "need 0 <= epsilon < (eta - tau + 1) / 2; got eta=" + std::to_string(eta) +
                                         " tau=" + std::to_string(tau) + " epsilon=" + std::to_string(epsilon));
  }
  require_distinct_x(points);

  for (int e = epsilon; e >= 0; --e) {
    // Unknowns: e_0..e_{e-1} (E is monic), then q_0..q_{e+tau}.
    const std::size_t n_e = static_cast<std::size_t>(e);
    const std::size_t n_q = static_cast<std::size_t>(e + tau + 1);
    std::vector<std::vector<FieldElement>> a(points.size(), std::vector<FieldElement>(n_e + n_q));
    std::vector<FieldElement> rhs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto [x, y] = points[i];
      FieldElement xp{1};
      for (std::size_t k = 0; k < std::max(n_e, n_q); ++k) {
        if (k < n_e) a[i][k] = field.neg(field.mul(y, xp));
        if (k < n_q) a[i][n_e + k] = xp;
        xp = field.mul(xp, x);
      }
      rhs[i] = field.mul(y, field.pow(x, n_e));
    }
    auto sol = solve_linear_system(field, std::move(a), std::move(rhs));
    if (!sol) continue;

    std::vector<FieldElement> e_coeffs(sol->begin(), sol->begin() + static_cast<std::ptrdiff_t>(n_e));
    e_coeffs.push_back(FieldElement{1});
    std::vector<FieldElement> q_coeffs(sol->begin() + static_cast<std::ptrdiff_t>(n_e), sol->end());
    auto [quotient, remainder] = poly_divmod(field, Polynomial(std::move(q_coeffs)), Polynomial(std::move(e_coeffs)));
    if (!remainder.is_zero() || quotient.degree() > tau) continue;

    int disagreements = 0;
    for (const Point& pt : points) {
      if (poly_eval(field, quotient, pt.x) != pt.y) ++disagreements;
    }
    if (disagreements <= epsilon) return quotient;
  }
  throw Error(Errc::kDecodeFailure, "no polynomial of degree <= " + std::to_string(tau) + " within " +
                                        std::to_string(epsilon) + " errors");
}

}  // namespace bridgedist
