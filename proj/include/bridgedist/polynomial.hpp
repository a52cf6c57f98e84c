#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bridgedist/field.hpp"

namespace bridgedist {

/// Polynomial over F_p, coefficients lowest degree first. Trailing zeros are
/// stripped on construction, so the zero polynomial has no coefficients and
/// degree -1.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<FieldElement> coefficients);

  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  std::span<const FieldElement> coefficients() const noexcept { return coeffs_; }
  FieldElement coefficient(std::size_t k) const noexcept { return k < coeffs_.size() ? coeffs_[k] : FieldElement{}; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<FieldElement> coeffs_;
};

struct Point {
  FieldElement x;
  FieldElement y;
};

/// Horner evaluation.
FieldElement poly_eval(const PrimeField& field, const Polynomial& f, FieldElement x);

Polynomial poly_mul(const PrimeField& field, const Polynomial& a, const Polynomial& b);

/// Long division; throws Errc::kPrecondition when dividing by zero.
std::pair<Polynomial, Polynomial> poly_divmod(const PrimeField& field, const Polynomial& num, const Polynomial& den);

/// Unique polynomial of degree < |points| through every point.
/// Throws Errc::kDuplicateX on repeated x, Errc::kPrecondition when empty.
Polynomial lagrange_interpolate(const PrimeField& field, std::span<const Point> points);

/// Solves A x = b by Gauss-Jordan elimination. The pivot for each column is the
/// first row (in index order) with a nonzero entry. Free variables are set to
/// zero. Returns nullopt when the system is inconsistent.
std::optional<std::vector<FieldElement>> solve_linear_system(const PrimeField& field,
                                                             std::vector<std::vector<FieldElement>> a,
                                                             std::vector<FieldElement> b);

/// Recovers P with deg P <= tau from points of which at most `epsilon` are
/// wrong. Requires epsilon < (|points| - tau + 1) / 2.
///
/// Error-locator degrees epsilon, epsilon-1, ..., 0 are tried in turn: with E
/// monic of that degree and deg Q <= degree + tau, the system
/// y_i E(x_i) = Q(x_i) is solved and Q / E accepted when the division is exact,
/// the quotient has degree <= tau, and it disagrees with at most epsilon points.
///
/// Throws Errc::kPrecondition on a bound violation, Errc::kDuplicateX on
/// repeated x, Errc::kDecodeFailure when no locator degree yields a decoding.
Polynomial berlekamp_welch_decode(const PrimeField& field, std::span<const Point> points, int tau, int epsilon);

/// Largest epsilon accepted by berlekamp_welch_decode for these sizes.
int max_decodable_errors(int num_points, int tau);

/// Largest error count with a guaranteed unique decoding (2e + tau < n).
int unique_decoding_radius(int num_points, int tau);

}  // namespace bridgedist
