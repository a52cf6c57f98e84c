#include "bridgedist/field.hpp"

#include <array>
#include <string>

#include "bridgedist/errors.hpp"

namespace bridgedist {
namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace

// Deterministic Miller-Rabin; this base set is exact for all 64-bit inputs.
bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  constexpr std::array<std::uint64_t, 12> kBases{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (std::uint64_t b : kBases) {
    if (n % b == 0) return n == b;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : kBases) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint64_t modulus) : p_(modulus) {
  // add() relies on a + b not overflowing.
  if (modulus >= (std::uint64_t{1} << 63) || !is_prime(modulus)) {
    throw Error(Errc::kNotPrime, "field modulus " + std::to_string(modulus) + " is not a usable prime");
  }
}

FieldElement PrimeField::pow(FieldElement base, std::uint64_t exp) const noexcept {
  return {powmod(base.value, exp, p_)};
}

FieldElement PrimeField::inverse(FieldElement a) const {
  if (a.value % p_ == 0) throw Error(Errc::kZeroInverse, "zero has no inverse");
  // Extended Euclid on signed 128-bit to stay exact for p near 2^63.
  __int128 t = 0, new_t = 1;
  __int128 r = p_, new_r = a.value % p_;
  while (new_r != 0) {
    __int128 q = r / new_r;
    __int128 tmp = t - q * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - q * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (t < 0) t += p_;
  return {static_cast<std::uint64_t>(t)};
}

}  // namespace bridgedist
