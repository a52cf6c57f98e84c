#pragma once

#include <compare>
#include <cstdint>

#include "bridgedist/random.hpp"

namespace bridgedist {

/// Mersenne prime 2^61 - 1. Every packed IPv4:port (48 bits) is a valid element.
inline constexpr std::uint64_t kProductionModulus = (std::uint64_t{1} << 61) - 1;

struct FieldElement {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(FieldElement, FieldElement) = default;
};

bool is_prime(std::uint64_t n);

/// Arithmetic in F_p. The modulus is fixed at construction and checked for
/// primality there; small primes are used by the exhaustive test oracles.
class PrimeField {
 public:
  explicit PrimeField(std::uint64_t modulus = kProductionModulus);

  std::uint64_t modulus() const noexcept { return p_; }

  FieldElement element(std::uint64_t v) const noexcept { return {v % p_}; }
  bool contains(FieldElement a) const noexcept { return a.value < p_; }

  FieldElement add(FieldElement a, FieldElement b) const noexcept {
    std::uint64_t s = a.value + b.value;
    return {s >= p_ ? s - p_ : s};
  }
  FieldElement sub(FieldElement a, FieldElement b) const noexcept {
    return {a.value >= b.value ? a.value - b.value : a.value + p_ - b.value};
  }
  FieldElement neg(FieldElement a) const noexcept { return {a.value == 0 ? 0 : p_ - a.value}; }
  FieldElement mul(FieldElement a, FieldElement b) const noexcept {
    return {static_cast<std::uint64_t>(static_cast<unsigned __int128>(a.value) * b.value % p_)};
  }
  FieldElement pow(FieldElement base, std::uint64_t exp) const noexcept;

  /// Throws Errc::kZeroInverse for a == 0.
  FieldElement inverse(FieldElement a) const;

  FieldElement random(Rng& rng) const { return {uniform_below(rng, p_)}; }

 private:
  std::uint64_t p_;
};

}  // namespace bridgedist
