#include <doctest.h>

#include "bridgedist/field.hpp"
#include "test_support.hpp"

using namespace bridgedist;

TEST_CASE("primality check guards the modulus") {
  CHECK(is_prime(2));
  CHECK(is_prime(7));
  CHECK(is_prime(kProductionModulus));
  CHECK_FALSE(is_prime(1));
  CHECK_FALSE(is_prime(91));
  CHECK_FALSE(is_prime(3215031751ULL));  // strong pseudoprime to bases 2, 3, 5, 7
  CHECK_ERRC(PrimeField(100), Errc::kNotPrime);
}

TEST_CASE("field_inverse examples") {
  const PrimeField f7(7);
  CHECK(f7.inverse({1}) == FieldElement{1});
  CHECK(f7.inverse({2}) == FieldElement{4});
  CHECK_ERRC(f7.inverse({0}), Errc::kZeroInverse);

  const PrimeField big;
  const FieldElement a{123456789012345ULL};
  CHECK(big.mul(a, big.inverse(a)) == FieldElement{1});
}

TEST_CASE("field_inverse agrees with brute force for every small prime field") {
  for (std::uint64_t p = 2; p <= 101; ++p) {
    if (!is_prime(p)) continue;
    const PrimeField field(p);
    for (std::uint64_t a = 1; a < p; ++a) {
      std::uint64_t expected = 0;
      for (std::uint64_t b = 1; b < p; ++b) {
        if (a * b % p == 1) expected = b;
      }
      REQUIRE(field.inverse({a}).value == expected);
    }
  }
}

TEST_CASE("arithmetic closes over [0, p)") {
  const PrimeField field;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const FieldElement a = field.random(rng);
    const FieldElement b = field.random(rng);
    CHECK(field.contains(field.add(a, b)));
    CHECK(field.contains(field.mul(a, b)));
    CHECK(field.add(field.sub(a, b), b) == a);
    CHECK(field.add(a, field.neg(a)) == FieldElement{0});
  }
}
