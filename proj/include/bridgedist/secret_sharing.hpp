#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bridgedist/field.hpp"
#include "bridgedist/random.hpp"

namespace bridgedist {

/// Pseudonym of a shared secret; in the multi-distributor protocols this is the
/// bridge identifier every distributor agrees on.
using SecretId = std::uint64_t;

struct Share {
  SecretId secret_id = 0;
  std::uint32_t index = 0;  // evaluation point j >= 1; x = 0 holds the secret
  FieldElement value;

  friend bool operator==(const Share&, const Share&) = default;
};

struct SharingPolicy {
  int m = 1;    // number of share holders
  int tau = 0;  // any tau shares reveal nothing; tau + 1 determine the secret

  /// tau = floor(m / 3), the largest coalition the distributor set tolerates.
  static SharingPolicy for_distributors(int m) { return {m, m / 3}; }

  /// Throws Errc::kPrecondition unless 0 <= tau < m.
  void validate() const;
};

/// Shamir sharing with a uniformly random degree-tau polynomial, f(0) = secret.
std::vector<Share> share(const PrimeField& field, FieldElement secret, const SharingPolicy& policy, Rng& rng,
                         SecretId secret_id = 0);

/// Same as share() with the tau non-constant coefficients supplied by the caller.
std::vector<Share> share_with_coefficients(const PrimeField& field, FieldElement secret,
                                           std::span<const FieldElement> coefficients, int m,
                                           SecretId secret_id = 0);

/// Decodes f(0) from the given shares with Berlekamp-Welch, correcting up to
/// floor((eta - tau - 1) / 2) invalid shares. Throws Errc::kReconstructFailure
/// when decoding fails and Errc::kPrecondition on repeated indices or mixed
/// secret ids.
FieldElement reconstruct(const PrimeField& field, std::span<const Share> shares, const SharingPolicy& policy);

/// IPv4 address plus TCP port, packed big-endian into 48 bits.
struct BridgeAddress {
  std::array<std::uint8_t, 4> ip{};
  std::uint16_t port = 0;

  friend bool operator==(const BridgeAddress&, const BridgeAddress&) = default;

  FieldElement pack() const noexcept;
  static BridgeAddress unpack(FieldElement v) noexcept;
  std::string to_string() const;
};

}  // namespace bridgedist
