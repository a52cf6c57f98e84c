#include "bridgedist/secret_sharing.hpp"

#include <unordered_set>

#include "bridgedist/errors.hpp"
#include "bridgedist/polynomial.hpp"

namespace bridgedist {

void SharingPolicy::validate() const {
  if (m < 1 || tau < 0 || tau >= m) {
    throw Error(Errc::kPrecondition,
                "sharing policy needs 0 <= tau < m, got m=" + std::to_string(m) + " tau=" + std::to_string(tau));
  }
}

std::vector<Share> share_with_coefficients(const PrimeField& field, FieldElement secret,
                                           std::span<const FieldElement> coefficients, int m, SecretId secret_id) {
  std::vector<FieldElement> c;
  c.reserve(coefficients.size() + 1);
  c.push_back(field.element(secret.value));
  for (FieldElement x : coefficients) c.push_back(field.element(x.value));
  const Polynomial f(std::move(c));

  std::vector<Share> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    out.push_back({secret_id, static_cast<std::uint32_t>(j), poly_eval(field, f, field.element(static_cast<std::uint64_t>(j)))});
  }
  return out;
}

std::vector<Share> share(const PrimeField& field, FieldElement secret, const SharingPolicy& policy, Rng& rng,
                         SecretId secret_id) {
  policy.validate();
  std::vector<FieldElement> coefficients(static_cast<std::size_t>(policy.tau));
  for (auto& c : coefficients) c = field.random(rng);
  return share_with_coefficients(field, secret, coefficients, policy.m, secret_id);
}

FieldElement reconstruct(const PrimeField& field, std::span<const Share> shares, const SharingPolicy& policy) {
  policy.validate();
  std::unordered_set<std::uint32_t> seen;
  std::vector<Point> points;
  points.reserve(shares.size());
  for (const Share& s : shares) {
    if (s.secret_id != shares.front().secret_id) throw Error(Errc::kPrecondition, "shares of different secrets");
    if (s.index == 0 || !seen.insert(s.index).second) {
      throw Error(Errc::kPrecondition, "share index " + std::to_string(s.index) + " is zero or repeated");
    }
    points.push_back({field.element(s.index), field.element(s.value.value)});
  }

  const int eta = static_cast<int>(points.size());
  const int radius = unique_decoding_radius(eta, policy.tau);
  if (radius < 0) {
    throw Error(Errc::kReconstructFailure,
                std::to_string(eta) + " shares cannot determine a degree-" + std::to_string(policy.tau) + " polynomial");
  }
  try {
    return poly_eval(field, berlekamp_welch_decode(field, points, policy.tau, radius), FieldElement{0});
  } catch (const Error& e) {
    if (e.code() == Errc::kDecodeFailure) throw Error(Errc::kReconstructFailure, e.what());
    throw;
  }
}

FieldElement BridgeAddress::pack() const noexcept {
  std::uint64_t v = 0;
  for (std::uint8_t octet : ip) v = (v << 8) | octet;
  return {(v << 16) | port};
}

BridgeAddress BridgeAddress::unpack(FieldElement v) noexcept {
  BridgeAddress a;
  a.port = static_cast<std::uint16_t>(v.value & 0xFFFF);
  for (int i = 0; i < 4; ++i) a.ip[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v.value >> (16 + 8 * (3 - i)));
  return a;
}

std::string BridgeAddress::to_string() const {
  return std::to_string(ip[0]) + "." + std::to_string(ip[1]) + "." + std::to_string(ip[2]) + "." +
         std::to_string(ip[3]) + ":" + std::to_string(port);
}

}  // namespace bridgedist
