#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "bridgedist/field.hpp"
#include "bridgedist/hash.hpp"
#include "bridgedist/secret_sharing.hpp"
#include "bridgedist/session.hpp"

namespace bridgedist {

using Nonce = std::array<std::uint8_t, 16>;

struct RegisterShare {
  SecretId secret_id = 0;
  std::uint32_t index = 0;
  FieldElement value;
  friend bool operator==(const RegisterShare&, const RegisterShare&) = default;
};

struct AssignBroadcast {
  UserId user = 0;
  std::vector<SecretId> indices;  // one secret per instance
  friend bool operator==(const AssignBroadcast&, const AssignBroadcast&) = default;
};

struct ShareDelivery {
  UserId user = 0;
  SecretId secret_id = 0;
  std::uint32_t index = 0;
  FieldElement value;
  friend bool operator==(const ShareDelivery&, const ShareDelivery&) = default;
};

struct DrgCommit {
  std::uint32_t index = 0;
  Digest digest{};
  friend bool operator==(const DrgCommit&, const DrgCommit&) = default;
};

struct DrgReveal {
  std::uint32_t index = 0;
  std::vector<FieldElement> values;  // one per generated number; usually one
  Nonce nonce{};
  friend bool operator==(const DrgReveal&, const DrgReveal&) = default;
};

struct AgreeMsg {
  std::uint32_t phase = 0;
  std::vector<std::uint64_t> payload;
  friend bool operator==(const AgreeMsg&, const AgreeMsg&) = default;
};

using Message = std::variant<RegisterShare, AssignBroadcast, ShareDelivery, DrgCommit, DrgReveal, AgreeMsg>;

enum class PartyKind : std::uint8_t { kDistributor = 1, kUser = 2, kBridge = 3 };

struct Endpoint {
  PartyKind kind = PartyKind::kDistributor;
  std::uint64_t id = 0;
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

inline Endpoint distributor_endpoint(std::uint32_t index) { return {PartyKind::kDistributor, index}; }
inline Endpoint user_endpoint(UserId u) { return {PartyKind::kUser, u}; }
inline Endpoint bridge_endpoint(std::uint64_t id) { return {PartyKind::kBridge, id}; }

/// One transmission between two parties, carrying a batch of records.
struct Envelope {
  Endpoint from;
  Endpoint to;
  std::vector<Message> records;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// Layout: a tag byte per record, fixed-width big-endian integers, u32 length
// prefixes on vectors. Field elements take 8 bytes.
std::vector<std::uint8_t> encode(const Message& msg);
std::vector<std::uint8_t> encode(const Envelope& env);

/// Throws Errc::kMalformedMessage on an unknown tag, truncation or trailing bytes.
Message decode_message(std::span<const std::uint8_t> bytes);
Envelope decode_envelope(std::span<const std::uint8_t> bytes);

}  // namespace bridgedist
