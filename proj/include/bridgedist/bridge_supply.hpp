#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

namespace bridgedist {

using BridgeId = std::uint64_t;

/// Source of fresh bridges plus the censor-visible blocked set. Identifiers
/// are dense, starting at 1, so blocked status is a flat bitmap.
class BridgeSupply {
 public:
  explicit BridgeSupply(std::optional<std::uint64_t> capacity = std::nullopt) : capacity_(capacity) {}

  /// Hands out a never-distributed bridge. Throws Errc::kSupplyExhausted past capacity.
  BridgeId recruit();

  /// Returns true when the bridge was not blocked before.
  bool block(BridgeId id);
  bool is_blocked(BridgeId id) const noexcept {
    return id >= 1 && id - 1 < blocked_.size() && blocked_[id - 1] != 0;
  }

  std::uint64_t recruited() const noexcept { return next_ - 1; }
  std::uint64_t blocked_total() const noexcept { return blocked_total_; }
  std::optional<std::uint64_t> capacity() const noexcept { return capacity_; }

  nlohmann::json to_json() const;
  static BridgeSupply from_json(const nlohmann::json& j);

 private:
  std::optional<std::uint64_t> capacity_;
  BridgeId next_ = 1;
  std::vector<std::uint8_t> blocked_;
  std::uint64_t blocked_total_ = 0;
};

}  // namespace bridgedist
