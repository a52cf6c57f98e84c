#include "bridgedist/bridge_supply.hpp"

#include <string>

#include "bridgedist/errors.hpp"

namespace bridgedist {

BridgeId BridgeSupply::recruit() {
  if (capacity_ && recruited() >= *capacity_) {
    throw Error(Errc::kSupplyExhausted, "all " + std::to_string(*capacity_) + " bridges already recruited");
  }
  blocked_.push_back(0);
  return next_++;
}

bool BridgeSupply::block(BridgeId id) {
  if (id == 0 || id >= next_) {
    throw Error(Errc::kPrecondition, "bridge " + std::to_string(id) + " was never recruited");
  }
  auto& flag = blocked_[id - 1];
  if (flag) return false;
  flag = 1;
  ++blocked_total_;
  return true;
}

nlohmann::json BridgeSupply::to_json() const {
  nlohmann::json blocked = nlohmann::json::array();
  for (std::size_t i = 0; i < blocked_.size(); ++i) {
    if (blocked_[i]) blocked.push_back(i + 1);
  }
  nlohmann::json j{{"recruited", recruited()}, {"blocked", std::move(blocked)}};
  j["capacity"] = capacity_ ? nlohmann::json(*capacity_) : nlohmann::json(nullptr);
  return j;
}

BridgeSupply BridgeSupply::from_json(const nlohmann::json& j) {
  std::optional<std::uint64_t> cap;
  if (!j.at("capacity").is_null()) cap = j.at("capacity").get<std::uint64_t>();
  BridgeSupply s(cap);
  const auto recruited = j.at("recruited").get<std::uint64_t>();
  s.next_ = recruited + 1;
  s.blocked_.assign(recruited, 0);
  for (const auto& id : j.at("blocked")) s.block(id.get<BridgeId>());
  return s;
}

}  // namespace bridgedist
