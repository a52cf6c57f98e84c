#include "bridgedist/session.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bridgedist/errors.hpp"

namespace bridgedist {

void SeededRandomness::draw(const DrawContext& ctx, std::span<const UserId> users, std::uint32_t pool_size,
                            std::span<std::uint32_t> out) {
  Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(ctx.kind), ctx.round, ctx.instance, ctx.event}));
  for (std::size_t u = 0; u < users.size(); ++u) out[u] = static_cast<std::uint32_t>(uniform_below(rng, pool_size));
}

std::size_t instance_count_for(std::uint64_t n) {
  if (n <= 1) return 1;
  // log2 is exact at powers of two, the only n where 3 log2 n is an integer.
  return static_cast<std::size_t>(std::ceil(3.0 * std::log2(static_cast<double>(n))));
}

bool threshold_reached(std::uint64_t blocked, std::uint32_t round) {
  return 5 * blocked >= 3 * (std::uint64_t{1} << (round + 4));
}

std::uint64_t blocks_to_advance(std::uint32_t round) {
  const std::uint64_t scaled = 3 * (std::uint64_t{1} << (round + 4));
  return (scaled + 4) / 5;
}

Session Session::create(std::span<const UserId> users, SessionOptions options) {
  if (users.empty()) throw Error(Errc::kEmptyUserSet, "a session needs at least one user");
  Session s;
  s.options_ = options;
  s.users_.assign(users.begin(), users.end());
  s.slot_.reserve(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!s.slot_.emplace(users[i], i).second) {
      throw Error(Errc::kDuplicateUser, "user " + std::to_string(users[i]) + " listed twice");
    }
  }
  s.instances_.resize(instance_count_for(users.size()));
  for (auto& inst : s.instances_) inst.assignment.assign(users.size(), 0);
  s.growth_baseline_ = users.size();
  return s;
}

std::size_t Session::slot_of(UserId user) const {
  auto it = slot_.find(user);
  if (it == slot_.end()) throw Error(Errc::kUnknownUser, "user " + std::to_string(user) + " is not in the session");
  return it->second;
}

bool Session::should_fall_back(std::uint64_t pool_size) const {
  switch (options_.fallback_rule) {
    case FallbackRule::kPoolReachesUsers:
      return pool_size >= n();
    case FallbackRule::kTotalReachesUsers:
      return pool_size * instances_.size() >= n();
  }
  return false;
}

std::uint64_t Session::max_blocked_count() const {
  std::uint64_t best = 0;
  for (const auto& inst : instances_) best = std::max(best, inst.blocked_count);
  return best;
}

bool Session::threshold_crossed() const {
  if (fallback_) return false;
  // Before the first distribution b_0 is the sentinel 16, which always fires.
  if (round_ == 0) return threshold_reached(16, 0);
  return threshold_reached(max_blocked_count(), round_);
}

void Session::fill_instance(InstanceState& inst, std::uint64_t pool_size, std::size_t instance_index,
                            DrawContext ctx, BridgeSupply& supply, AssignmentRandomness& rng, RoundPlan* plan) {
  std::vector<BridgeId> pool;
  pool.reserve(pool_size);
  for (BridgeId id : inst.pool) {
    if (pool.size() == pool_size) break;
    if (!supply.is_blocked(id)) {
      pool.push_back(id);
      if (plan) plan->reused.push_back(id);
    }
  }
  while (pool.size() < pool_size) {
    const BridgeId id = supply.recruit();
    ++bridges_used_;
    pool.push_back(id);
    if (plan) plan->recruited.push_back(id);
  }
  inst.pool = std::move(pool);
  inst.blocked_count = 0;
  inst.assignment.assign(users_.size(), 0);
  ctx.instance = instance_index;
  rng.draw(ctx, users_, static_cast<std::uint32_t>(pool_size), inst.assignment);
}

std::optional<RoundPlan> Session::advance_round_if_triggered(BridgeSupply& supply, AssignmentRandomness& rng) {
  if (users_.empty() || !threshold_crossed()) return std::nullopt;

  ++round_;
  const std::uint64_t pool_size = std::uint64_t{1} << (round_ + 4);
  RoundPlan plan;
  plan.round = round_;

  if (should_fall_back(pool_size)) {
    fallback_ = true;
    plan.fallback = true;
    plan.pool_size = users_.size();
    unique_.resize(users_.size());
    for (auto& b : unique_) {
      b = supply.recruit();
      ++bridges_used_;
      plan.recruited.push_back(b);
    }
    return plan;
  }

  plan.pool_size = pool_size;
  const DrawContext ctx{DrawKind::kDistribution, round_, 0, 0};
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    fill_instance(instances_[i], pool_size, i, ctx, supply, rng, &plan);
  }
  return plan;
}

void Session::recount_blocked(const BridgeSupply& supply) {
  for (auto& inst : instances_) {
    inst.blocked_count = static_cast<std::uint64_t>(
        std::count_if(inst.pool.begin(), inst.pool.end(), [&](BridgeId id) { return supply.is_blocked(id); }));
  }
}

void Session::report_blocked(BridgeSupply& supply, std::span<const BridgeId> bridge_ids) {
  if (bridge_ids.empty()) return;
  for (BridgeId id : bridge_ids) supply.block(id);
  recount_blocked(supply);
}

std::vector<BridgeId> Session::assignments_for(UserId user) const {
  const std::size_t slot = slot_of(user);
  if (fallback_) return {unique_[slot]};
  std::vector<BridgeId> out;
  out.reserve(instances_.size());
  for (const auto& inst : instances_) {
    if (!inst.pool.empty()) out.push_back(inst.pool[inst.assignment[slot]]);
  }
  return out;
}

bool Session::slot_has_unblocked(std::size_t slot, const BridgeSupply& supply) const {
  if (fallback_) return !supply.is_blocked(unique_[slot]);
  for (const auto& inst : instances_) {
    if (!inst.pool.empty() && !supply.is_blocked(inst.pool[inst.assignment[slot]])) return true;
  }
  return false;
}

bool Session::has_unblocked_bridge(UserId user, const BridgeSupply& supply) const {
  return slot_has_unblocked(slot_of(user), supply);
}

std::vector<BridgeId> Session::distributed_bridges() const {
  if (fallback_) return unique_;
  std::vector<BridgeId> out;
  for (const auto& inst : instances_) out.insert(out.end(), inst.pool.begin(), inst.pool.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<BridgeId> Session::join_user(UserId user, BridgeSupply& supply, AssignmentRandomness& rng) {
  if (slot_.count(user)) throw Error(Errc::kDuplicateUser, "user " + std::to_string(user) + " already joined");
  const std::size_t slot = users_.size();
  users_.push_back(user);
  slot_.emplace(user, slot);
  const std::uint64_t event = ++join_events_;

  std::vector<BridgeId> recruited;
  if (fallback_) {
    unique_.push_back(supply.recruit());
    ++bridges_used_;
    recruited.push_back(unique_.back());
  }
  const UserId one[1] = {user};
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    auto& inst = instances_[i];
    std::uint32_t k = 0;
    if (!inst.pool.empty()) {
      rng.draw({DrawKind::kJoin, round_, i, event}, one, static_cast<std::uint32_t>(inst.pool.size()),
               std::span<std::uint32_t>(&k, 1));
    }
    inst.assignment.push_back(k);
  }

  auto grown = handle_growth(supply, rng);
  recruited.insert(recruited.end(), grown.begin(), grown.end());
  return recruited;
}

std::vector<BridgeId> Session::handle_growth(BridgeSupply& supply, AssignmentRandomness& rng) {
  if (users_.size() < 2 * growth_baseline_) return {};
  growth_baseline_ = users_.size();
  const std::uint64_t event = ++growth_events_;
  // Fallback is terminal: joiners already get unique bridges.
  if (fallback_) return {};

  RoundPlan plan;
  const std::size_t first_new = instances_.size();
  instances_.resize(first_new + 3);
  for (std::size_t i = first_new; i < instances_.size(); ++i) {
    auto& inst = instances_[i];
    if (round_ == 0) {
      inst.assignment.assign(users_.size(), 0);
      continue;
    }
    fill_instance(inst, std::uint64_t{1} << (round_ + 4), i, {DrawKind::kGrowth, round_, 0, event}, supply, rng,
                  &plan);
  }
  return plan.recruited;
}

void Session::leave_user(UserId user) {
  const std::size_t slot = slot_of(user);
  const std::size_t last = users_.size() - 1;
  if (slot != last) {
    users_[slot] = users_[last];
    slot_[users_[slot]] = slot;
    for (auto& inst : instances_) inst.assignment[slot] = inst.assignment[last];
    if (fallback_) unique_[slot] = unique_[last];
  }
  users_.pop_back();
  slot_.erase(user);
  for (auto& inst : instances_) inst.assignment.resize(users_.size());
  if (fallback_) unique_.resize(users_.size());
}

std::vector<BridgeId> Session::replace_blocked_fallback(BridgeSupply& supply) {
  std::vector<BridgeId> recruited;
  if (!fallback_) return recruited;
  for (auto& b : unique_) {
    if (supply.is_blocked(b)) {
      b = supply.recruit();
      ++bridges_used_;
      recruited.push_back(b);
    }
  }
  return recruited;
}

nlohmann::json Session::to_json() const {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& inst : instances_) {
    instances.push_back({{"pool", inst.pool}, {"blocked_count", inst.blocked_count}, {"assignment", inst.assignment}});
  }
  return {
      {"round", round_},
      {"instances", std::move(instances)},
      {"users", users_},
      {"fallback", fallback_},
      {"unique", unique_},
      {"fallback_rule", options_.fallback_rule == FallbackRule::kPoolReachesUsers ? "pool" : "total"},
      {"metrics",
       {{"n", users_.size()},
        {"bridges_used_total", bridges_used_},
        {"growth_baseline", growth_baseline_},
        {"join_events", join_events_},
        {"growth_events", growth_events_}}},
  };
}

Session Session::from_json(const nlohmann::json& j) {
  try {
    Session s;
    s.options_.fallback_rule =
        j.at("fallback_rule").get<std::string>() == "pool" ? FallbackRule::kPoolReachesUsers : FallbackRule::kTotalReachesUsers;
    s.round_ = j.at("round").get<std::uint32_t>();
    s.users_ = j.at("users").get<std::vector<UserId>>();
    for (std::size_t i = 0; i < s.users_.size(); ++i) s.slot_.emplace(s.users_[i], i);
    for (const auto& ji : j.at("instances")) {
      InstanceState inst;
      inst.pool = ji.at("pool").get<std::vector<BridgeId>>();
      inst.blocked_count = ji.at("blocked_count").get<std::uint64_t>();
      inst.assignment = ji.at("assignment").get<std::vector<std::uint32_t>>();
      s.instances_.push_back(std::move(inst));
    }
    s.fallback_ = j.at("fallback").get<bool>();
    s.unique_ = j.at("unique").get<std::vector<BridgeId>>();
    const auto& m = j.at("metrics");
    s.bridges_used_ = m.at("bridges_used_total").get<std::uint64_t>();
    s.growth_baseline_ = m.at("growth_baseline").get<std::uint64_t>();
    s.join_events_ = m.at("join_events").get<std::uint64_t>();
    s.growth_events_ = m.at("growth_events").get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfigInvalid, std::string("malformed session snapshot: ") + e.what());
  }
}

}  // namespace bridgedist
