#include "bridgedist/adversary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "bridgedist/errors.hpp"

namespace bridgedist {

Strategy Strategy::parse(std::string_view text) {
  if (text == "prudent") return prudent();
  if (text == "aggressive") return aggressive();
  constexpr std::string_view kPrefix = "stochastic:";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    const std::string rest(text.substr(kPrefix.size()));
    std::size_t used = 0;
    double q = -1;
    try {
      q = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == rest.size() && !rest.empty() && q >= 0.0 && q <= 1.0) return stochastic(q);
  }
  throw Error(Errc::kConfigInvalid, "unknown strategy '" + std::string(text) + "'");
}

std::string Strategy::to_string() const {
  switch (kind) {
    case StrategyKind::kPrudent: return "prudent";
    case StrategyKind::kAggressive: return "aggressive";
    case StrategyKind::kStochastic: {
      std::string q = std::to_string(probability);
      while (q.size() > 1 && q.back() == '0') q.pop_back();
      if (q.back() == '.') q.pop_back();
      return "stochastic:" + q;
    }
  }
  return "unknown";
}

std::string_view to_string(DistributorBehavior b) {
  switch (b) {
    case DistributorBehavior::kHonest: return "honest";
    case DistributorBehavior::kSilent: return "silent";
    case DistributorBehavior::kGarbage: return "garbage";
    case DistributorBehavior::kEquivocate: return "equivocate";
  }
  return "unknown";
}

DistributorBehavior parse_distributor_behavior(std::string_view text) {
  for (auto b : {DistributorBehavior::kHonest, DistributorBehavior::kSilent, DistributorBehavior::kGarbage,
                 DistributorBehavior::kEquivocate}) {
    if (text == to_string(b)) return b;
  }
  throw Error(Errc::kConfigInvalid, "unknown distributor behavior '" + std::string(text) + "'");
}

Adversary::Adversary(std::uint64_t budget, Strategy strategy, std::uint64_t seed, std::vector<CorruptionEvent> schedule)
    : budget_(budget),
      strategy_(strategy),
      seed_(seed),
      rng_(derive_seed(seed, {0xC0'44'0B'7ULL})),
      schedule_(std::move(schedule)) {
  std::uint64_t total = 0;
  for (const auto& ev : schedule_) total += ev.count;
  if (total > budget_) throw Error(Errc::kBudgetExceeded, "corruption schedule exceeds the budget");
}

std::uint64_t Adversary::scheduled_for(std::uint32_t round) {
  if (schedule_.empty()) {
    if (default_done_) return 0;
    default_done_ = true;
    return budget_;
  }
  std::uint64_t count = 0;
  for (const auto& ev : schedule_) {
    if (ev.round == round) count += ev.count;
  }
  return count;
}

bool Adversary::has_pending_corruption(std::uint32_t after_round) const {
  if (schedule_.empty()) return !default_done_ && budget_ > 0;
  return std::any_of(schedule_.begin(), schedule_.end(),
                     [&](const CorruptionEvent& ev) { return ev.round > after_round && ev.count > 0; });
}

std::vector<UserId> Adversary::corrupt_step(const Session& session, std::uint32_t round) {
  std::uint64_t want = scheduled_for(round);
  if (want == 0) return {};
  if (corrupted_.size() + want > budget_) {
    throw Error(Errc::kBudgetExceeded, "corrupting " + std::to_string(want) + " more users exceeds budget " +
                                           std::to_string(budget_));
  }

  std::vector<UserId> candidates;
  candidates.reserve(session.n());
  for (UserId u : session.users()) {
    if (!corrupted_set_.count(u)) candidates.push_back(u);
  }
  std::sort(candidates.begin(), candidates.end());
  want = std::min<std::uint64_t>(want, candidates.size());

  // Partial Fisher-Yates: the first k picks do not depend on how many follow.
  std::vector<UserId> picked;
  picked.reserve(want);
  for (std::uint64_t j = 0; j < want; ++j) {
    const std::uint64_t r = j + uniform_below(rng_, candidates.size() - j);
    std::swap(candidates[j], candidates[r]);
    picked.push_back(candidates[j]);
  }
  corrupt_users(picked, session);
  return picked;
}

void Adversary::corrupt_users(std::span<const UserId> users, const Session& session) {
  if (corrupted_.size() + users.size() > budget_) {
    throw Error(Errc::kBudgetExceeded, "corruption exceeds budget " + std::to_string(budget_));
  }
  for (UserId u : users) {
    if (corrupted_set_.insert(u).second) corrupted_.push_back(u);
    if (session.contains(u)) {
      for (BridgeId b : session.assignments_for(u)) known_.insert(b);
    }
  }
}

void Adversary::observe(const Session& session) {
  for (UserId u : corrupted_) {
    if (!session.contains(u)) continue;
    for (BridgeId b : session.assignments_for(u)) known_.insert(b);
  }
}

std::vector<InstanceView> Adversary::views(const Session& session, const BridgeSupply& supply) const {
  const auto users = session.users();
  if (session.fallback_engaged()) {
    InstanceView v;
    std::vector<BridgeId> ids;
    for (UserId u : corrupted_) {
      if (!session.contains(u)) continue;
      for (BridgeId b : session.assignments_for(u)) {
        if (!supply.is_blocked(b)) ids.push_back(b);
      }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t k = 0; k < ids.size(); ++k) v.held.push_back({static_cast<std::uint32_t>(k), ids[k]});
    return {std::move(v)};
  }

  std::vector<std::size_t> corrupt_slots;
  for (std::size_t s = 0; s < users.size(); ++s) {
    if (corrupted_set_.count(users[s])) corrupt_slots.push_back(s);
  }
  std::vector<InstanceView> out;
  out.reserve(session.instance_count());
  for (const auto& inst : session.instances()) {
    InstanceView v;
    v.blocked_count = inst.blocked_count;
    if (!inst.pool.empty()) {
      std::vector<std::uint32_t> positions;
      positions.reserve(corrupt_slots.size());
      for (std::size_t s : corrupt_slots) positions.push_back(inst.assignment[s]);
      std::sort(positions.begin(), positions.end());
      positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
      for (std::uint32_t pos : positions) {
        if (!supply.is_blocked(inst.pool[pos])) v.held.push_back({pos, inst.pool[pos]});
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<BridgeId> Adversary::decide_blocks(std::uint32_t round, std::span<const InstanceView> views,
                                               bool fallback) const {
  std::vector<BridgeId> out;
  switch (strategy_.kind) {
    case StrategyKind::kPrudent: {
      // Blocking in fallback cannot force another round.
      if (fallback || views.empty()) break;
      const std::uint64_t need = blocks_to_advance(round);
      std::size_t best = 0;
      for (std::size_t i = 1; i < views.size(); ++i) {
        if (views[i].blocked_count + views[i].held.size() > views[best].blocked_count + views[best].held.size()) best = i;
      }
      const InstanceView& v = views[best];
      if (v.blocked_count >= need || v.blocked_count + v.held.size() < need) break;
      for (std::uint64_t k = 0; k < need - v.blocked_count; ++k) out.push_back(v.held[k].id);
      break;
    }
    case StrategyKind::kAggressive:
      for (const auto& v : views) {
        for (const auto& h : v.held) out.push_back(h.id);
      }
      break;
    case StrategyKind::kStochastic: {
      // One coin per (round, instance, pool position), independent of how
      // many other bridges are held.
      const double q = strategy_.probability;
      for (std::size_t i = 0; i < views.size(); ++i) {
        for (const auto& h : views[i].held) {
          const std::uint64_t coin = derive_seed(seed_, {0x5EED'C011ULL, round, i, h.position});
          if (static_cast<double>(coin >> 11) * 0x1.0p-53 < q) out.push_back(h.id);
        }
      }
      break;
    }
  }
  return out;
}

void Adversary::record_blocked(std::span<const BridgeId> ids) {
  for (BridgeId b : ids) {
    if (!known_.count(b)) {
      throw Error(Errc::kContractViolation, "bridge " + std::to_string(b) + " blocked without being learned");
    }
  }
  blocked_ += ids.size();
}

void Adversary::corrupt_distributors(std::span<const std::uint32_t> indices, int m, DistributorBehavior behavior) {
  if (static_cast<int>(indices.size()) > m / 3) {
    throw Error(Errc::kBudgetExceeded, std::to_string(indices.size()) + " corrupt distributors exceed floor(m/3) = " +
                                           std::to_string(m / 3));
  }
  for (std::uint32_t j : indices) {
    if (j < 1 || static_cast<int>(j) > m) throw Error(Errc::kPrecondition, "distributor index out of range");
  }
  corrupt_distributors_.assign(indices.begin(), indices.end());
  distributor_behavior_ = indices.empty() ? DistributorBehavior::kHonest : behavior;
}

}  // namespace bridgedist
