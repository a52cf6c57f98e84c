#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bridgedist/bridge_supply.hpp"
#include "bridgedist/random.hpp"
#include "bridgedist/session.hpp"

namespace bridgedist {

enum class StrategyKind : std::uint8_t { kPrudent, kAggressive, kStochastic };

struct Strategy {
  StrategyKind kind = StrategyKind::kPrudent;
  double probability = 0.0;  // stochastic only

  static Strategy prudent() { return {StrategyKind::kPrudent, 0.0}; }
  static Strategy aggressive() { return {StrategyKind::kAggressive, 0.0}; }
  static Strategy stochastic(double q) { return {StrategyKind::kStochastic, q}; }

  /// "prudent", "aggressive" or "stochastic:<q>" with q in [0, 1].
  /// Throws Errc::kConfigInvalid.
  static Strategy parse(std::string_view text);
  std::string to_string() const;
};

/// How a corrupt distributor deviates from the protocol.
enum class DistributorBehavior : std::uint8_t {
  kHonest,
  kSilent,      // sends nothing
  kGarbage,     // sends uniformly random field elements in place of shares
  kEquivocate,  // shows different DRG commitments and openings to different peers
};

std::string_view to_string(DistributorBehavior b);
DistributorBehavior parse_distributor_behavior(std::string_view text);

/// Scripted corruption: `count` more users taken over at round `round`.
struct CorruptionEvent {
  std::uint32_t round = 1;
  std::uint64_t count = 0;
};

struct HeldBridge {
  std::uint32_t position = 0;  // index in the instance pool
  BridgeId id = 0;
};

/// The part of one instance the adversary can act on this round: the pool's
/// blocked count and the distinct unblocked bridges its corrupt users hold.
struct InstanceView {
  std::uint64_t blocked_count = 0;
  std::vector<HeldBridge> held;  // sorted by position
};

/// Censor controlling up to `budget` users. Corrupt users see exactly the
/// bridges delivered to them, and in each round the censor may block only
/// bridges its users hold in that round, at most one per user per instance.
class Adversary {
 public:
  Adversary(std::uint64_t budget, Strategy strategy, std::uint64_t seed, std::vector<CorruptionEvent> schedule = {});

  /// Corrupts the users scheduled for `round` (by default the whole budget at
  /// the first call), chosen uniformly among honest session members. Their
  /// current assignments become known. Returns the newly corrupted users.
  std::vector<UserId> corrupt_step(const Session& session, std::uint32_t round);

  /// Corrupts specific users. Throws Errc::kBudgetExceeded.
  void corrupt_users(std::span<const UserId> users, const Session& session);

  /// Adds every bridge currently assigned to a corrupt user to known_bridges.
  void observe(const Session& session);

  /// Per-instance views for this round; a single view in fallback mode.
  std::vector<InstanceView> views(const Session& session, const BridgeSupply& supply) const;

  /// Bridges to block now:
  ///  prudent    - the fewest held bridges of one instance that push it to the
  ///               advance threshold (the instance with the most leverage), or
  ///               nothing when no instance can reach it;
  ///  aggressive - every held unblocked bridge;
  ///  stochastic - each held unblocked bridge with probability q.
  std::vector<BridgeId> decide_blocks(std::uint32_t round, std::span<const InstanceView> views, bool fallback) const;

  /// Records blocks the censor carried out. Throws Errc::kContractViolation if
  /// one of them was never known.
  void record_blocked(std::span<const BridgeId> ids);

  /// Marks distributors as corrupt. Throws Errc::kBudgetExceeded above floor(m/3).
  void corrupt_distributors(std::span<const std::uint32_t> indices, int m, DistributorBehavior behavior);

  std::uint64_t budget() const noexcept { return budget_; }
  const Strategy& strategy() const noexcept { return strategy_; }
  bool is_corrupt(UserId u) const { return corrupted_set_.count(u) != 0; }
  std::span<const UserId> corrupted() const noexcept { return corrupted_; }
  const std::unordered_set<BridgeId>& known_bridges() const noexcept { return known_; }
  std::uint64_t blocked_so_far() const noexcept { return blocked_; }
  bool has_pending_corruption(std::uint32_t after_round) const;
  std::span<const std::uint32_t> corrupt_distributor_indices() const noexcept { return corrupt_distributors_; }
  DistributorBehavior distributor_behavior() const noexcept { return distributor_behavior_; }

 private:
  std::uint64_t scheduled_for(std::uint32_t round);

  std::uint64_t budget_;
  Strategy strategy_;
  std::uint64_t seed_;
  Rng rng_;
  std::vector<CorruptionEvent> schedule_;
  bool default_done_ = false;
  std::vector<UserId> corrupted_;
  std::unordered_set<UserId> corrupted_set_;
  std::unordered_set<BridgeId> known_;
  std::uint64_t blocked_ = 0;
  std::vector<std::uint32_t> corrupt_distributors_;
  DistributorBehavior distributor_behavior_ = DistributorBehavior::kHonest;
};

}  // namespace bridgedist
