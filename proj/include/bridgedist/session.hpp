#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bridgedist/bridge_supply.hpp"
#include "bridgedist/random.hpp"

namespace bridgedist {

using UserId = std::uint64_t;

/// Why a batch of uniform bridge indices is being drawn.
enum class DrawKind : std::uint8_t { kDistribution = 1, kJoin = 2, kGrowth = 3 };

struct DrawContext {
  DrawKind kind = DrawKind::kDistribution;
  std::uint32_t round = 0;
  std::uint64_t instance = 0;
  std::uint64_t event = 0;  // join / growth counter; 0 for distribution rounds
};

/// Supplies the uniform choices of the distribution algorithm. A single
/// distributor draws them from a private seeded stream; the decentralized
/// protocol replaces this with jointly generated randomness.
class AssignmentRandomness {
 public:
  virtual ~AssignmentRandomness() = default;

  /// Fills out[u] with a uniform index in [0, pool_size) for users[u].
  virtual void draw(const DrawContext& ctx, std::span<const UserId> users, std::uint32_t pool_size,
                    std::span<std::uint32_t> out) = 0;
};

/// One independent stream per draw context, derived from a 64-bit seed.
class SeededRandomness final : public AssignmentRandomness {
 public:
  explicit SeededRandomness(std::uint64_t seed) : seed_(seed) {}

  void draw(const DrawContext& ctx, std::span<const UserId> users, std::uint32_t pool_size,
            std::span<std::uint32_t> out) override;

 private:
  std::uint64_t seed_;
};

/// When the unique-bridge fallback engages.
enum class FallbackRule : std::uint8_t {
  kPoolReachesUsers,   // d_i >= n
  kTotalReachesUsers,  // d_i * L >= n, i.e. d_i >= n / L
};

struct SessionOptions {
  FallbackRule fallback_rule = FallbackRule::kPoolReachesUsers;
};

struct InstanceState {
  std::vector<BridgeId> pool;           // B_1..B_{d_i}
  std::uint64_t blocked_count = 0;      // b_i: blocked members of pool
  std::vector<std::uint32_t> assignment;  // pool index per user slot
};

struct RoundPlan {
  std::uint32_t round = 0;
  std::uint64_t pool_size = 0;  // d_i; the number of users when fallback engaged
  bool fallback = false;
  std::vector<BridgeId> recruited;  // fresh bridges drawn from the supply
  std::vector<BridgeId> reused;     // unblocked bridges carried over from last round
};

/// L = max(1, ceil(3 log2 n)).
std::size_t instance_count_for(std::uint64_t n);

/// b >= 0.6 * 2^(round+4), evaluated exactly as 5b >= 3 * 2^(round+4).
bool threshold_reached(std::uint64_t blocked, std::uint32_t round);

/// Smallest blocked count that satisfies threshold_reached.
std::uint64_t blocks_to_advance(std::uint32_t round);

/// Distributor-side state of the adaptive distribution algorithm: L parallel
/// instances driven by one shared round counter. When any instance sees at
/// least 0.6 * 2^(i+4) of its pool blocked, every instance advances to pools
/// of 2^(i+5) unblocked bridges and every user gets a fresh uniform draw per
/// instance. Once the pool size reaches the fallback limit each user gets one
/// unique bridge instead and the session stops advancing.
class Session {
 public:
  /// Throws Errc::kEmptyUserSet, or Errc::kDuplicateUser on repeated ids.
  static Session create(std::span<const UserId> users, SessionOptions options = {});

  /// Runs one check of the advance rule; returns the distribution that
  /// happened, or nullopt when no instance crossed its threshold.
  std::optional<RoundPlan> advance_round_if_triggered(BridgeSupply& supply, AssignmentRandomness& rng);

  /// Marks bridges blocked and recounts b_i for every instance.
  void report_blocked(BridgeSupply& supply, std::span<const BridgeId> bridge_ids);

  /// One bridge per instance, or the single unique bridge in fallback mode.
  /// Empty before the first distribution. Throws Errc::kUnknownUser.
  std::vector<BridgeId> assignments_for(UserId user) const;

  /// Adds a user with one uniform bridge from each current pool (a fresh
  /// unique bridge in fallback mode), then applies handle_growth. Returns the
  /// bridges recruited. Throws Errc::kDuplicateUser.
  std::vector<BridgeId> join_user(UserId user, BridgeSupply& supply, AssignmentRandomness& rng);

  /// Once n has doubled since the last growth: adds three instances with fresh
  /// pools of 2^(i+4) bridges and gives every user one bridge in each. No-op
  /// below the doubling point. Returns the bridges recruited.
  std::vector<BridgeId> handle_growth(BridgeSupply& supply, AssignmentRandomness& rng);

  /// Removes a user; nothing is redistributed. Throws Errc::kUnknownUser.
  void leave_user(UserId user);

  /// Fallback mode only: swaps every blocked unique bridge for a fresh one.
  std::vector<BridgeId> replace_blocked_fallback(BridgeSupply& supply);

  bool threshold_crossed() const;
  std::uint64_t max_blocked_count() const;

  std::uint64_t n() const noexcept { return users_.size(); }
  std::uint32_t round() const noexcept { return round_; }
  std::size_t instance_count() const noexcept { return instances_.size(); }
  bool fallback_engaged() const noexcept { return fallback_; }
  std::uint64_t bridges_used_total() const noexcept { return bridges_used_; }
  std::uint64_t growth_baseline() const noexcept { return growth_baseline_; }
  const SessionOptions& options() const noexcept { return options_; }

  std::span<const UserId> users() const noexcept { return users_; }
  std::span<const InstanceState> instances() const noexcept { return instances_; }
  bool contains(UserId user) const { return slot_.count(user) != 0; }

  /// True when at least one bridge assigned to the user is unblocked.
  bool has_unblocked_bridge(UserId user, const BridgeSupply& supply) const;

  /// Every bridge currently handed to some user.
  std::vector<BridgeId> distributed_bridges() const;

  /// Checkpoint: {round, instances:[{pool, blocked_count, assignment}], users, metrics, ...}.
  /// `assignment` is parallel to `users`.
  nlohmann::json to_json() const;
  static Session from_json(const nlohmann::json& j);

 private:
  Session() = default;

  std::size_t slot_of(UserId user) const;
  bool should_fall_back(std::uint64_t pool_size) const;
  bool slot_has_unblocked(std::size_t slot, const BridgeSupply& supply) const;
  void recount_blocked(const BridgeSupply& supply);
  void fill_instance(InstanceState& inst, std::uint64_t pool_size, std::size_t instance_index, DrawContext ctx,
                     BridgeSupply& supply, AssignmentRandomness& rng, RoundPlan* plan);

  SessionOptions options_;
  std::vector<UserId> users_;
  std::unordered_map<UserId, std::size_t> slot_;
  std::vector<InstanceState> instances_;
  std::vector<BridgeId> unique_;  // per slot, fallback mode
  std::uint32_t round_ = 0;
  bool fallback_ = false;
  std::uint64_t bridges_used_ = 0;
  std::uint64_t growth_baseline_ = 0;
  std::uint64_t join_events_ = 0;
  std::uint64_t growth_events_ = 0;
};

}  // namespace bridgedist
