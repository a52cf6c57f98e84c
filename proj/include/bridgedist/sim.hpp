#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bridgedist/adversary.hpp"
#include "bridgedist/session.hpp"

namespace bridgedist {

enum class Mode : std::uint8_t { kBasic, kLeader, kDecentralized };

std::string_view to_string(Mode mode);
/// "basic", "leader" or "decentralized". Throws Errc::kConfigInvalid.
Mode parse_mode(std::string_view text);

/// Scripted churn applied at the start of step `round`, before distribution.
struct ChurnEvent {
  std::uint32_t round = 1;
  std::uint64_t joins = 0;
  std::uint64_t leaves = 0;
};

struct SimConfig {
  std::uint64_t n = 1024;
  std::uint64_t t = 0;
  int m = 1;
  Mode mode = Mode::kBasic;
  Strategy strategy = Strategy::prudent();
  std::uint64_t seed = 1;
  std::optional<std::uint32_t> max_rounds;  // default: 2 * latency_bound(t) + 4
  std::vector<ChurnEvent> churn;            // basic mode only
  std::uint32_t trials = 1;
  std::vector<CorruptionEvent> corruption;  // empty: all t users at the start
  FallbackRule fallback_rule = FallbackRule::kPoolReachesUsers;
  std::uint32_t corrupt_distributors = 0;  // the highest indices; the leader stays honest
  DistributorBehavior distributor_behavior = DistributorBehavior::kGarbage;
  bool per_user_drg = false;         // decentralized: one agreed number per user and instance
  bool check_obliviousness = false;  // scan distributor snapshots every round

  /// Throws Errc::kConfigInvalid.
  void validate() const;
  std::uint32_t effective_max_rounds() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults. Throws Errc::kConfigInvalid.
  static SimConfig from_json(const nlohmann::json& j);
};

/// ceil(log2(ceil((t + 1) / 32))) + 1.
std::uint32_t latency_bound(std::uint64_t t);

/// (10t + 96) * log2(n).
double bridge_cost_bound(std::uint64_t t, std::uint64_t n);

struct RoundRecord {
  std::uint32_t round = 0;        // session round after this step's distribution
  std::uint64_t thirsty = 0;      // honest users without an unblocked bridge, after blocking
  std::uint64_t distributed = 0;  // d_i, or the number of users in fallback mode
  std::uint64_t blocked = 0;      // bridges blocked during this step
  std::uint64_t used = 0;         // M_i, unique bridges handed out so far
  std::uint64_t msgs_user = 0;    // most envelopes any user received
  std::uint64_t msgs_dist = 0;    // most envelopes any distributor sent plus received
  std::uint64_t msgs_user_min = 0;  // fewest envelopes any user received (multi-distributor modes)

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct MetricsSeries {
  std::vector<RoundRecord> rounds;
  std::uint32_t latency_rounds = 0;
  bool success = false;  // every honest user holds an unblocked bridge at the end
  bool hit_cap = false;
  bool fallback = false;
  std::uint64_t bridges_used_total = 0;
  std::uint64_t final_thirsty = 0;
  std::uint64_t blocked_total = 0;
  std::uint64_t reconstruct_failures = 0;
  std::uint32_t drg_restarts = 0;
  std::uint32_t drg_runs = 0;
  bool snapshots_checked = false;
  bool address_leaked = false;
  double max_comm_ratio = 0;  // max msgs_dist / (m^2 + n)
  std::uint64_t seed = 0;

  friend bool operator==(const MetricsSeries&, const MetricsSeries&) = default;
};

/// One seeded run. Each step: churn, distribution if the advance rule fires,
/// delivery (shares and reconstruction in the multi-distributor modes),
/// corruption, blocking, metrics. Stops once no threshold is crossed and no
/// corruption is pending, at fallback, or at the round cap. Throws
/// Errc::kConfigInvalid, Errc::kSupplyExhausted, Errc::kStalled, and
/// Errc::kContractViolation when replicas diverge or a user decodes a wrong
/// address.
MetricsSeries run_trial(const SimConfig& config);

/// Seed of trial k: the first 8 bytes of SHA-256(master big-endian || k big-endian).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t k);

struct Stat {
  double mean = 0;
  double min = 0;
  double max = 0;
};

struct AggregateRow {
  SimConfig config;
  std::uint32_t trials = 0;
  Stat latency;
  Stat bridges_used;
  Stat final_thirsty;
  Stat blocked;
  Stat msgs_user;
  Stat msgs_dist;
  std::uint32_t failures = 0;
  std::uint32_t cap_hits = 0;
  double failure_rate = 0;
  std::vector<MetricsSeries> runs;  // per trial, in trial order
};

/// Runs `trials` seeded trials of every config (falling back to each
/// config's own trial count when `trials` is 0), in parallel across
/// `threads` workers (0 = hardware concurrency).
std::vector<AggregateRow> run_experiment(std::span<const SimConfig> configs, std::uint32_t trials = 0,
                                         unsigned threads = 0);

/// Header plus one row per round: round,thirsty,distributed,blocked,used,msgs_user,msgs_dist.
/// Throws Errc::kIoFailure.
void emit_csv(const MetricsSeries& series, const std::filesystem::path& destination);
/// Header plus one row per config.
void emit_csv(std::span<const AggregateRow> table, const std::filesystem::path& destination);

/// RFC 4180 field quoting.
std::string csv_field(std::string_view text);

}  // namespace bridgedist
