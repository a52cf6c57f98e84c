#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "bridgedist/adversary.hpp"
#include "bridgedist/agreement.hpp"
#include "bridgedist/field.hpp"
#include "bridgedist/network.hpp"
#include "bridgedist/session.hpp"
#include "bridgedist/wire.hpp"

namespace bridgedist {

/// SHA-256 over the values (8 bytes each, big-endian) followed by the nonce.
Digest commit_digest(std::span<const FieldElement> values, const Nonce& nonce);

struct Commitment {
  struct Opening {
    std::vector<FieldElement> values;
    Nonce nonce{};
  };

  Digest digest{};
  std::optional<Opening> opened;

  static Commitment commit(std::span<const FieldElement> values, const Nonce& nonce);
  bool verify(std::span<const FieldElement> values, const Nonce& nonce) const;
};

enum class DrgPhase : std::uint8_t { kCommit, kReveal, kAgree, kDone, kAborted };

/// One node's view of a DRG attempt.
struct DrgRound {
  DrgPhase phase = DrgPhase::kCommit;
  std::map<std::uint32_t, Commitment> commitments;               // as received
  std::map<std::uint32_t, std::vector<FieldElement>> reveals;    // verified openings only
  std::optional<std::vector<FieldElement>> result;               // Done only
};

struct DrgConfig {
  const PrimeField* field = nullptr;  // must outlive the run
  std::uint32_t m = 0;
  std::uint32_t f = 0;
  std::size_t width = 1;  // numbers generated together
  std::vector<std::uint32_t> corrupt;  // 1-based
  DistributorBehavior behavior = DistributorBehavior::kHonest;
  /// Replaces a node's random contribution; the node still commits to it and
  /// opens it correctly. Used for adversarially chosen values.
  std::function<std::optional<std::vector<FieldElement>>(std::uint32_t node, std::uint32_t attempt)> value_override;
  std::uint64_t seed = 0;  // per-node streams are derived from it
  SyncNetwork* net = nullptr;
  std::uint32_t retry_cap = 10;
  std::uint32_t phase_base = 0;
};

struct DrgAttempt {
  bool restart = false;
  std::vector<FieldElement> value;      // when not restarting
  std::vector<std::uint32_t> offenders;  // on restart; the same at every honest node
  std::vector<DrgRound> views;           // per node, index j - 1
};

/// Commit, reveal, then agreement on the candidate sum. A node's candidate is
/// the sum over every node that committed to it, or bottom when one of those
/// failed to open. After agreement each honest node announces whether its own
/// candidate differs, and a binary agreement on "someone objected" decides
/// between Done and Restart. On Restart the nodes exchange what they saw and
/// agree, node by node, on who deviated.
DrgAttempt drg_attempt(const DrgConfig& config, std::uint32_t attempt);

struct DrgOutcome {
  std::vector<FieldElement> value;
  std::uint32_t restarts = 0;
  std::vector<std::uint32_t> offender_log;  // across all restarts
};

/// Retries until an attempt completes. Throws Errc::kStalled after
/// `retry_cap` restarts and Errc::kPrecondition for f > floor(m/3).
DrgOutcome drg_run(const DrgConfig& config);

/// Maps a uniform field element to a pool index in [0, d). With `exact`,
/// values in the last partial block of the field are rejected (nullopt) so
/// the result is exactly uniform; otherwise plain modulo.
std::optional<std::uint32_t> index_from_random(FieldElement r, std::uint64_t d, std::uint64_t modulus, bool exact);

/// Assignment randomness produced jointly by the distributors. Results are
/// cached per draw context, so every replica of the session that asks for
/// the same context sees the same indices.
class DrgBeacon final : public AssignmentRandomness {
 public:
  enum class Granularity : std::uint8_t {
    kPerInstance,  // one agreed number per (round, instance), expanded by a public PRF
    kPerUser,      // one agreed number per user and instance
  };

  DrgBeacon(DrgConfig config, Granularity granularity, std::size_t instances_hint);

  void draw(const DrawContext& ctx, std::span<const UserId> users, std::uint32_t pool_size,
            std::span<std::uint32_t> out) override;

  /// Called before a distribution round with the current instance count.
  void set_instance_count(std::size_t instances) { instances_ = instances; }

  std::uint32_t runs() const noexcept { return runs_; }
  std::uint32_t restarts() const noexcept { return restarts_; }
  const std::vector<std::uint32_t>& offender_log() const noexcept { return offenders_; }
  bool exact_indices() const noexcept { return exact_; }

 private:
  std::vector<FieldElement> run(std::size_t width);

  DrgConfig config_;
  Granularity granularity_;
  std::size_t instances_;
  bool exact_;
  std::uint32_t runs_ = 0;
  std::uint32_t restarts_ = 0;
  std::vector<std::uint32_t> offenders_;
  // (kind, round, event) -> one number per instance
  std::map<std::tuple<std::uint8_t, std::uint32_t, std::uint64_t>, std::vector<FieldElement>> seeds_;
  // (kind, round, instance, event) -> indices
  std::map<std::tuple<std::uint8_t, std::uint32_t, std::uint64_t, std::uint64_t>, std::vector<std::uint32_t>> cache_;
};

}  // namespace bridgedist
