#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bridgedist/network.hpp"
#include "bridgedist/random.hpp"

namespace bridgedist {

/// Stands for "no value" (a distributor whose DRG view is incomplete).
inline constexpr std::uint64_t kBottom = UINT64_MAX;

struct AgreeContext {
  std::uint32_t step = 0;
  bool binary = false;  // binary steps carry 0, 1 or 2 (no proposal)
  std::uint32_t from = 0;  // 1-based node indices
  std::uint32_t to = 0;
  std::uint64_t honest_value = 0;  // what an honest node would send here
};

/// Decides what a corrupt node sends in each agreement step.
class ByzantineScript {
 public:
  virtual ~ByzantineScript() = default;
  /// nullopt sends nothing.
  virtual std::optional<std::uint64_t> send(const AgreeContext& ctx) = 0;
};

class SilentScript final : public ByzantineScript {
 public:
  std::optional<std::uint64_t> send(const AgreeContext&) override { return std::nullopt; }
};

/// Uniform junk: values below `bound` or bottom, and any of 0/1/2 in binary steps.
class RandomScript final : public ByzantineScript {
 public:
  RandomScript(std::uint64_t seed, std::uint64_t bound) : rng_(seed), bound_(bound) {}
  std::optional<std::uint64_t> send(const AgreeContext& ctx) override;

 private:
  Rng rng_;
  std::uint64_t bound_;
};

/// Tells even-numbered peers `a` and odd-numbered peers `b`; in binary steps
/// the split is 0 versus 1.
class ConflictingScript final : public ByzantineScript {
 public:
  ConflictingScript(std::uint64_t a, std::uint64_t b) : a_(a), b_(b) {}
  std::optional<std::uint64_t> send(const AgreeContext& ctx) override;

 private:
  std::uint64_t a_, b_;
};

struct AgreementSetup {
  std::uint32_t m = 0;
  std::uint32_t f = 0;
  std::vector<std::uint32_t> corrupt;  // 1-based, at most f of them
  ByzantineScript* script = nullptr;   // corrupt nodes are silent without one
  SyncNetwork* net = nullptr;          // optional; counts AgreeMsg traffic
  std::uint32_t phase_base = 0;        // keeps AgreeMsg phases of separate runs apart
};

struct AgreementOutcome {
  /// Per node (index j - 1). nullopt at an honest node is Failure; corrupt
  /// nodes always hold nullopt.
  std::vector<std::optional<std::uint64_t>> decided;
  std::vector<bool> honest;
  std::uint32_t steps = 0;

  /// The common decision of the honest nodes; nullopt for Failure.
  std::optional<std::uint64_t> honest_decision() const;
  bool honest_agree() const;
};

/// Synchronous multivalued agreement for m > 3f: a two-step reduction to a
/// binary decision ("was some value seen by m - f nodes?") followed by f + 1
/// three-step king phases. Honest nodes decide the same value or all report
/// Failure; when all honest nodes propose v they decide v. Throws
/// Errc::kPrecondition if f > floor(m/3) or more than f nodes are corrupt.
AgreementOutcome byzantine_agree(const AgreementSetup& setup, std::span<const std::uint64_t> proposed);

/// The binary king-phase agreement on its own; inputs are 0 or 1.
AgreementOutcome binary_agree(const AgreementSetup& setup, std::span<const std::uint8_t> bits);

/// Number of synchronous steps byzantine_agree takes for bound f.
constexpr std::uint32_t agreement_steps(std::uint32_t f) { return 2 + 3 * (f + 1); }

}  // namespace bridgedist
