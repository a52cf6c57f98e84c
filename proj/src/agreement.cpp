#include "bridgedist/agreement.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "bridgedist/errors.hpp"

namespace bridgedist {
namespace {

constexpr std::uint64_t kNoProposal = 2;                 // binary steps
constexpr std::uint64_t kNoPerception = UINT64_MAX - 1;  // multivalued second step

using Inbox = std::vector<std::optional<std::uint64_t>>;  // indexed by sender - 1

class Runner {
 public:
  explicit Runner(const AgreementSetup& s) : s_(s), honest_(s.m, true) {
    if (s.m == 0) throw Error(Errc::kPrecondition, "agreement needs at least one node");
    if (s.f > s.m / 3) {
      throw Error(Errc::kPrecondition,
                  "fault bound " + std::to_string(s.f) + " exceeds floor(m/3) = " + std::to_string(s.m / 3));
    }
    if (s.corrupt.size() > s.f) throw Error(Errc::kPrecondition, "more corrupt nodes than the fault bound");
    for (std::uint32_t j : s.corrupt) {
      if (j < 1 || j > s.m) throw Error(Errc::kPrecondition, "corrupt node index out of range");
      honest_[j - 1] = false;
    }
  }

  bool honest(std::uint32_t i) const { return honest_[i]; }
  const std::vector<bool>& honest_mask() const { return honest_; }
  std::uint32_t steps() const { return step_; }

  // One synchronous step. `values[i]` is what honest node i sends; only the
  // nodes with senders[i] set transmit. Returns inbox[to][from].
  std::vector<Inbox> exchange(bool binary, const std::vector<std::uint64_t>& values, const std::vector<bool>& senders) {
    const std::uint32_t step = step_++;
    std::vector<Inbox> inbox(s_.m, Inbox(s_.m));
    for (std::uint32_t from = 0; from < s_.m; ++from) {
      if (!senders[from]) continue;
      for (std::uint32_t to = 0; to < s_.m; ++to) {
        std::optional<std::uint64_t> v = values[from];
        if (!honest_[from]) {
          v = s_.script ? s_.script->send({step, binary, from + 1, to + 1, values[from]}) : std::nullopt;
        }
        if (!v) continue;
        if (from == to || !s_.net) {
          inbox[to][from] = v;
        } else {
          s_.net->send(distributor_endpoint(from + 1), distributor_endpoint(to + 1),
                       {AgreeMsg{s_.phase_base + step, {*v}}});
        }
      }
    }
    if (s_.net) {
      for (std::uint32_t to = 0; to < s_.m; ++to) {
        for (const auto& env : s_.net->deliver(distributor_endpoint(to + 1))) {
          const std::uint64_t from = env.from.id;
          if (env.from.kind != PartyKind::kDistributor || from < 1 || from > s_.m) continue;
          for (const auto& rec : env.records) {
            const auto* msg = std::get_if<AgreeMsg>(&rec);
            if (msg && msg->phase == s_.phase_base + step && msg->payload.size() == 1) {
              inbox[to][from - 1] = msg->payload[0];
            }
          }
        }
      }
    }
    return inbox;
  }

  std::vector<bool> everyone() const { return std::vector<bool>(s_.m, true); }

  // Binary king phases on per-node bits (honest entries only matter).
  void king_phases(std::vector<std::uint64_t>& v) {
    const std::uint32_t m = s_.m, f = s_.f;
    for (std::uint32_t king = 0; king <= f; ++king) {
      auto r1 = exchange(true, v, everyone());
      std::vector<std::uint64_t> proposal(m, kNoProposal);
      for (std::uint32_t i = 0; i < m; ++i) {
        std::uint32_t c[2] = {0, 0};
        for (const auto& x : r1[i]) {
          if (x && *x < 2) ++c[*x];
        }
        for (std::uint64_t b = 0; b < 2; ++b) {
          if (c[b] >= m - f) proposal[i] = b;
        }
      }

      auto r2 = exchange(true, proposal, everyone());
      std::vector<bool> strong(m, false);
      for (std::uint32_t i = 0; i < m; ++i) {
        std::uint32_t c[2] = {0, 0};
        for (const auto& x : r2[i]) {
          if (x && *x < 2) ++c[*x];
        }
        // Only one bit can have more than f supporters, since honest
        // proposals never conflict.
        if (c[0] > f || c[1] > f) v[i] = c[1] > c[0] ? 1 : 0;
        strong[i] = c[v[i]] >= m - f;
      }

      std::vector<bool> only_king(m, false);
      only_king[king] = true;
      auto r3 = exchange(true, v, only_king);
      for (std::uint32_t i = 0; i < m; ++i) {
        if (strong[i]) continue;
        const auto& kv = r3[i][king];
        v[i] = (kv && *kv == 1) ? 1 : 0;
      }
    }
  }

 private:
  const AgreementSetup& s_;
  std::vector<bool> honest_;
  std::uint32_t step_ = 0;
};

AgreementOutcome finish(const Runner& r, std::vector<std::optional<std::uint64_t>> decided) {
  AgreementOutcome out;
  out.honest = r.honest_mask();
  for (std::size_t i = 0; i < decided.size(); ++i) {
    if (!out.honest[i]) decided[i].reset();
  }
  out.decided = std::move(decided);
  out.steps = r.steps();
  return out;
}

}  // namespace

std::optional<std::uint64_t> RandomScript::send(const AgreeContext& ctx) {
  if (ctx.binary) return uniform_below(rng_, 3);
  const std::uint64_t x = uniform_below(rng_, bound_ + 1);
  return x == bound_ ? kBottom : x;
}

std::optional<std::uint64_t> ConflictingScript::send(const AgreeContext& ctx) {
  const bool even = ctx.to % 2 == 0;
  if (ctx.binary) return even ? 0 : 1;
  return even ? a_ : b_;
}

std::optional<std::uint64_t> AgreementOutcome::honest_decision() const {
  for (std::size_t i = 0; i < decided.size(); ++i) {
    if (honest[i]) return decided[i];
  }
  return std::nullopt;
}

bool AgreementOutcome::honest_agree() const {
  std::optional<std::optional<std::uint64_t>> first;
  for (std::size_t i = 0; i < decided.size(); ++i) {
    if (!honest[i]) continue;
    if (!first) {
      first = decided[i];
    } else if (*first != decided[i]) {
      return false;
    }
  }
  return true;
}

AgreementOutcome binary_agree(const AgreementSetup& setup, std::span<const std::uint8_t> bits) {
  Runner r(setup);
  if (bits.size() != setup.m) throw Error(Errc::kPrecondition, "one input bit per node required");
  std::vector<std::uint64_t> v(bits.begin(), bits.end());
  for (auto& b : v) b = b ? 1 : 0;
  r.king_phases(v);
  std::vector<std::optional<std::uint64_t>> decided(v.begin(), v.end());
  return finish(r, std::move(decided));
}

AgreementOutcome byzantine_agree(const AgreementSetup& setup, std::span<const std::uint64_t> proposed) {
  Runner r(setup);
  const std::uint32_t m = setup.m, f = setup.f;
  if (proposed.size() != m) throw Error(Errc::kPrecondition, "one proposal per node required");

  // Step 1: keep a value only if m - f nodes sent it.
  auto r1 = r.exchange(false, std::vector<std::uint64_t>(proposed.begin(), proposed.end()), r.everyone());
  std::vector<std::uint64_t> perceived(m, kNoPerception);
  for (std::uint32_t i = 0; i < m; ++i) {
    std::map<std::uint64_t, std::uint32_t> count;
    for (const auto& x : r1[i]) {
      if (x) ++count[*x];
    }
    for (const auto& [value, c] : count) {
      if (c >= m - f) perceived[i] = value;
    }
  }

  // Step 2: the most supported perception, and whether it is safe to vote for.
  auto r2 = r.exchange(false, perceived, r.everyone());
  std::vector<std::uint64_t> candidate(m, kBottom);
  std::vector<std::uint64_t> vote(m, 0);
  for (std::uint32_t i = 0; i < m; ++i) {
    std::map<std::uint64_t, std::uint32_t> count;
    for (const auto& x : r2[i]) {
      if (x && *x != kNoPerception) ++count[*x];
    }
    std::uint32_t best = 0;
    for (const auto& [value, c] : count) {
      if (c > best) {
        best = c;
        candidate[i] = value;
      }
    }
    vote[i] = best >= m - f ? 1 : 0;
  }

  r.king_phases(vote);
  std::vector<std::optional<std::uint64_t>> decided(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    if (vote[i] == 1) decided[i] = candidate[i];
  }
  return finish(r, std::move(decided));
}

}  // namespace bridgedist
