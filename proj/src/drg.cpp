#include "bridgedist/drg.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <string>

#include "bridgedist/errors.hpp"

namespace bridgedist {
namespace {

constexpr std::uint32_t kConsensusPhase = 0x100;
constexpr std::uint32_t kObjectionPhase = 0x200;
constexpr std::uint32_t kObjectionAgreePhase = 0x300;
constexpr std::uint32_t kViewPhase = 0x400;
constexpr std::uint32_t kBlamePhase = 0x1000;

struct Contribution {
  std::vector<FieldElement> values;
  Nonce nonce{};
  Digest digest{};
};

Contribution make_contribution(const PrimeField& field, std::size_t width, Rng& rng) {
  Contribution c;
  c.values.reserve(width);
  for (std::size_t k = 0; k < width; ++k) c.values.push_back(field.random(rng));
  for (std::size_t k = 0; k < c.nonce.size(); k += 8) {
    const std::uint64_t w = rng();
    for (std::size_t b = 0; b < 8; ++b) c.nonce[k + b] = static_cast<std::uint8_t>(w >> (8 * b));
  }
  c.digest = commit_digest(c.values, c.nonce);
  return c;
}

// Echoes the protocol-conforming value; corrupt nodes that only cheat on
// their DRG contribution follow the agreement honestly.
class EchoScript final : public ByzantineScript {
 public:
  std::optional<std::uint64_t> send(const AgreeContext& ctx) override { return ctx.honest_value; }
};

std::unique_ptr<ByzantineScript> script_for(DistributorBehavior b, std::uint64_t seed) {
  switch (b) {
    case DistributorBehavior::kSilent: return std::make_unique<SilentScript>();
    case DistributorBehavior::kEquivocate: return std::make_unique<ConflictingScript>(seed % 1000, seed % 1000 + 1);
    case DistributorBehavior::kHonest:
    case DistributorBehavior::kGarbage: return std::make_unique<EchoScript>();
  }
  return std::make_unique<SilentScript>();
}

// A 62-bit fingerprint, clear of the agreement's reserved values.
std::uint64_t fingerprint(std::span<const FieldElement> values) {
  if (values.size() == 1) return values[0].value;
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (const auto& v : values) put_u64_be(bytes, v.value);
  return digest_prefix(sha256(bytes)) >> 2;
}

}  // namespace

Digest commit_digest(std::span<const FieldElement> values, const Nonce& nonce) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8 + nonce.size());
  for (const auto& v : values) put_u64_be(bytes, v.value);
  bytes.insert(bytes.end(), nonce.begin(), nonce.end());
  return sha256(bytes);
}

Commitment Commitment::commit(std::span<const FieldElement> values, const Nonce& nonce) {
  return {commit_digest(values, nonce), std::nullopt};
}

bool Commitment::verify(std::span<const FieldElement> values, const Nonce& nonce) const {
  return commit_digest(values, nonce) == digest;
}

DrgAttempt drg_attempt(const DrgConfig& cfg, std::uint32_t attempt) {
  if (!cfg.field) throw Error(Errc::kPrecondition, "DRG needs a field");
  if (cfg.m == 0 || cfg.width == 0) throw Error(Errc::kPrecondition, "DRG needs nodes and a nonzero width");
  if (cfg.f > cfg.m / 3) throw Error(Errc::kPrecondition, "fault bound exceeds floor(m/3)");
  if (cfg.corrupt.size() > cfg.f) throw Error(Errc::kPrecondition, "more corrupt nodes than the fault bound");

  const PrimeField& field = *cfg.field;
  const std::uint32_t m = cfg.m;
  const std::uint32_t base = cfg.phase_base + attempt * 0x10000;
  std::vector<bool> honest(m, true);
  for (std::uint32_t j : cfg.corrupt) {
    if (j < 1 || j > m) throw Error(Errc::kPrecondition, "corrupt node index out of range");
    honest[j - 1] = false;
  }
  const DistributorBehavior bad = cfg.behavior;
  SyncNetwork local;
  SyncNetwork& net = cfg.net ? *cfg.net : local;

  // Contributions; an equivocator keeps a second one for odd-numbered peers.
  std::vector<Contribution> primary(m), alternate(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    Rng rng(derive_seed(cfg.seed, {0xD6'C0'11ULL, j + 1, attempt}));
    primary[j] = make_contribution(field, cfg.width, rng);
    if (cfg.value_override) {
      if (auto chosen = cfg.value_override(j + 1, attempt)) {
        if (chosen->size() != cfg.width) throw Error(Errc::kPrecondition, "override width mismatch");
        primary[j].values = std::move(*chosen);
        primary[j].digest = commit_digest(primary[j].values, primary[j].nonce);
      }
    }
    if (honest[j]) continue;
    if (bad == DistributorBehavior::kEquivocate) {
      alternate[j] = make_contribution(field, cfg.width, rng);
      if (alternate[j].values == primary[j].values) {
        alternate[j].values[0] = field.add(alternate[j].values[0], field.element(1));
        alternate[j].digest = commit_digest(alternate[j].values, alternate[j].nonce);
      }
    }
  }
  auto contribution_for = [&](std::uint32_t from, std::uint32_t to) -> const Contribution* {
    if (honest[from]) return &primary[from];
    switch (bad) {
      case DistributorBehavior::kSilent: return nullptr;
      case DistributorBehavior::kEquivocate: return (to + 1) % 2 == 0 ? &primary[from] : &alternate[from];
      default: return &primary[from];
    }
  };

  DrgAttempt out;
  out.views.resize(m);
  auto& views = out.views;

  // Commit.
  for (std::uint32_t from = 0; from < m; ++from) {
    for (std::uint32_t to = 0; to < m; ++to) {
      const Contribution* c = contribution_for(from, to);
      if (!c) continue;
      if (from == to) {
        views[to].commitments[from + 1] = Commitment::commit(c->values, c->nonce);
      } else {
        net.send(distributor_endpoint(from + 1), distributor_endpoint(to + 1), {DrgCommit{from + 1, c->digest}});
      }
    }
  }
  for (std::uint32_t to = 0; to < m; ++to) {
    for (const auto& env : net.deliver(distributor_endpoint(to + 1))) {
      for (const auto& rec : env.records) {
        const auto* msg = std::get_if<DrgCommit>(&rec);
        // Channels are authenticated: a commitment counts for its sender only.
        if (msg && msg->index == env.from.id) views[to].commitments[msg->index] = {msg->digest, std::nullopt};
      }
    }
    views[to].phase = DrgPhase::kReveal;
  }

  // Reveal.
  for (std::uint32_t from = 0; from < m; ++from) {
    for (std::uint32_t to = 0; to < m; ++to) {
      const Contribution* c = contribution_for(from, to);
      if (!c) continue;
      if (from == to) {
        views[to].reveals[from + 1] = c->values;
        views[to].commitments[from + 1].opened = Commitment::Opening{c->values, c->nonce};
      } else {
        net.send(distributor_endpoint(from + 1), distributor_endpoint(to + 1), {DrgReveal{from + 1, c->values, c->nonce}});
      }
    }
  }
  for (std::uint32_t to = 0; to < m; ++to) {
    for (const auto& env : net.deliver(distributor_endpoint(to + 1))) {
      for (const auto& rec : env.records) {
        const auto* msg = std::get_if<DrgReveal>(&rec);
        if (!msg || msg->index != env.from.id) continue;
        auto it = views[to].commitments.find(msg->index);
        if (it == views[to].commitments.end() || msg->values.size() != cfg.width) continue;
        if (!std::all_of(msg->values.begin(), msg->values.end(), [&](FieldElement v) { return field.contains(v); })) continue;
        if (!it->second.verify(msg->values, msg->nonce)) continue;
        it->second.opened = Commitment::Opening{msg->values, msg->nonce};
        views[to].reveals[msg->index] = msg->values;
      }
    }
    views[to].phase = DrgPhase::kAgree;
  }

  // Candidates: the sum over everyone who committed, unless someone did not open.
  std::vector<std::optional<std::vector<FieldElement>>> candidate(m);
  std::vector<std::uint64_t> proposal(m, kBottom);
  for (std::uint32_t i = 0; i < m; ++i) {
    std::vector<FieldElement> sum(cfg.width, field.element(0));
    bool complete = true;
    for (const auto& [j, c] : views[i].commitments) {
      auto it = views[i].reveals.find(j);
      if (it == views[i].reveals.end()) {
        complete = false;
        break;
      }
      for (std::size_t k = 0; k < cfg.width; ++k) sum[k] = field.add(sum[k], it->second[k]);
    }
    if (complete) {
      proposal[i] = fingerprint(sum);
      candidate[i] = std::move(sum);
    }
  }

  auto script = script_for(bad, derive_seed(cfg.seed, {0x5C'41'97ULL, attempt}));
  AgreementSetup setup{m, cfg.f, cfg.corrupt, script.get(), &net, base + kConsensusPhase};
  const auto consensus = byzantine_agree(setup, proposal);
  const auto decided = consensus.honest_decision();

  bool abort = !decided || *decided == kBottom;
  if (!abort) {
    // Objection round: anyone whose own candidate differs says so.
    std::vector<std::uint8_t> objection(m, 0);
    for (std::uint32_t i = 0; i < m; ++i) objection[i] = proposal[i] != *decided ? 1 : 0;
    for (std::uint32_t from = 0; from < m; ++from) {
      std::optional<std::uint64_t> bit = objection[from];
      for (std::uint32_t to = 0; to < m; ++to) {
        if (!honest[from]) bit = script->send({kObjectionPhase, true, from + 1, to + 1, objection[from]});
        if (!bit || from == to) continue;
        net.send(distributor_endpoint(from + 1), distributor_endpoint(to + 1), {AgreeMsg{base + kObjectionPhase, {*bit}}});
      }
    }
    std::vector<std::uint8_t> heard = objection;
    for (std::uint32_t to = 0; to < m; ++to) {
      for (const auto& env : net.deliver(distributor_endpoint(to + 1))) {
        for (const auto& rec : env.records) {
          const auto* msg = std::get_if<AgreeMsg>(&rec);
          if (msg && msg->phase == base + kObjectionPhase && msg->payload.size() == 1 && msg->payload[0] == 1) heard[to] = 1;
        }
      }
    }
    setup.phase_base = base + kObjectionAgreePhase;
    abort = binary_agree(setup, heard).honest_decision().value_or(1) == 1;
  }

  if (!abort) {
    for (std::uint32_t i = 0; i < m; ++i) {
      if (!honest[i]) continue;
      views[i].phase = DrgPhase::kDone;
      views[i].result = candidate[i];
      if (out.value.empty()) out.value = *candidate[i];
    }
    return out;
  }

  // Restart. Everyone reports the digest it received from each node, and
  // whether that node's opening checked out.
  out.restart = true;
  for (std::uint32_t i = 0; i < m; ++i) views[i].phase = DrgPhase::kAborted;
  auto report_of = [&](std::uint32_t i) {
    std::vector<std::uint64_t> r;
    r.reserve(2 * m);
    for (std::uint32_t j = 1; j <= m; ++j) {
      auto it = views[i].commitments.find(j);
      r.push_back(it == views[i].commitments.end() ? 0 : digest_prefix(it->second.digest));
      r.push_back(views[i].reveals.count(j) ? 1 : 0);
    }
    return r;
  };
  for (std::uint32_t from = 0; from < m; ++from) {
    if (!honest[from] && bad == DistributorBehavior::kSilent) continue;
    const auto report = report_of(from);
    for (std::uint32_t to = 0; to < m; ++to) {
      if (from != to) net.send(distributor_endpoint(from + 1), distributor_endpoint(to + 1), {AgreeMsg{base + kViewPhase, report}});
    }
  }
  std::vector<std::vector<std::uint8_t>> suspects(m, std::vector<std::uint8_t>(m, 0));  // [observer][node]
  for (std::uint32_t to = 0; to < m; ++to) {
    std::vector<std::vector<std::uint64_t>> reports{report_of(to)};
    for (const auto& env : net.deliver(distributor_endpoint(to + 1))) {
      for (const auto& rec : env.records) {
        const auto* msg = std::get_if<AgreeMsg>(&rec);
        if (msg && msg->phase == base + kViewPhase && msg->payload.size() == 2 * m) reports.push_back(msg->payload);
      }
    }
    const auto& own = reports.front();
    for (std::uint32_t j = 0; j < m; ++j) {
      const bool unopened = own[2 * j] != 0 && own[2 * j + 1] == 0;
      const bool conflicting = std::any_of(reports.begin(), reports.end(),
                                           [&](const auto& r) { return r[2 * j] != own[2 * j]; });
      suspects[to][j] = unopened || conflicting ? 1 : 0;
    }
  }
  for (std::uint32_t j = 0; j < m; ++j) {
    std::vector<std::uint8_t> bits(m);
    for (std::uint32_t i = 0; i < m; ++i) bits[i] = suspects[i][j];
    setup.phase_base = base + kBlamePhase + j * 0x100;
    if (binary_agree(setup, bits).honest_decision().value_or(0) == 1) out.offenders.push_back(j + 1);
  }
  return out;
}

DrgOutcome drg_run(const DrgConfig& config) {
  DrgOutcome out;
  for (std::uint32_t attempt = 0; attempt <= config.retry_cap; ++attempt) {
    auto a = drg_attempt(config, attempt);
    if (!a.restart) {
      out.value = std::move(a.value);
      return out;
    }
    ++out.restarts;
    out.offender_log.insert(out.offender_log.end(), a.offenders.begin(), a.offenders.end());
  }
  std::string who;
  for (std::uint32_t j : std::set<std::uint32_t>(out.offender_log.begin(), out.offender_log.end())) {
    who += (who.empty() ? "" : ",") + std::to_string(j);
  }
  throw Error(Errc::kStalled, "DRG restarted " + std::to_string(out.restarts) + " times; offenders {" + who + "}");
}

std::optional<std::uint32_t> index_from_random(FieldElement r, std::uint64_t d, std::uint64_t modulus, bool exact) {
  if (d == 0) throw Error(Errc::kPrecondition, "empty pool");
  if (exact && r.value >= modulus - modulus % d) return std::nullopt;
  return static_cast<std::uint32_t>(r.value % d);
}

DrgBeacon::DrgBeacon(DrgConfig config, Granularity granularity, std::size_t instances_hint)
    : config_(std::move(config)),
      granularity_(granularity),
      instances_(instances_hint),
      exact_(config_.field && config_.field->modulus() < (std::uint64_t{1} << 32)) {
  if (!config_.field) throw Error(Errc::kPrecondition, "DRG beacon needs a field");
}

std::vector<FieldElement> DrgBeacon::run(std::size_t width) {
  DrgConfig cfg = config_;
  cfg.width = width;
  cfg.seed = derive_seed(config_.seed, {runs_});
  cfg.phase_base = (runs_ % 0x1000) * 0x100000;
  ++runs_;
  auto outcome = drg_run(cfg);
  restarts_ += outcome.restarts;
  offenders_.insert(offenders_.end(), outcome.offender_log.begin(), outcome.offender_log.end());
  return std::move(outcome.value);
}

void DrgBeacon::draw(const DrawContext& ctx, std::span<const UserId> users, std::uint32_t pool_size,
                     std::span<std::uint32_t> out) {
  const auto kind = static_cast<std::uint8_t>(ctx.kind);
  if (granularity_ == Granularity::kPerInstance) {
    auto key = std::make_tuple(kind, ctx.round, ctx.event);
    auto it = seeds_.find(key);
    if (it == seeds_.end()) it = seeds_.emplace(key, run(std::max<std::size_t>(instances_, 1))).first;
    if (ctx.instance >= it->second.size()) {
      throw Error(Errc::kContractViolation, "draw for an instance the beacon was not sized for");
    }
    // Public expansion: a stream keyed by the agreed number and the context.
    std::vector<std::uint8_t> bytes;
    for (std::uint64_t w : {it->second[ctx.instance].value, std::uint64_t{kind}, std::uint64_t{ctx.round}, ctx.instance, ctx.event}) {
      put_u64_be(bytes, w);
    }
    Rng rng(digest_prefix(sha256(bytes)));
    for (std::size_t u = 0; u < users.size(); ++u) out[u] = static_cast<std::uint32_t>(uniform_below(rng, pool_size));
    return;
  }

  auto key = std::make_tuple(kind, ctx.round, ctx.instance, ctx.event);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    std::vector<std::optional<std::uint32_t>> picked(users.size());
    std::size_t missing = users.size();
    while (missing > 0) {
      const auto values = run(missing);
      std::size_t k = 0;
      for (auto& p : picked) {
        if (!p) p = index_from_random(values[k++], pool_size, config_.field->modulus(), exact_);
      }
      missing = static_cast<std::size_t>(std::count(picked.begin(), picked.end(), std::nullopt));
    }
    std::vector<std::uint32_t> indices;
    indices.reserve(picked.size());
    for (const auto& p : picked) indices.push_back(*p);
    it = cache_.emplace(key, std::move(indices)).first;
  }
  if (it->second.size() != users.size()) throw Error(Errc::kContractViolation, "replicas disagree on the user set");
  std::copy(it->second.begin(), it->second.end(), out.begin());
}

}  // namespace bridgedist
