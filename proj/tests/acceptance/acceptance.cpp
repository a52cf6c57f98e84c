// Acceptance harness. Usage: bridgedist_acceptance [criterion...]
// With no arguments every criterion runs. Prints one PASS/FAIL line per
// criterion and exits non-zero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bridgedist/agreement.hpp"
#include "bridgedist/distributors.hpp"
#include "bridgedist/drg.hpp"
#include "bridgedist/errors.hpp"
#include "bridgedist/polynomial.hpp"
#include "bridgedist/secret_sharing.hpp"
#include "bridgedist/sim.hpp"

using namespace bridgedist;

namespace {

// Pinned thresholds.
constexpr std::uint32_t kLatencySeeds = 10;
constexpr double kStochasticQ = 0.5;
constexpr std::uint32_t kRobustnessTrials = 2000;
constexpr std::uint32_t kRobustnessMaxFailures = 1;
constexpr std::uint32_t kShapeTrials = 10;
constexpr int kSecretsPerPattern = 10;
constexpr std::uint64_t kOracleModulus = 31;
constexpr int kOracleMaxTau = 2;
constexpr int kOracleMaxPoints = 7;
constexpr std::uint64_t kDrgModulus = 17;
constexpr std::uint64_t kDrgRuns = 10000;
constexpr double kChiSquare16At001 = 32.000;  // 16 degrees of freedom, significance 0.01
constexpr std::uint64_t kEquivocationRuns = 200;
constexpr double kCommConstant = 8.0;
constexpr std::uint32_t kCommSeeds = 3;
constexpr std::uint64_t kMasterSeed = 20130101;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

SimConfig basic_config(std::uint64_t n, std::uint64_t t, Strategy strategy) {
  SimConfig c;
  c.n = n;
  c.t = t;
  c.strategy = strategy;
  c.seed = kMasterSeed;
  return c;
}

const std::vector<Strategy>& strategies() {
  static const std::vector<Strategy> all{Strategy::prudent(), Strategy::aggressive(), Strategy::stochastic(kStochasticQ)};
  return all;
}

// Criteria 1 and 2 share the same runs.
const std::vector<AggregateRow>& latency_runs() {
  static const std::vector<AggregateRow> rows = [] {
    std::vector<SimConfig> configs;
    for (std::uint64_t t : {0, 1, 31, 32, 180, 511, 1023}) {
      for (const auto& s : strategies()) configs.push_back(basic_config(1024, t, s));
    }
    return run_experiment(configs, kLatencySeeds);
  }();
  return rows;
}

Verdict latency_bound_check() {
  std::string misses;
  bool pass = true;
  for (const auto& row : latency_runs()) {
    const auto bound = latency_bound(row.config.t);
    const bool prudent = row.config.strategy.kind == StrategyKind::kPrudent;
    for (const auto& run : row.runs) {
      const bool ok = !run.hit_cap && (prudent ? run.latency_rounds == bound : run.latency_rounds <= bound);
      if (!ok) {
        pass = false;
        misses += fmt(" t=%llu/%s:%u(bound %u)", static_cast<unsigned long long>(row.config.t),
                      row.config.strategy.to_string().c_str(), run.latency_rounds, bound);
        break;  // one example per configuration
      }
    }
  }
  return {pass, pass ? "all 210 runs within the bound, prudent exact" : "mismatches:" + misses};
}

Verdict bridge_cost_check() {
  double worst = 0;
  std::string misses;
  for (const auto& row : latency_runs()) {
    const double bound = bridge_cost_bound(row.config.t, row.config.n);
    for (const auto& run : row.runs) {
      worst = std::max(worst, static_cast<double>(run.bridges_used_total) / bound);
      if (static_cast<double>(run.bridges_used_total) > bound) {
        misses += fmt(" t=%llu/%s:%llu>%.0f", static_cast<unsigned long long>(row.config.t),
                      row.config.strategy.to_string().c_str(),
                      static_cast<unsigned long long>(run.bridges_used_total), bound);
      }
    }
  }
  return {misses.empty(), misses.empty() ? fmt("max used/bound = %.3f", worst) : "exceeded:" + misses};
}

Verdict robustness_check() {
  std::vector<SimConfig> configs;
  for (const auto& s : strategies()) configs.push_back(basic_config(256, 32, s));
  const auto rows = run_experiment(configs, kRobustnessTrials);
  bool pass = true;
  std::string detail;
  for (const auto& row : rows) {
    pass &= row.failures <= kRobustnessMaxFailures;
    detail += fmt("%s%s failures=%u/%u", detail.empty() ? "" : ", ", row.config.strategy.to_string().c_str(),
                  row.failures, row.trials);
  }
  return {pass, detail};
}

Verdict shape_check() {
  std::vector<SimConfig> configs;
  for (std::uint64_t t = 0; t < 1024; ++t) configs.push_back(basic_config(1024, t, Strategy::prudent()));
  const auto rows = run_experiment(configs, kShapeTrials);

  std::string problems;
  for (std::size_t t = 1; t < rows.size(); ++t) {
    if (rows[t].latency.mean < rows[t - 1].latency.mean) problems += fmt(" latency drops at t=%zu;", t);
    if (rows[t].bridges_used.mean < rows[t - 1].bridges_used.mean) problems += fmt(" bridges drop at t=%zu;", t);
  }

  // Staircase: latency is flat between consecutive thresholds 32*2^j and steps
  // by exactly one across each of them.
  std::vector<std::uint64_t> edges{0};
  for (std::uint64_t e = 32; e < 1024; e *= 2) edges.push_back(e);
  edges.push_back(1024);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double expected = latency_bound(edges[k]);
    for (std::uint64_t t = edges[k]; t < edges[k + 1]; ++t) {
      if (rows[t].latency.mean != expected) {
        problems += fmt(" latency %.2f at t=%llu, step expects %.0f;", rows[t].latency.mean,
                        static_cast<unsigned long long>(t), expected);
        break;  // first deviation per step
      }
    }
  }
  std::uint32_t per_seed_drops = 0;
  for (std::size_t t = 1; t < rows.size(); ++t) {
    for (std::uint32_t k = 0; k < kShapeTrials; ++k) {
      per_seed_drops += rows[t].runs[k].latency_rounds < rows[t - 1].runs[k].latency_rounds;
    }
  }
  const std::string summary = fmt("1024 t values x %u trials, per-seed latency drops=%u", kShapeTrials, per_seed_drops);
  return {problems.empty(), problems.empty() ? summary : summary + ";" + problems};
}

Verdict sharing_check() {
  const PrimeField field;
  const auto policy = SharingPolicy::for_distributors(10);
  Rng rng(kMasterSeed);
  int patterns = 0, failures = 0;
  for (int a = 0; a < 10; ++a) {
    for (int b = a + 1; b < 10; ++b) {
      for (int c = b + 1; c < 10; ++c) {
        ++patterns;
        for (int k = 0; k < kSecretsPerPattern; ++k) {
          const FieldElement secret = field.random(rng);
          auto shares = share(field, secret, policy, rng, 1);
          for (int pos : {a, b, c}) {
            FieldElement bad;
            do {
              bad = field.random(rng);
            } while (bad == shares[pos].value);
            shares[pos].value = bad;
          }
          try {
            failures += reconstruct(field, shares, policy) != secret;
          } catch (const Error&) {
            ++failures;
          }
        }
      }
    }
  }
  return {patterns == 120 && failures == 0, fmt("%d patterns x %d secrets, failures=%d", patterns, kSecretsPerPattern, failures)};
}

// Every polynomial of degree <= tau over F_31, evaluated at x = 1..eta.
struct Codebook {
  std::vector<std::vector<std::uint8_t>> evals;
  std::vector<std::vector<std::uint64_t>> coeffs;
};

Codebook codebook(const PrimeField& f, int tau, int eta) {
  Codebook book;
  const std::uint64_t p = f.modulus();
  std::uint64_t total = 1;
  for (int k = 0; k <= tau; ++k) total *= p;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::vector<std::uint64_t> c(tau + 1);
    std::uint64_t rest = code;
    for (auto& ck : c) {
      ck = rest % p;
      rest /= p;
    }
    std::vector<std::uint8_t> e(eta);
    for (int x = 1; x <= eta; ++x) {
      std::uint64_t acc = 0;
      for (int k = tau; k >= 0; --k) acc = (acc * x + c[k]) % p;
      e[x - 1] = static_cast<std::uint8_t>(acc);
    }
    book.evals.push_back(std::move(e));
    book.coeffs.push_back(std::move(c));
  }
  return book;
}

// Compares the decoder on one received word against the brute-force list of
// codewords within distance epsilon, for every admissible epsilon.
struct OracleTally {
  std::uint64_t cases = 0;
  std::uint64_t inside_radius = 0;  // mismatches with 2*eps + tau < eta
  std::uint64_t at_boundary = 0;    // mismatches with 2*eps + tau == eta
};

void compare_with_oracle(const PrimeField& f, const Codebook& book, const std::vector<std::uint8_t>& word, int tau,
                         OracleTally& tally) {
  const int eta = static_cast<int>(word.size());
  std::vector<int> dist(book.evals.size());
  for (std::size_t k = 0; k < book.evals.size(); ++k) {
    int d = 0;
    for (int i = 0; i < eta; ++i) d += book.evals[k][i] != word[i];
    dist[k] = d;
  }
  std::vector<Point> points;
  for (int i = 0; i < eta; ++i) points.push_back({{static_cast<std::uint64_t>(i + 1)}, {word[i]}});
  for (int eps = 0; eps <= max_decodable_errors(eta, tau); ++eps) {
    ++tally.cases;
    std::set<std::vector<std::uint64_t>> within;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      if (dist[k] <= eps) within.insert(book.coeffs[k]);
    }
    std::optional<std::vector<std::uint64_t>> got;
    try {
      const Polynomial poly = berlekamp_welch_decode(f, points, tau, eps);
      std::vector<std::uint64_t> c(tau + 1, 0);
      for (int k = 0; k <= tau; ++k) c[k] = poly.coefficient(k).value;
      got = c;
    } catch (const Error& e) {
      if (e.code() != Errc::kDecodeFailure) throw;
    }
    bool agree = within.empty() == !got.has_value() && (!got || within.count(*got));
    if (got && 2 * eps + tau < eta) agree &= within.size() == 1;  // unique inside the radius
    if (!agree) ++(2 * eps + tau < eta ? tally.inside_radius : tally.at_boundary);
  }
}

Verdict berlekamp_welch_check() {
  const PrimeField f(kOracleModulus);
  Rng rng(kMasterSeed);
  OracleTally tally;
  for (int tau = 0; tau <= kOracleMaxTau; ++tau) {
    for (int eta = tau + 1; eta <= kOracleMaxPoints; ++eta) {
      const Codebook book = codebook(f, tau, eta);
      // Every received word when that is small enough.
      std::uint64_t words = 1;
      for (int i = 0; i < eta; ++i) words *= kOracleModulus;
      if (words * book.evals.size() <= 50'000'000) {
        for (std::uint64_t w = 0; w < words; ++w) {
          std::vector<std::uint8_t> word(eta);
          std::uint64_t rest = w;
          for (auto& v : word) {
            v = static_cast<std::uint8_t>(rest % kOracleModulus);
            rest /= kOracleModulus;
          }
          compare_with_oracle(f, book, word, tau, tally);
        }
        continue;
      }
      // Otherwise: a few codewords, every error-position subset with random
      // nonzero offsets, plus uniformly random words.
      for (int sample = 0; sample < 4; ++sample) {
        const auto& base = book.evals[uniform_below(rng, book.evals.size())];
        for (std::uint32_t mask = 0; mask < (1u << eta); ++mask) {
          std::vector<std::uint8_t> word = base;
          for (int i = 0; i < eta; ++i) {
            if (mask >> i & 1) word[i] = static_cast<std::uint8_t>((word[i] + 1 + uniform_below(rng, kOracleModulus - 1)) % kOracleModulus);
          }
          compare_with_oracle(f, book, word, tau, tally);
        }
      }
      for (int sample = 0; sample < 64; ++sample) {
        std::vector<std::uint8_t> word(eta);
        for (auto& v : word) v = static_cast<std::uint8_t>(uniform_below(rng, kOracleModulus));
        compare_with_oracle(f, book, word, tau, tally);
      }
    }
  }
  // Epsilon ranges over the decoder's whole admissible domain, up to the
  // (eta - tau + 1) / 2 bound. When eta - tau is even the top value sits one
  // past the unique-decoding radius, where the key-equation system has a free
  // dimension; the two mismatch counts are reported apart.
  const bool pass = tally.inside_radius == 0 && tally.at_boundary == 0;
  return {pass, fmt("%llu decoder calls compared, mismatches inside unique radius=%llu, at 2*eps+tau=eta=%llu",
                    static_cast<unsigned long long>(tally.cases), static_cast<unsigned long long>(tally.inside_radius),
                    static_cast<unsigned long long>(tally.at_boundary))};
}

double chi_square(const std::vector<std::uint64_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double x = 0;
  for (auto c : counts) x += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return x;
}

Verdict drg_check() {
  const PrimeField f(kDrgModulus);
  constexpr std::uint32_t kBad = 3;
  // Commitment-honest choices a malicious node might make: a constant, the
  // value that would cancel a guessed honest sum, and a value tied to the run.
  const std::vector<std::pair<const char*, std::function<std::uint64_t(std::uint64_t)>>> choices{
      {"constant", [](std::uint64_t) { return 16u; }},
      {"cancel-guess", [](std::uint64_t run) { return (kDrgModulus - (run % kDrgModulus)) % kDrgModulus; }},
      {"run-parity", [](std::uint64_t run) { return run % 2; }},
  };
  bool pass = true;
  std::string detail;
  for (const auto& [name, pick] : choices) {
    std::vector<std::uint64_t> counts(kDrgModulus, 0);
    for (std::uint64_t run = 0; run < kDrgRuns; ++run) {
      DrgConfig cfg{&f, 4, 1, 1, {kBad}, DistributorBehavior::kGarbage};
      cfg.seed = derive_seed(kMasterSeed, {run});
      cfg.value_override = [&](std::uint32_t j, std::uint32_t) -> std::optional<std::vector<FieldElement>> {
        if (j != kBad) return std::nullopt;
        return std::vector<FieldElement>{f.element(pick(run))};
      };
      ++counts[drg_run(cfg).value[0].value];
    }
    const double x = chi_square(counts);
    pass &= x < kChiSquare16At001;
    detail += fmt("%s chi2=%.2f; ", name, x);
  }

  std::uint64_t unanimous = 0;
  for (std::uint64_t run = 0; run < kEquivocationRuns; ++run) {
    const std::uint32_t bad = 1 + static_cast<std::uint32_t>(run % 4);
    DrgConfig cfg{&f, 4, 1, 1, {bad}, DistributorBehavior::kEquivocate};
    cfg.seed = derive_seed(kMasterSeed, {0xE9, run});
    const auto a = drg_attempt(cfg, 0);
    bool all_abort = a.restart;
    for (std::uint32_t j = 1; j <= 4; ++j) {
      if (j != bad) all_abort &= a.views[j - 1].phase == DrgPhase::kAborted;
    }
    unanimous += all_abort;
  }
  pass &= unanimous == kEquivocationRuns;
  detail += fmt("equivocation restarts %llu/%llu", static_cast<unsigned long long>(unanimous),
                static_cast<unsigned long long>(kEquivocationRuns));
  return {pass, detail};
}

Verdict agreement_check() {
  std::uint64_t cases = 0, violations = 0;
  for (std::uint32_t bad = 1; bad <= 4; ++bad) {
    for (int kind = 0; kind < 5; ++kind) {
      for (int pattern = 0; pattern < 27; ++pattern) {
        std::vector<std::uint64_t> proposals(4, 0);
        std::vector<std::uint8_t> bits(4, 0);
        int code = pattern;
        for (std::uint32_t j = 1; j <= 4; ++j) {
          if (j == bad) continue;
          proposals[j - 1] = static_cast<std::uint64_t>(code % 3);
          bits[j - 1] = static_cast<std::uint8_t>(code % 2);
          code /= 3;
        }
        SilentScript silent;
        RandomScript random_script(derive_seed(kMasterSeed, {bad, static_cast<std::uint64_t>(pattern)}), 3);
        ConflictingScript split01(0, 1), split20(2, 0), split12(1, 2);
        ByzantineScript* scripts[] = {&silent, &random_script, &split01, &split20, &split12};

        std::set<std::uint64_t> honest_values;
        std::set<std::uint8_t> honest_bits;
        for (std::uint32_t j = 1; j <= 4; ++j) {
          if (j == bad) continue;
          honest_values.insert(proposals[j - 1]);
          honest_bits.insert(bits[j - 1]);
        }
        const AgreementSetup setup{4, 1, {bad}, scripts[kind], nullptr, 0};
        const auto multi = byzantine_agree(setup, proposals);
        bool ok = multi.honest_agree();
        if (honest_values.size() == 1) ok &= multi.honest_decision() == *honest_values.begin();
        ++cases;
        violations += !ok;

        const auto binary = binary_agree(setup, bits);
        ok = binary.honest_agree();
        if (honest_bits.size() == 1) ok &= binary.honest_decision() == *honest_bits.begin();
        ++cases;
        violations += !ok;
      }
    }
  }
  return {violations == 0, fmt("%llu scripted executions, violations=%llu", static_cast<unsigned long long>(cases),
                               static_cast<unsigned long long>(violations))};
}

std::vector<SimConfig> multi_configs(bool oblivious) {
  std::vector<SimConfig> configs;
  for (Mode mode : {Mode::kLeader, Mode::kDecentralized}) {
    for (int m : {4, 7, 10}) {
      SimConfig c = basic_config(256, 32, Strategy::prudent());
      c.mode = mode;
      c.m = m;
      c.corrupt_distributors = static_cast<std::uint32_t>(m / 3);
      c.check_obliviousness = oblivious;
      configs.push_back(c);
    }
  }
  return configs;
}

Verdict communication_check() {
  const auto configs = multi_configs(false);
  const auto rows = run_experiment(configs, kCommSeeds);
  bool exact = true;
  double worst = 0;
  std::string detail;
  for (const auto& row : rows) {
    const auto m = static_cast<std::uint64_t>(row.config.m);
    double fitted = 0;
    for (const auto& run : row.runs) {
      exact &= run.success;
      for (const auto& r : run.rounds) {
        if (r.msgs_user == 0 && r.msgs_user_min == 0) continue;  // no distribution this step
        exact &= r.msgs_user == m && r.msgs_user_min == m;
      }
      fitted = std::max(fitted, run.max_comm_ratio);
    }
    worst = std::max(worst, fitted);
    detail += fmt("%s/m=%llu C=%.2f; ", std::string(to_string(row.config.mode)).c_str(),
                  static_cast<unsigned long long>(m), fitted);
  }
  return {exact && worst <= kCommConstant, detail + (exact ? "every user got m messages" : "user message count off")};
}

Verdict obliviousness_check() {
  const auto configs = multi_configs(true);
  const auto rows = run_experiment(configs, 1);
  bool pass = true;
  std::uint64_t rounds = 0;
  for (const auto& row : rows) {
    for (const auto& run : row.runs) {
      pass &= run.snapshots_checked && !run.address_leaked;
      rounds += run.rounds.size();
    }
  }
  // Positive control: the scan does flag a planted address.
  const FieldElement planted = BridgeAddress{{203, 0, 113, 9}, 443}.pack();
  const bool control = snapshot_leaks_address(nlohmann::json{{"x", planted.value}}, {planted.value});
  return {pass && control, fmt("%zu runs, %llu rounds scanned, planted-address control %s", rows.size(),
                               static_cast<unsigned long long>(rounds), control ? "detected" : "missed")};
}

struct Criterion {
  int id;
  const char* name;
  Verdict (*run)();
};

const Criterion kCriteria[] = {
    {1, "latency bound", latency_bound_check},
    {2, "bridge cost bound", bridge_cost_check},
    {3, "robustness", robustness_check},
    {4, "latency and cost shape vs t", shape_check},
    {5, "secret sharing robustness", sharing_check},
    {6, "Berlekamp-Welch oracle equivalence", berlekamp_welch_check},
    {7, "DRG unbiasedness and equivocation", drg_check},
    {8, "agreement properties", agreement_check},
    {9, "communication shape", communication_check},
    {10, "obliviousness", obliviousness_check},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
