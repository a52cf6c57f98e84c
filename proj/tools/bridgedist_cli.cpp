// Command-line front end: simulate, sweep, selftest.
//
// Exit codes: 0 success, 1 configuration or I/O error, 2 simulation-contract
// violation (replica divergence, a wrong decoded address, a stalled DRG, an
// exhausted supply, or a run hitting its round cap).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "bridgedist/errors.hpp"
#include "bridgedist/secret_sharing.hpp"
#include "bridgedist/sim.hpp"

using namespace bridgedist;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitContract = 2;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kConfigInvalid:
    case Errc::kIoFailure:
    case Errc::kBudgetExceeded:
    case Errc::kPrecondition:
      return kExitConfig;
    default:
      return kExitContract;
  }
}

void print_row(const AggregateRow& row) {
  const auto& c = row.config;
  std::printf("mode=%s n=%llu t=%llu m=%d strategy=%s trials=%u latency=%.2f [%g,%g] used=%.1f thirsty=%.2f "
              "failures=%u cap_hits=%u\n",
              std::string(to_string(c.mode)).c_str(), static_cast<unsigned long long>(c.n),
              static_cast<unsigned long long>(c.t), c.m, c.strategy.to_string().c_str(), row.trials,
              row.latency.mean, row.latency.min, row.latency.max, row.bridges_used.mean, row.final_thirsty.mean,
              row.failures, row.cap_hits);
}

int finish(std::span<const AggregateRow> rows) {
  for (const auto& row : rows) {
    if (row.cap_hits > 0) {
      std::fprintf(stderr, "error: a run reached the round cap\n");
      return kExitContract;
    }
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string mode = "basic";
  std::uint64_t n = 1024;
  std::uint64_t t = 0;
  int m = 1;
  std::string strategy = "prudent";
  std::uint64_t seed = 1;
  std::uint32_t trials = 1;
  std::uint32_t max_rounds = 0;
  std::uint32_t corrupt_distributors = 0;
  std::string behavior = "garbage";
  std::string fallback = "pool";
  bool per_user_drg = false;
  bool check_obliviousness = false;
  unsigned threads = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  nlohmann::json j = {
      {"mode", a.mode},
      {"n", a.n},
      {"t", a.t},
      {"m", a.m},
      {"strategy", a.strategy},
      {"seed", a.seed},
      {"trials", a.trials},
      {"corrupt_distributors", a.corrupt_distributors},
      {"distributor_behavior", a.behavior},
      {"fallback_rule", a.fallback},
      {"per_user_drg", a.per_user_drg},
      {"check_obliviousness", a.check_obliviousness},
  };
  if (a.max_rounds > 0) j["max_rounds"] = a.max_rounds;
  const SimConfig config = SimConfig::from_json(j);

  if (config.trials == 1) {
    const MetricsSeries s = run_trial(config);
    for (const auto& r : s.rounds) {
      std::printf("round=%u thirsty=%llu distributed=%llu blocked=%llu used=%llu msgs_user=%llu msgs_dist=%llu\n",
                  r.round, static_cast<unsigned long long>(r.thirsty), static_cast<unsigned long long>(r.distributed),
                  static_cast<unsigned long long>(r.blocked), static_cast<unsigned long long>(r.used),
                  static_cast<unsigned long long>(r.msgs_user), static_cast<unsigned long long>(r.msgs_dist));
    }
    std::printf("latency=%u bound=%u used=%llu success=%s fallback=%s\n", s.latency_rounds,
                latency_bound(config.t), static_cast<unsigned long long>(s.bridges_used_total),
                s.success ? "yes" : "no", s.fallback ? "yes" : "no");
    if (config.mode != Mode::kBasic) {
      std::printf("reconstruct_failures=%llu drg_runs=%u drg_restarts=%u comm_ratio=%.3f%s\n",
                  static_cast<unsigned long long>(s.reconstruct_failures), s.drg_runs, s.drg_restarts,
                  s.max_comm_ratio, s.snapshots_checked ? (s.address_leaked ? " leak=yes" : " leak=no") : "");
    }
    if (!a.out.empty()) emit_csv(s, a.out);
    if (s.hit_cap) {
      std::fprintf(stderr, "error: the run reached the round cap\n");
      return kExitContract;
    }
    return kExitOk;
  }

  std::vector<SimConfig> configs{config};
  const auto rows = run_experiment(configs, 0, a.threads);
  for (const auto& row : rows) print_row(row);
  if (!a.out.empty()) emit_csv(rows, a.out);
  return finish(rows);
}

// Sweep file:
//   {"base": {SimConfig keys}, "vary": {"t": [..] | {"from": a, "to": b, "step": s}, ...},
//    "configs": [{SimConfig keys}, ...], "trials": k, "threads": w, "out": "table.csv"}
// Every combination of the "vary" lists is applied on top of "base"; explicit
// "configs" entries are appended as given.
std::vector<SimConfig> expand_sweep(const nlohmann::json& sweep_file) {
  for (const auto& [key, _] : sweep_file.items()) {
    if (key != "base" && key != "vary" && key != "configs" && key != "trials" && key != "threads" && key != "out") {
      throw Error(Errc::kConfigInvalid, "unknown sweep key '" + key + "'");
    }
  }
  std::vector<SimConfig> configs;
  const nlohmann::json base = sweep_file.value("base", nlohmann::json::object());

  if (sweep_file.contains("vary")) {
    std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
    for (const auto& [key, v] : sweep_file.at("vary").items()) {
      std::vector<nlohmann::json> values;
      if (v.is_array()) {
        for (const auto& x : v) values.push_back(x);
      } else if (v.is_object()) {
        const auto from = v.at("from").get<std::int64_t>();
        const auto to = v.at("to").get<std::int64_t>();
        const auto step = v.value("step", std::int64_t{1});
        if (step <= 0) throw Error(Errc::kConfigInvalid, "sweep step must be positive");
        for (std::int64_t x = from; x <= to; x += step) values.push_back(x);
      } else {
        throw Error(Errc::kConfigInvalid, "vary." + key + " must be a list or a range");
      }
      if (values.empty()) return configs;
      axes.emplace_back(key, std::move(values));
    }
    std::vector<std::size_t> pos(axes.size(), 0);
    for (;;) {
      nlohmann::json j = base;
      for (std::size_t k = 0; k < axes.size(); ++k) j[axes[k].first] = axes[k].second[pos[k]];
      configs.push_back(SimConfig::from_json(j));
      std::size_t k = axes.size();
      while (k > 0 && ++pos[k - 1] == axes[k - 1].second.size()) pos[--k] = 0;
      if (k == 0) break;
    }
  }
  if (sweep_file.contains("configs")) {
    for (const auto& c : sweep_file.at("configs")) {
      nlohmann::json j = base;
      j.update(c);
      configs.push_back(SimConfig::from_json(j));
    }
  }
  return configs;
}

int run_sweep(const std::string& path, const std::string& out_override) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoFailure, "cannot read " + path);
  nlohmann::json sweep_file;
  try {
    sweep_file = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfigInvalid, std::string("sweep file is not valid JSON: ") + e.what());
  }
  if (!sweep_file.is_object()) throw Error(Errc::kConfigInvalid, "sweep file must hold a JSON object");
  std::vector<SimConfig> configs;
  std::uint32_t trials = 0;
  unsigned threads = 0;
  std::string out = out_override;
  try {
    configs = expand_sweep(sweep_file);
    trials = sweep_file.value("trials", 0u);
    threads = sweep_file.value("threads", 0u);
    if (out.empty()) out = sweep_file.value("out", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfigInvalid, std::string("bad sweep file: ") + e.what());
  }
  const auto rows = run_experiment(configs, trials, threads);
  for (const auto& row : rows) print_row(row);
  if (!out.empty()) emit_csv(rows, out);
  return finish(rows);
}

// Fast invariant checks over every layer; the full criteria live in the
// acceptance binary.
int run_selftest() {
  int failed = 0;
  auto check = [&](const char* name, const std::function<bool()>& fn) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::printf("  (%s)\n", e.what());
    }
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
    failed += ok ? 0 : 1;
  };

  check("field inverses", [] {
    PrimeField f;
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
      FieldElement a{1 + uniform_below(rng, f.modulus() - 1)};
      if (f.mul(a, f.inverse(a)).value != 1) return false;
    }
    return true;
  });

  check("sharing corrects m/3 bad shares", [] {
    PrimeField f;
    Rng rng(2);
    const auto policy = SharingPolicy::for_distributors(10);
    for (int k = 0; k < 200; ++k) {
      const FieldElement secret = f.random(rng);
      auto shares = share(f, secret, policy, rng, 7);
      for (int c = 0; c < policy.tau; ++c) shares[uniform_below(rng, shares.size())].value = f.random(rng);
      if (reconstruct(f, shares, policy) != secret) return false;
    }
    return true;
  });

  check("basic runs meet cost bound and serve every user", [] {
    for (std::uint64_t t : {0u, 31u, 64u, 200u}) {
      for (const auto& strategy : {Strategy::prudent(), Strategy::aggressive(), Strategy::stochastic(0.5)}) {
        SimConfig c;
        c.t = t;
        c.strategy = strategy;
        const auto s = run_trial(c);
        if (!s.success || s.hit_cap) return false;
        if (static_cast<double>(s.bridges_used_total) > bridge_cost_bound(t, c.n)) return false;
      }
    }
    return true;
  });

  check("runs are reproducible", [] {
    SimConfig c;
    c.t = 100;
    c.strategy = Strategy::stochastic(0.7);
    c.seed = 99;
    return run_trial(c) == run_trial(c);
  });

  check("multi-distributor delivery", [] {
    for (Mode mode : {Mode::kLeader, Mode::kDecentralized}) {
      SimConfig c;
      c.n = 128;
      c.t = 10;
      c.m = 7;
      c.mode = mode;
      c.corrupt_distributors = 2;
      c.check_obliviousness = true;
      const auto s = run_trial(c);
      if (!s.success || s.reconstruct_failures != 0 || s.address_leaked) return false;
      for (const auto& r : s.rounds) {
        if (r.msgs_user != 0 && (r.msgs_user != 7 || r.msgs_user_min != 7)) return false;
      }
    }
    return true;
  });

  return failed == 0 ? kExitOk : kExitContract;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bridge distribution simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one configuration");
  simulate->add_option("--mode", sim.mode, "basic, leader or decentralized");
  simulate->add_option("--n", sim.n, "Number of users");
  simulate->add_option("--t", sim.t, "Adversary budget (corrupt users)");
  simulate->add_option("--m", sim.m, "Number of distributors");
  simulate->add_option("--strategy", sim.strategy, "prudent, aggressive or stochastic:<q>");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--trials", sim.trials, "Seeded trials; more than one writes the aggregate table");
  simulate->add_option("--max-rounds", sim.max_rounds, "Round cap (default derived from t)");
  simulate->add_option("--corrupt-distributors", sim.corrupt_distributors, "Byzantine distributors, at most m/3");
  simulate->add_option("--behavior", sim.behavior, "silent, garbage or equivocate");
  simulate->add_option("--fallback-rule", sim.fallback, "pool (d >= n) or total (L*d >= n)");
  simulate->add_flag("--per-user-drg", sim.per_user_drg, "One agreed random number per user and instance");
  simulate->add_flag("--check-obliviousness", sim.check_obliviousness, "Scan distributor state for addresses");
  simulate->add_option("--threads", sim.threads, "Worker threads for multiple trials");
  simulate->add_option("--out", sim.out, "CSV destination");

  std::string sweep_path;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run a JSON-described parameter sweep");
  sweep->add_option("--config", sweep_path, "Sweep file")->required();
  sweep->add_option("--out", sweep_out, "CSV destination (overrides the file's \"out\")");

  auto* selftest = app.add_subcommand("selftest", "Run the quick invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (sweep->parsed()) return run_sweep(sweep_path, sweep_out);
    if (selftest->parsed()) return run_selftest();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitContract;
  }
  return kExitOk;
}
