#include "bridgedist/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "bridgedist/distributors.hpp"
#include "bridgedist/drg.hpp"
#include "bridgedist/errors.hpp"
#include "bridgedist/hash.hpp"

namespace bridgedist {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kBasic: return "basic";
    case Mode::kLeader: return "leader";
    case Mode::kDecentralized: return "decentralized";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  for (Mode m : {Mode::kBasic, Mode::kLeader, Mode::kDecentralized}) {
    if (text == to_string(m)) return m;
  }
  throw Error(Errc::kConfigInvalid, "unknown mode '" + std::string(text) + "'");
}

std::uint32_t latency_bound(std::uint64_t t) {
  const std::uint64_t blocks = (t + 1 + 31) / 32;  // ceil((t+1)/32)
  std::uint32_t lg = 0;
  while ((std::uint64_t{1} << lg) < blocks) ++lg;  // ceil(log2)
  return lg + 1;
}

double bridge_cost_bound(std::uint64_t t, std::uint64_t n) {
  return (10.0 * static_cast<double>(t) + 96.0) * std::log2(static_cast<double>(n));
}

void SimConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(Errc::kConfigInvalid, what); };
  if (n == 0) bad("n must be positive");
  if (t >= n) bad("t must be below n (t=" + std::to_string(t) + ", n=" + std::to_string(n) + ")");
  if (m < 1) bad("m must be at least 1");
  if (mode == Mode::kBasic && m != 1) bad("basic mode uses a single distributor (m=1)");
  if (mode == Mode::kDecentralized && m < 4) bad("decentralized mode needs m >= 4");
  if (corrupt_distributors > static_cast<std::uint32_t>(m / 3)) bad("more than floor(m/3) corrupt distributors");
  if (mode == Mode::kBasic && corrupt_distributors > 0) bad("basic mode has no distributors to corrupt");
  if (mode == Mode::kLeader && corrupt_distributors > 0 && corrupt_distributors >= static_cast<std::uint32_t>(m)) {
    bad("the leader must stay honest");
  }
  if (trials == 0) bad("trials must be positive");
  if (max_rounds && *max_rounds == 0) bad("max_rounds must be positive");
  if (strategy.kind == StrategyKind::kStochastic && !(strategy.probability >= 0.0 && strategy.probability <= 1.0)) {
    bad("stochastic probability must lie in [0, 1]");
  }
  if (!churn.empty() && mode != Mode::kBasic) bad("churn is only simulated in basic mode");
  if (per_user_drg && mode != Mode::kDecentralized) bad("per_user_drg applies to decentralized mode only");
  std::uint64_t scheduled = 0;
  for (const auto& ev : corruption) {
    if (ev.round == 0) bad("corruption rounds start at 1");
    scheduled += ev.count;
  }
  if (scheduled > t) bad("corruption schedule exceeds t");
  for (const auto& ev : churn) {
    if (ev.round == 0) bad("churn rounds start at 1");
  }
}

std::uint32_t SimConfig::effective_max_rounds() const {
  return max_rounds ? *max_rounds : 2 * latency_bound(t) + 4;
}

nlohmann::json SimConfig::to_json() const {
  nlohmann::json churn_json = nlohmann::json::array();
  for (const auto& c : churn) churn_json.push_back({{"round", c.round}, {"joins", c.joins}, {"leaves", c.leaves}});
  nlohmann::json corruption_json = nlohmann::json::array();
  for (const auto& c : corruption) corruption_json.push_back({{"round", c.round}, {"count", c.count}});
  nlohmann::json j = {
      {"n", n},
      {"t", t},
      {"m", m},
      {"mode", to_string(mode)},
      {"strategy", strategy.to_string()},
      {"seed", seed},
      {"trials", trials},
      {"churn", churn_json},
      {"corruption", corruption_json},
      {"fallback_rule", fallback_rule == FallbackRule::kPoolReachesUsers ? "pool" : "total"},
      {"corrupt_distributors", corrupt_distributors},
      {"distributor_behavior", to_string(distributor_behavior)},
      {"per_user_drg", per_user_drg},
      {"check_obliviousness", check_obliviousness},
  };
  if (max_rounds) j["max_rounds"] = *max_rounds;
  return j;
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::kConfigInvalid, "config must be a JSON object");
  SimConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n") {
        c.n = v.get<std::uint64_t>();
      } else if (key == "t") {
        c.t = v.get<std::uint64_t>();
      } else if (key == "m") {
        c.m = v.get<int>();
      } else if (key == "mode") {
        c.mode = parse_mode(v.get<std::string>());
      } else if (key == "strategy") {
        c.strategy = Strategy::parse(v.get<std::string>());
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "max_rounds") {
        if (!v.is_null()) c.max_rounds = v.get<std::uint32_t>();
      } else if (key == "trials") {
        c.trials = v.get<std::uint32_t>();
      } else if (key == "churn") {
        for (const auto& e : v) {
          c.churn.push_back({e.at("round").get<std::uint32_t>(), e.value("joins", std::uint64_t{0}),
                             e.value("leaves", std::uint64_t{0})});
        }
      } else if (key == "corruption") {
        for (const auto& e : v) c.corruption.push_back({e.at("round").get<std::uint32_t>(), e.at("count").get<std::uint64_t>()});
      } else if (key == "fallback_rule") {
        const auto rule = v.get<std::string>();
        if (rule != "pool" && rule != "total") throw Error(Errc::kConfigInvalid, "fallback_rule must be pool or total");
        c.fallback_rule = rule == "pool" ? FallbackRule::kPoolReachesUsers : FallbackRule::kTotalReachesUsers;
      } else if (key == "corrupt_distributors") {
        c.corrupt_distributors = v.get<std::uint32_t>();
      } else if (key == "distributor_behavior") {
        c.distributor_behavior = parse_distributor_behavior(v.get<std::string>());
      } else if (key == "per_user_drg") {
        c.per_user_drg = v.get<bool>();
      } else if (key == "check_obliviousness") {
        c.check_obliviousness = v.get<bool>();
      } else {
        throw Error(Errc::kConfigInvalid, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfigInvalid, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

class Trial {
 public:
  explicit Trial(const SimConfig& cfg)
      : cfg_(cfg),
        policy_(SharingPolicy::for_distributors(cfg.m)),
        assign_(derive_seed(cfg.seed, {0xA551'6Eu})),
        adversary_(cfg.t, cfg.strategy, derive_seed(cfg.seed, {0xADu}), cfg.corruption),
        share_rng_(derive_seed(cfg.seed, {0x54A2'E5u})),
        churn_rng_(derive_seed(cfg.seed, {0xC4u})) {
    std::vector<UserId> users(cfg.n);
    for (std::uint64_t u = 0; u < cfg.n; ++u) users[u] = u + 1;
    next_user_ = cfg.n + 1;
    const SessionOptions options{cfg.fallback_rule};

    if (cfg.mode == Mode::kBasic) {
      basic_.emplace(Session::create(users, options));
      return;
    }
    std::vector<std::uint32_t> corrupt;
    for (std::uint32_t k = 0; k < cfg.corrupt_distributors; ++k) corrupt.push_back(static_cast<std::uint32_t>(cfg.m) - k);
    std::sort(corrupt.begin(), corrupt.end());
    adversary_.corrupt_distributors(corrupt, cfg.m, cfg.distributor_behavior);
    nodes_ = make_distributors(cfg.m, corrupt, cfg.distributor_behavior);
    if (cfg.mode == Mode::kLeader) {
      nodes_[0].session.emplace(Session::create(users, options));
      return;
    }
    for (auto& node : nodes_) node.session.emplace(Session::create(users, options));
    DrgConfig drg;
    drg.field = &field_;
    drg.m = static_cast<std::uint32_t>(cfg.m);
    drg.f = static_cast<std::uint32_t>(cfg.m / 3);
    drg.corrupt = corrupt;
    drg.behavior = cfg.distributor_behavior;
    drg.seed = derive_seed(cfg.seed, {0xD26u});
    drg.net = &net_;
    beacon_ = std::make_unique<DrgBeacon>(
        drg, cfg.per_user_drg ? DrgBeacon::Granularity::kPerUser : DrgBeacon::Granularity::kPerInstance,
        nodes_[0].session->instance_count());
  }

  MetricsSeries run() {
    MetricsSeries out;
    out.seed = cfg_.seed;
    const std::uint32_t cap = cfg_.effective_max_rounds();
    for (std::uint32_t step = 1;; ++step) {
      net_.reset_counters();
      apply_churn(step);
      RoundRecord rec;
      distribute(rec);

      adversary_.corrupt_step(world(), step);
      adversary_.observe(world());
      const auto views = adversary_.views(world(), world_supply());
      const auto blocks = adversary_.decide_blocks(world().round(), views, world().fallback_engaged());
      adversary_.record_blocked(blocks);
      const std::uint64_t before = world_supply().blocked_total();
      report_blocked(blocks);
      rec.blocked = world_supply().blocked_total() - before;

      rec.round = world().round();
      rec.distributed = world().fallback_engaged() ? world().n() : (std::uint64_t{1} << (world().round() + 4));
      rec.used = world().bridges_used_total();
      rec.thirsty = count_thirsty();
      if (cfg_.mode != Mode::kBasic) {
        for (const auto& node : nodes_) rec.msgs_dist = std::max(rec.msgs_dist, net_.counters(node.endpoint()).messages());
        const double denom = static_cast<double>(cfg_.m) * cfg_.m + static_cast<double>(world().n());
        out.max_comm_ratio = std::max(out.max_comm_ratio, static_cast<double>(rec.msgs_dist) / denom);
        if (cfg_.check_obliviousness) {
          out.snapshots_checked = true;
          for (const auto& node : nodes_) out.address_leaked |= snapshot_leaks_address(node.snapshot(), packed_);
        }
      }
      out.rounds.push_back(rec);

      if (world().fallback_engaged()) break;
      const bool pending = adversary_.has_pending_corruption(step) ||
                           std::any_of(cfg_.churn.begin(), cfg_.churn.end(), [&](const ChurnEvent& e) { return e.round > step; });
      if (!world().threshold_crossed() && !pending) break;
      if (step >= cap) {
        out.hit_cap = true;
        break;
      }
    }

    out.latency_rounds = world().round();
    out.fallback = world().fallback_engaged();
    out.bridges_used_total = world().bridges_used_total();
    out.final_thirsty = out.rounds.back().thirsty;
    out.success = out.final_thirsty == 0 && !out.hit_cap;
    out.blocked_total = world_supply().blocked_total();
    out.reconstruct_failures = reconstruct_failures_;
    if (beacon_) {
      out.drg_runs = beacon_->runs();
      out.drg_restarts = beacon_->restarts();
    }
    return out;
  }

 private:
  Session& world() { return cfg_.mode == Mode::kBasic ? *basic_ : *nodes_[0].session; }
  BridgeSupply& world_supply() { return cfg_.mode == Mode::kBasic ? basic_supply_ : nodes_[0].supply; }

  void apply_churn(std::uint32_t step) {
    for (const auto& ev : cfg_.churn) {
      if (ev.round != step) continue;
      for (std::uint64_t k = 0; k < ev.leaves && world().n() > 1; ++k) {
        const auto users = world().users();
        world().leave_user(users[uniform_below(churn_rng_, users.size())]);
      }
      for (std::uint64_t k = 0; k < ev.joins; ++k) world().join_user(next_user_++, world_supply(), assign_);
    }
  }

  void distribute(RoundRecord& rec) {
    if (cfg_.mode == Mode::kBasic) {
      // A lone distributor hands each user one batch per distribution.
      if (basic_->advance_round_if_triggered(basic_supply_, assign_)) {
        rec.msgs_user = rec.msgs_user_min = 1;
        rec.msgs_dist = basic_->n();
      }
      return;
    }

    std::optional<RoundPlan> plan;
    if (cfg_.mode == Mode::kLeader) {
      plan = nodes_[0].session->advance_round_if_triggered(nodes_[0].supply, assign_);
    } else {
      beacon_->set_instance_count(nodes_[0].session->instance_count());
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        auto p = nodes_[j].session->advance_round_if_triggered(nodes_[j].supply, *beacon_);
        if (j == 0) {
          plan = std::move(p);
        } else if (nodes_[j].honest() && !same_plan(plan, p)) {
          throw Error(Errc::kContractViolation, "distributor replicas disagree on the round plan");
        }
      }
    }
    if (!plan) return;

    for (BridgeId id : plan->recruited) register_new_bridge(id);
    if (cfg_.mode == Mode::kLeader) {
      leader_assign_round(nodes_, net_);
    } else {
      replica_assign_round(nodes_);
      for (const auto& node : nodes_) {
        if (node.honest() && node.assignment_view() != nodes_[0].assignment_view()) {
          throw Error(Errc::kContractViolation, "honest distributors chose different bridges");
        }
      }
    }
    deliver_shares(field_, nodes_, net_, share_rng_);

    rec.msgs_user_min = UINT64_MAX;
    failed_.clear();
    for (UserId u : world().users()) {
      const auto& c = net_.counters(user_endpoint(u));
      rec.msgs_user = std::max(rec.msgs_user, c.received);
      rec.msgs_user_min = std::min(rec.msgs_user_min, c.received);
      const auto inbox = net_.deliver(user_endpoint(u));
      std::unordered_set<BridgeId> decoded;
      for (const auto& r : user_reconstruct(field_, inbox, policy_)) {
        if (!r.address) continue;
        if (r.address->value != addresses_.at(r.secret_id).value) {
          throw Error(Errc::kContractViolation, "user decoded a wrong address for bridge " + std::to_string(r.secret_id));
        }
        decoded.insert(r.secret_id);
      }
      for (BridgeId b : world().assignments_for(u)) {
        if (!decoded.count(b)) {
          failed_[u].insert(b);
          ++reconstruct_failures_;
        }
      }
    }
  }

  static bool same_plan(const std::optional<RoundPlan>& a, const std::optional<RoundPlan>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->round == b->round && a->pool_size == b->pool_size && a->fallback == b->fallback &&
           a->recruited == b->recruited && a->reused == b->reused;
  }

  void register_new_bridge(BridgeId id) {
    Rng rng(derive_seed(cfg_.seed, {0xB121'D6Eu, id}));
    BridgeAddress addr;
    const std::uint64_t bits = rng();
    for (int k = 0; k < 4; ++k) addr.ip[k] = static_cast<std::uint8_t>(bits >> (8 * k));
    addr.port = static_cast<std::uint16_t>(1024 + uniform_below(rng, 65536 - 1024));
    const FieldElement packed = addr.pack();
    addresses_[id] = packed;
    packed_.insert(packed.value);
    register_bridge(field_, packed, id, policy_, nodes_, net_, share_rng_);
  }

  void report_blocked(std::span<const BridgeId> blocks) {
    if (cfg_.mode == Mode::kBasic) {
      basic_->report_blocked(basic_supply_, blocks);
      return;
    }
    for (auto& node : nodes_) {
      if (node.session) node.session->report_blocked(node.supply, blocks);
    }
  }

  std::uint64_t count_thirsty() {
    const Session& s = world();
    const BridgeSupply& supply = world_supply();
    std::uint64_t thirsty = 0;
    for (UserId u : s.users()) {
      if (adversary_.is_corrupt(u)) continue;
      if (cfg_.mode == Mode::kBasic || failed_.empty()) {
        if (!s.has_unblocked_bridge(u, supply)) ++thirsty;
        continue;
      }
      auto it = failed_.find(u);
      bool ok = false;
      for (BridgeId b : s.assignments_for(u)) {
        if (!supply.is_blocked(b) && (it == failed_.end() || !it->second.count(b))) {
          ok = true;
          break;
        }
      }
      if (!ok) ++thirsty;
    }
    return thirsty;
  }

  const SimConfig& cfg_;
  PrimeField field_;
  SharingPolicy policy_;
  SeededRandomness assign_;
  Adversary adversary_;
  Rng share_rng_;
  Rng churn_rng_;
  UserId next_user_ = 1;

  std::optional<Session> basic_;
  BridgeSupply basic_supply_;

  std::vector<DistributorNode> nodes_;
  SyncNetwork net_;
  std::unique_ptr<DrgBeacon> beacon_;
  std::unordered_map<BridgeId, FieldElement> addresses_;
  std::unordered_set<std::uint64_t> packed_;
  std::unordered_map<UserId, std::unordered_set<BridgeId>> failed_;
  std::uint64_t reconstruct_failures_ = 0;
};

Stat summarize(const std::vector<MetricsSeries>& runs, auto field) {
  Stat s;
  if (runs.empty()) return s;
  s.min = s.max = static_cast<double>(field(runs.front()));
  double sum = 0;
  for (const auto& r : runs) {
    const double v = static_cast<double>(field(r));
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(runs.size());
  return s;
}

std::uint64_t max_over_rounds(const MetricsSeries& s, std::uint64_t RoundRecord::*field) {
  std::uint64_t best = 0;
  for (const auto& r : s.rounds) best = std::max(best, r.*field);
  return best;
}

std::ofstream open_csv(const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, "cannot open " + destination.string() + " for writing");
  return out;
}

void close_csv(std::ofstream& out, const std::filesystem::path& destination) {
  out.flush();
  if (!out) throw Error(Errc::kIoFailure, "failed writing " + destination.string());
}

std::string fixed(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

MetricsSeries run_trial(const SimConfig& config) {
  config.validate();
  Trial trial(config);
  return trial.run();
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t k) {
  std::vector<std::uint8_t> bytes;
  put_u64_be(bytes, master);
  put_u64_be(bytes, k);
  return digest_prefix(sha256(bytes));
}

std::vector<AggregateRow> run_experiment(std::span<const SimConfig> configs, std::uint32_t trials, unsigned threads) {
  std::vector<AggregateRow> rows(configs.size());
  struct Job {
    std::size_t row;
    std::uint32_t k;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    configs[i].validate();
    rows[i].config = configs[i];
    rows[i].trials = trials ? trials : configs[i].trials;
    rows[i].runs.resize(rows[i].trials);
    for (std::uint32_t k = 0; k < rows[i].trials; ++k) jobs.push_back({i, k});
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        SimConfig c = configs[jobs[j].row];
        c.seed = trial_seed(c.seed, jobs[j].k);
        rows[jobs[j].row].runs[jobs[j].k] = run_trial(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = jobs.size();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  for (auto& row : rows) {
    const auto& runs = row.runs;
    row.latency = summarize(runs, [](const MetricsSeries& s) { return s.latency_rounds; });
    row.bridges_used = summarize(runs, [](const MetricsSeries& s) { return s.bridges_used_total; });
    row.final_thirsty = summarize(runs, [](const MetricsSeries& s) { return s.final_thirsty; });
    row.blocked = summarize(runs, [](const MetricsSeries& s) { return s.blocked_total; });
    row.msgs_user = summarize(runs, [](const MetricsSeries& s) { return max_over_rounds(s, &RoundRecord::msgs_user); });
    row.msgs_dist = summarize(runs, [](const MetricsSeries& s) { return max_over_rounds(s, &RoundRecord::msgs_dist); });
    for (const auto& r : runs) {
      row.failures += r.success ? 0 : 1;
      row.cap_hits += r.hit_cap ? 1 : 0;
    }
    row.failure_rate = row.trials ? static_cast<double>(row.failures) / row.trials : 0.0;
  }
  return rows;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void emit_csv(const MetricsSeries& series, const std::filesystem::path& destination) {
  auto out = open_csv(destination);
  out << "round,thirsty,distributed,blocked,used,msgs_user,msgs_dist\r\n";
  for (const auto& r : series.rounds) {
    out << r.round << ',' << r.thirsty << ',' << r.distributed << ',' << r.blocked << ',' << r.used << ','
        << r.msgs_user << ',' << r.msgs_dist << "\r\n";
  }
  close_csv(out, destination);
}

void emit_csv(std::span<const AggregateRow> table, const std::filesystem::path& destination) {
  auto out = open_csv(destination);
  out << "t,n,m,mode,strategy,trials,latency_mean,latency_min,latency_max,used_mean,used_min,used_max,"
         "thirsty_mean,thirsty_max,blocked_mean,msgs_user_max,msgs_dist_max,failures,cap_hits,failure_rate\r\n";
  for (const auto& row : table) {
    const auto& c = row.config;
    out << c.t << ',' << c.n << ',' << c.m << ',' << csv_field(to_string(c.mode)) << ','
        << csv_field(c.strategy.to_string()) << ',' << row.trials << ',' << fixed(row.latency.mean) << ','
        << row.latency.min << ',' << row.latency.max << ',' << fixed(row.bridges_used.mean) << ','
        << row.bridges_used.min << ',' << row.bridges_used.max << ',' << fixed(row.final_thirsty.mean) << ','
        << row.final_thirsty.max << ',' << fixed(row.blocked.mean) << ',' << row.msgs_user.max << ','
        << row.msgs_dist.max << ',' << row.failures << ',' << row.cap_hits << ',' << fixed(row.failure_rate) << "\r\n";
  }
  close_csv(out, destination);
}

}  // namespace bridgedist
