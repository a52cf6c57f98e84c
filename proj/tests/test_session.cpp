#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "bridgedist/session.hpp"
#include "test_support.hpp"

using namespace bridgedist;

namespace {

std::vector<UserId> user_range(std::uint64_t n, UserId first = 1) {
  std::vector<UserId> v(n);
  std::iota(v.begin(), v.end(), first);
  return v;
}

// Blocks `count` bridges of one instance's current pool.
void block_in_instance(Session& s, BridgeSupply& supply, std::size_t instance, std::uint64_t count) {
  const auto& pool = s.instances()[instance].pool;
  std::vector<BridgeId> ids(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  s.report_blocked(supply, ids);
}

}  // namespace

TEST_CASE("instance count and threshold arithmetic") {
  CHECK(instance_count_for(1024) == 30);
  CHECK(instance_count_for(65536) == 48);
  CHECK(instance_count_for(256) == 24);
  CHECK(instance_count_for(1000) == 30);  // 3 * 9.97 = 29.9
  CHECK(instance_count_for(1) == 1);
  CHECK(instance_count_for(2) == 3);

  CHECK(threshold_reached(16, 0));       // sentinel vs 9.6
  CHECK_FALSE(threshold_reached(9, 0));
  CHECK(threshold_reached(10, 0));
  CHECK_FALSE(threshold_reached(19, 1));  // 19 < 19.2
  CHECK(threshold_reached(20, 1));
  CHECK(blocks_to_advance(0) == 10);
  CHECK(blocks_to_advance(1) == 20);
  CHECK(blocks_to_advance(2) == 39);
  CHECK(blocks_to_advance(4) == 154);
  CHECK(blocks_to_advance(5) == 308);
}

TEST_CASE("new_session examples") {
  const auto users = user_range(1024);
  const Session s = Session::create(users);
  CHECK(s.instance_count() == 30);
  CHECK(s.round() == 0);
  CHECK(s.bridges_used_total() == 0);

  const UserId one[] = {42};
  CHECK(Session::create(one).instance_count() == 1);
  CHECK_ERRC(Session::create(std::span<const UserId>{}), Errc::kEmptyUserSet);
  const UserId dup[] = {1, 2, 1};
  CHECK_ERRC(Session::create(dup), Errc::kDuplicateUser);
}

TEST_CASE("first advance fires from the sentinel and distributes 32 bridges per instance") {
  const auto users = user_range(1024);
  Session s = Session::create(users);
  BridgeSupply supply;
  SeededRandomness rng(1);
  CHECK(s.threshold_crossed());
  auto plan = s.advance_round_if_triggered(supply, rng);
  REQUIRE(plan.has_value());
  CHECK(plan->round == 1);
  CHECK(plan->pool_size == 32);
  CHECK_FALSE(plan->fallback);
  CHECK(plan->recruited.size() == 30 * 32);
  CHECK(s.bridges_used_total() == 960);
  for (const auto& inst : s.instances()) CHECK(inst.pool.size() == 32);

  // 19 blocked is below 0.6 * 32 = 19.2.
  block_in_instance(s, supply, 5, 19);
  CHECK(s.max_blocked_count() == 19);
  CHECK_FALSE(s.advance_round_if_triggered(supply, rng).has_value());
  CHECK(s.round() == 1);

  block_in_instance(s, supply, 5, 20);
  plan = s.advance_round_if_triggered(supply, rng);
  REQUIRE(plan.has_value());
  CHECK(plan->round == 2);
  CHECK(plan->pool_size == 64);
  // Instance 5 lost 20 bridges, the others keep all 32.
  CHECK(plan->reused.size() == 29 * 32 + 12);
  CHECK(plan->recruited.size() == 30 * 64 - plan->reused.size());
  CHECK(s.bridges_used_total() == 960 + plan->recruited.size());
}

TEST_CASE("fallback engagement under both rules") {
  const auto users = user_range(1024);
  SUBCASE("total across instances reaches n at d = 64") {
    Session s = Session::create(users, {FallbackRule::kTotalReachesUsers});
    BridgeSupply supply;
    SeededRandomness rng(2);
    REQUIRE(s.advance_round_if_triggered(supply, rng));
    block_in_instance(s, supply, 0, 20);
    auto plan = s.advance_round_if_triggered(supply, rng);
    REQUIRE(plan.has_value());
    CHECK(plan->fallback);
    CHECK(plan->recruited.size() == 1024);
    CHECK(s.fallback_engaged());
    CHECK_FALSE(s.threshold_crossed());
  }
  SUBCASE("pool size reaches n at d = 1024") {
    Session s = Session::create(users);
    BridgeSupply supply;
    SeededRandomness rng(3);
    for (std::uint32_t r = 1; r <= 5; ++r) {
      auto plan = s.advance_round_if_triggered(supply, rng);
      REQUIRE(plan.has_value());
      CHECK_FALSE(plan->fallback);
      CHECK(plan->pool_size == (1u << (r + 4)));
      block_in_instance(s, supply, r % 30, blocks_to_advance(r));
    }
    auto plan = s.advance_round_if_triggered(supply, rng);
    REQUIRE(plan.has_value());
    CHECK(plan->round == 6);
    CHECK(plan->fallback);

    std::set<BridgeId> distinct;
    for (UserId u : users) {
      auto a = s.assignments_for(u);
      REQUIRE(a.size() == 1);
      distinct.insert(a[0]);
      CHECK_FALSE(supply.is_blocked(a[0]));
    }
    CHECK(distinct.size() == users.size());
    CHECK_FALSE(s.advance_round_if_triggered(supply, rng).has_value());
  }
}

TEST_CASE("report_blocked examples") {
  const auto users = user_range(64);
  Session s = Session::create(users);
  BridgeSupply supply;
  SeededRandomness rng(4);
  s.advance_round_if_triggered(supply, rng);
  const auto before = s.to_json();
  s.report_blocked(supply, {});
  CHECK(s.to_json() == before);

  block_in_instance(s, supply, 2, 32);
  CHECK(s.instances()[2].blocked_count == 32);

  // Two instances sharing one bridge (built through a checkpoint) both count it.
  auto j = s.to_json();
  const BridgeId shared = j["instances"][0]["pool"][0].get<BridgeId>();
  j["instances"][1]["pool"][0] = shared;
  Session t = Session::from_json(j);
  const std::uint64_t b0 = t.instances()[0].blocked_count;
  const std::uint64_t b1 = t.instances()[1].blocked_count;
  const BridgeId ids[] = {shared};
  t.report_blocked(supply, ids);
  CHECK(t.instances()[0].blocked_count == b0 + 1);
  CHECK(t.instances()[1].blocked_count == b1 + 1);
}

TEST_CASE("assignments_for examples") {
  const auto users = user_range(300);
  Session s = Session::create(users);
  BridgeSupply supply;
  SeededRandomness rng(5);
  CHECK(s.assignments_for(1).empty());
  s.advance_round_if_triggered(supply, rng);
  for (UserId u : users) {
    const auto a = s.assignments_for(u);
    REQUIRE(a.size() == s.instance_count());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& pool = s.instances()[i].pool;
      CHECK(std::find(pool.begin(), pool.end(), a[i]) != pool.end());
    }
  }
  CHECK_ERRC(s.assignments_for(100000), Errc::kUnknownUser);
}

TEST_CASE("advance happens exactly when some instance reaches its threshold") {
  Rng script(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto users = user_range(2000);
    Session s = Session::create(users);
    BridgeSupply supply;
    SeededRandomness rng(static_cast<std::uint64_t>(trial));
    s.advance_round_if_triggered(supply, rng);
    for (int step = 0; step < 12 && !s.fallback_engaged(); ++step) {
      // Block a random handful of bridges in random instances.
      std::vector<BridgeId> victims;
      for (int k = 0; k < 8; ++k) {
        const auto& pool = s.instances()[uniform_below(script, s.instance_count())].pool;
        const std::size_t take = uniform_below(script, pool.size() / 4 + 1);
        for (std::size_t x = 0; x < take; ++x) victims.push_back(pool[uniform_below(script, pool.size())]);
      }
      s.report_blocked(supply, victims);
      const std::uint32_t round_before = s.round();
      const bool expected = threshold_reached(s.max_blocked_count(), round_before);
      const auto plan = s.advance_round_if_triggered(supply, rng);
      CHECK(plan.has_value() == expected);
      CHECK(s.round() == round_before + (expected ? 1u : 0u));
      if (plan && !plan->fallback) {
        // Fresh pools never contain a blocked bridge.
        for (const auto& inst : s.instances()) {
          CHECK(inst.blocked_count == 0);
          for (BridgeId id : inst.pool) CHECK_FALSE(supply.is_blocked(id));
        }
      }
    }
  }
}

TEST_CASE("joins reuse current pools until n doubles") {
  const auto users = user_range(1024);
  Session s = Session::create(users);
  BridgeSupply supply;
  SeededRandomness rng(6);
  s.advance_round_if_triggered(supply, rng);
  const std::uint64_t used = s.bridges_used_total();

  CHECK(s.join_user(5000, supply, rng).empty());
  CHECK(s.bridges_used_total() == used);
  CHECK(s.n() == 1025);
  CHECK(s.assignments_for(5000).size() == 30);
  CHECK_ERRC(s.join_user(5000, supply, rng), Errc::kDuplicateUser);

  // Grow to 2047: still no growth.
  for (UserId u = 5001; u < 5001 + 1022; ++u) CHECK(s.join_user(u, supply, rng).empty());
  CHECK(s.instance_count() == 30);
  // User number 2048 doubles n.
  const auto recruited = s.join_user(9999, supply, rng);
  CHECK(s.n() == 2048);
  CHECK(recruited.size() == 3 * 32);
  CHECK(s.instance_count() == 33);
  CHECK(s.growth_baseline() == 2048);
  CHECK(s.assignments_for(1).size() == 33);
  CHECK(s.assignments_for(9999).size() == 33);
}

TEST_CASE("growth in fallback mode only hands out unique bridges") {
  const auto users = user_range(100);
  Session s = Session::create(users, {FallbackRule::kTotalReachesUsers});
  BridgeSupply supply;
  SeededRandomness rng(7);
  // L = 20, 32 * 20 >= 100: fallback on the very first distribution.
  auto plan = s.advance_round_if_triggered(supply, rng);
  REQUIRE(plan.has_value());
  CHECK(plan->fallback);
  const std::size_t instances = s.instance_count();
  for (UserId u = 1000; u < 1100; ++u) {
    const auto r = s.join_user(u, supply, rng);
    CHECK(r.size() == 1);
  }
  CHECK(s.n() == 200);
  CHECK(s.instance_count() == instances);
  CHECK(s.growth_baseline() == 200);
  std::set<BridgeId> distinct;
  for (UserId u : s.users()) distinct.insert(s.assignments_for(u).at(0));
  CHECK(distinct.size() == 200);

  // Blocked unique bridges are replaced one for one.
  const BridgeId victim = s.assignments_for(1000).at(0);
  const BridgeId ids[] = {victim};
  s.report_blocked(supply, ids);
  CHECK_FALSE(s.has_unblocked_bridge(1000, supply));
  CHECK(s.replace_blocked_fallback(supply).size() == 1);
  CHECK(s.has_unblocked_bridge(1000, supply));
}

TEST_CASE("leave_user examples") {
  const auto users = user_range(100);
  Session s = Session::create(users);
  BridgeSupply supply;
  SeededRandomness rng(8);
  s.advance_round_if_triggered(supply, rng);
  const auto keep = s.assignments_for(100);
  s.leave_user(3);
  CHECK(s.n() == 99);
  CHECK_FALSE(s.contains(3));
  CHECK(s.assignments_for(100) == keep);  // moved slot keeps its bridges
  CHECK_ERRC(s.leave_user(3), Errc::kUnknownUser);
  s.join_user(3, supply, rng);
  CHECK(s.contains(3));
  CHECK(s.assignments_for(3).size() == s.instance_count());

  const UserId one[] = {1};
  Session t = Session::create(one);
  t.leave_user(1);
  CHECK(t.n() == 0);
  CHECK_FALSE(t.advance_round_if_triggered(supply, rng).has_value());
}

TEST_CASE("supply exhaustion propagates") {
  const auto users = user_range(64);
  Session s = Session::create(users);
  BridgeSupply supply(100);
  SeededRandomness rng(9);
  CHECK_ERRC(s.advance_round_if_triggered(supply, rng), Errc::kSupplyExhausted);
}

TEST_CASE("checkpoint round trip preserves behavior") {
  const auto users = user_range(500);
  Session s = Session::create(users);
  BridgeSupply supply;
  SeededRandomness rng(10);
  s.advance_round_if_triggered(supply, rng);
  block_in_instance(s, supply, 3, 25);

  const auto snapshot = s.to_json();
  CHECK(snapshot.contains("round"));
  CHECK(snapshot.contains("instances"));
  CHECK(snapshot.contains("users"));
  CHECK(snapshot.contains("metrics"));
  Session restored = Session::from_json(nlohmann::json::parse(snapshot.dump()));
  BridgeSupply supply2 = BridgeSupply::from_json(nlohmann::json::parse(supply.to_json().dump()));
  CHECK(restored.to_json() == snapshot);

  SeededRandomness rng2(10);
  s.advance_round_if_triggered(supply, rng);
  restored.advance_round_if_triggered(supply2, rng2);
  CHECK(restored.to_json() == s.to_json());
  CHECK(supply2.to_json() == supply.to_json());
}
