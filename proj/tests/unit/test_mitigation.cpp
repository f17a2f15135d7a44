#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "builder.hpp"
#include "oracles.hpp"
#include "random_tasks.hpp"
#include "whatif/mitigation.hpp"

using namespace whatif;
using namespace whatif::testing;

namespace {

std::vector<Point> points_of(const MitigationResult& r) {
  std::vector<Point> out;
  for (const auto& e : r.frontier) out.push_back(Point{e.cost(), e.p_star});
  return out;
}

MitigationTask kill_switch() {
  TaskBuilder b;
  b.network({"vul_W", "vul_D", "link"})
      .attacker({"start"})
      .goal({"owned_D"})
      .action("web", {"vul_W", "link"}, {"start"}, 1, {{0.5, {"owned_W"}}, {0.5, {}}})
      .action("db", {"vul_D"}, {"owned_W"}, 1, {{0.8, {"owned_D"}}, {0.2, {}}})
      .fix("A", {"link"}, {"!link"}, 1)
      .fix("B", {"vul_W"}, {"!vul_W"}, 2)
      .fix("C", {"vul_D"}, {"!vul_D"}, 3);
  return b.build();
}

std::vector<SearchOptions> toggles() {
  std::vector<SearchOptions> out(6);
  out[1].use_sss = false;
  out[2].use_sleep_sets = false;
  out[3].use_ofix = false;
  out[4].use_oatt = false;
  out[5].use_c0 = false;
  return out;
}

}  // namespace

TEST_CASE("no applicable fixes gives the empty strategy only") {
  TaskBuilder b;
  b.attacker({"s"}).goal({"g"}).action("x", {}, {"s"}, 1, {{0.7, {"g"}}, {0.3, {}}}).fix("never", {"absent"}, {"y"}, 1);
  auto t = b.build();
  const auto r = pareto_frontier(t);
  REQUIRE(r.frontier.size() == 1);
  CHECK(r.frontier[0].strategy.fixes.empty());
  CHECK(r.frontier[0].cost() == Cost::zero());
  CHECK(r.frontier[0].p_star == doctest::Approx(0.7));
  CHECK(r.complete);
  CHECK(min_mitigation_budget(t).is_infinite());
}

TEST_CASE("a cheap fix killing the attack ends the frontier") {
  auto t = kill_switch();
  const auto r = pareto_frontier(t);
  REQUIRE(r.frontier.size() == 2);
  CHECK(r.frontier[0].p_star == doctest::Approx(0.4));
  CHECK(r.frontier[1].cost() == Cost::from_double(1));
  CHECK(r.frontier[1].p_star == 0.0);
  CHECK(r.frontier[1].strategy.fixes == std::vector<std::size_t>{0});
  CHECK(r.c_zero == Cost::from_double(1));
  CHECK(same_points(points_of(r), brute_force_frontier(t)));
  CHECK(min_mitigation_budget(t) == Cost::from_double(1));
}

TEST_CASE("a surviving parent plan avoids a planner call") {
  TaskBuilder b;
  b.network({"vul"})
      .attacker({"s"})
      .goal({"g"})
      .action("x", {"vul"}, {"s"}, 1, {{0.6, {"g"}}, {0.4, {}}})
      .fix("irrelevant", {}, {"elsewhere"}, 1)
      .fix("patch", {"vul"}, {"!vul"}, 10);
  auto t = b.build();
  SearchOptions no_sss;
  no_sss.use_sss = false;  // otherwise the irrelevant fix is never branched on
  const auto r = pareto_frontier(t, no_sss);
  CHECK(r.stats.parent_plan_reuses >= 1);
  CHECK(r.stats.planner_calls < r.stats.nodes_expanded);
  REQUIRE(r.frontier.size() == 2);
  CHECK(r.frontier[0].p_star == doctest::Approx(0.6));
  CHECK(r.frontier[1].cost() == Cost::from_double(10));

  SearchOptions plain = no_sss;
  plain.use_oatt = false;
  const auto r2 = pareto_frontier(t, plain);
  CHECK(r2.stats.parent_plan_reuses == 0);
  CHECK(same_points(points_of(r), points_of(r2)));
}

TEST_CASE("frontier matches brute force on random tasks under every toggle") {
  for (std::uint64_t seed = 1; seed <= 120; ++seed) {
    auto t = random_task(seed);
    const auto expected = brute_force_frontier(t);
    const auto opts = toggles();
    for (std::size_t k = 0; k < opts.size(); ++k) {
      const auto r = pareto_frontier(t, opts[k]);
      CAPTURE(seed);
      CAPTURE(k);
      CHECK(r.complete);
      CHECK(same_points(points_of(r), expected));
      // the empty strategy's point is represented
      REQUIRE_FALSE(r.frontier.empty());
      CHECK(r.frontier.front().cost() == Cost::zero());
      CHECK(std::abs(r.frontier.front().p_star - r.initial_p_star) <= 1e-9);
      for (std::size_t i = 0; i < r.frontier.size(); ++i)
        for (std::size_t j = 0; j < r.frontier.size(); ++j)
          if (i != j) CHECK_FALSE(dominates(r.frontier[i], r.frontier[j]));
      // nothing costlier than the cheapest zero point
      for (const auto& e : r.frontier) CHECK(e.cost() <= r.c_zero);
      // strategies replay to their reported probability
      for (const auto& e : r.frontier) {
        const auto s = apply_strategy(t.initial_network, t.fixes, e.strategy.fixes);
        CHECK(std::abs(exhaustive_p_star(t.pentest, s) - e.p_star) <= 1e-9);
        CHECK(make_strategy(t.fixes, e.strategy.fixes).cost == e.cost());
      }
    }
  }
}

TEST_CASE("minimal mitigation budget matches brute force") {
  for (std::uint64_t seed = 1; seed <= 120; ++seed) {
    auto t = random_task(seed);
    const auto got = min_mitigation_budget(t);
    const auto expected = brute_force_min_mitigation_budget(t);
    CAPTURE(seed);
    if (!expected) {
      CHECK(got.is_infinite());
      continue;
    }
    CHECK(got == *expected);
    auto unbounded = t;
    unbounded.mitigation_budget = Cost::infinite();
    const auto r = pareto_frontier(unbounded);
    for (const auto& e : r.frontier)
      if (e.p_star < r.initial_p_star) CHECK(got <= e.cost());
  }
}

TEST_CASE("search is deterministic") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto t = random_task(seed);
    const auto a = pareto_frontier(t);
    const auto b = pareto_frontier(t);
    REQUIRE(a.frontier.size() == b.frontier.size());
    for (std::size_t i = 0; i < a.frontier.size(); ++i) {
      CHECK(a.frontier[i].strategy.fixes == b.frontier[i].strategy.fixes);
      CHECK(a.frontier[i].p_star == b.frontier[i].p_star);
    }
    CHECK(a.stats.nodes_expanded == b.stats.nodes_expanded);
  }
}

TEST_CASE("cached attacks agree with fresh planner calls") {
  SearchOptions opts;
  opts.export_attack_cache = true;
  std::size_t audited = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    auto t = random_task(seed);
    const auto r = pareto_frontier(t, opts);
    AttackPlanner fresh(t.pentest);
    for (const auto& c : r.attack_cache) {
      CHECK(std::abs(fresh.p_star(c.state) - c.p_star) <= 1e-12);
      ++audited;
    }
  }
  CHECK(audited > 0);
}

TEST_CASE("a limit returns a partial result") {
  auto t = random_task(7, RandomTaskSpec{12, 12, 10, 6, 0.0, 0.0});
  SearchOptions opts;
  opts.time_limit_seconds = 0.0;
  const auto r = pareto_frontier(t, opts);
  CHECK_FALSE(r.complete);
  REQUIRE(r.limit.has_value());
  CHECK(*r.limit == ResourceLimitExceeded::Kind::Time);
}
