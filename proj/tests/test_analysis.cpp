#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "kset/analysis.hpp"
#include "kset/protocol.hpp"
#include "kset/replay.hpp"
#include "kset/sim.hpp"

using namespace kset;

namespace {

Scenario initial_dead_scenario(SystemParams params, std::set<ProcessId> dead) {
  Scenario sc;
  sc.params = params;
  sc.initial_dead = std::move(dead);
  sc.adversary = Adversary::initial_crash();
  return sc;
}

}  // namespace

TEST_CASE("agreement checker") {
  TwoStageProtocol protocol;
  Trace good = run_simulation(protocol, initial_dead_scenario(SystemParams(3, 1, 1), {3}));
  REQUIRE(check_agreement(good, 1).pass());

  Trace split = run_simulation(protocol, make_border_scenario(SystemParams(4, 2, 1)));
  Verdict v = check_agreement(split, 1);
  REQUIRE(v.fail());
  REQUIRE(v.witness->values == std::vector<Value>{1, 3});
  REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("2 distinct decisions"));
  REQUIRE(check_agreement(split, 2).pass());
  REQUIRE_THROWS_AS(check_agreement(good, 0), std::invalid_argument);
}

TEST_CASE("validity checker") {
  TwoStageProtocol protocol;
  Trace trace = run_simulation(protocol, initial_dead_scenario(SystemParams(3, 1, 1), {3}));
  REQUIRE(check_validity(trace).pass());
  for (auto& step : trace.steps)
    if (step.decided) step.decided = 999;  // nobody proposed 999
  Verdict v = check_validity(trace);
  REQUIRE(v.fail());
  REQUIRE(v.witness->values == std::vector<Value>{999});
  REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("nobody's input"));
}

TEST_CASE("termination checker") {
  TwoStageProtocol protocol;
  Scenario sc = initial_dead_scenario(SystemParams(3, 1, 1), {3});
  Trace trace = run_simulation(protocol, sc);
  REQUIRE(check_termination(trace).pass());

  SECTION("truncated runs cannot be judged") {
    Scenario cut = sc;
    cut.step_budget = 2;
    Verdict v = check_termination(run_simulation(protocol, cut));
    REQUIRE(v.indeterminate());
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("a silent correct process fails a complete trace") {
    Trace cut = trace;
    cut.steps.pop_back();  // drop p1's deciding step, status still claims complete
    Verdict v = check_termination(cut);
    REQUIRE(v.fail());
    REQUIRE(v.witness->processes == std::vector<ProcessId>{1});
  }
}

TEST_CASE("solvability boundary is exact") {
  REQUIRE(solvable(3, 1, 1));
  REQUIRE(solvable(5, 3, 2));
  REQUIRE(solvable(4, 2, 2));
  REQUIRE_FALSE(solvable(2, 1, 1));
  REQUIRE_FALSE(solvable(4, 2, 1));
  REQUIRE_FALSE(solvable(6, 4, 2));
  REQUIRE_FALSE(solvable(9, 6, 2));
  REQUIRE_FALSE(solvable(8, 6, 3));
  REQUIRE(solvable(5, 0, 1));
  REQUIRE_THROWS_AS(solvable(0, 0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(solvable(3, -1, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(solvable(3, 1, 0), std::invalid_argument);
}

TEST_CASE("unreachable k under a delayed crash") {
  REQUIRE(impossibility_bound(5, 3) == 2);
  REQUIRE(impossibility_bound(4, 2) == 1);
  REQUIRE(impossibility_bound(5, 4) == 4);
  REQUIRE(impossibility_bound(6, 4) == 2);
  REQUIRE(impossibility_bound(9, 6) == 2);
  REQUIRE(impossibility_bound(5, 0) == 0);
  REQUIRE_THROWS_AS(impossibility_bound(3, 3), std::invalid_argument);

  // Whenever k is ruled out, the witness partition exists and is disjoint,
  // covering, with k - 1 tight blocks and a strictly larger remainder.
  for (int n = 1; n <= 9; ++n)
    for (int f = 0; f <= n - 1; ++f) {
      int bound = impossibility_bound(n, f);
      for (int k = 1; k <= bound; ++k) {
        CAPTURE(n, f, k);
        ImpossibilityPartition part = build_partition(n, f, k);
        REQUIRE(part.blocks.size() == static_cast<std::size_t>(k - 1));
        std::set<ProcessId> seen;
        for (const auto& block : part.blocks) {
          REQUIRE(block.size() == static_cast<std::size_t>(n - f));
          for (ProcessId p : block) REQUIRE(seen.insert(p).second);
        }
        for (ProcessId p : part.rest) REQUIRE(seen.insert(p).second);
        REQUIRE(seen.size() == static_cast<std::size_t>(n));
        REQUIRE(part.rest.size() >= static_cast<std::size_t>(n - f + 1));
      }
      // One past the bound the tight partition no longer fits.
      REQUIRE_THROWS_AS(build_partition(n, f, bound + 1), std::invalid_argument);
    }

  REQUIRE(build_partition(5, 3, 2).blocks == std::vector<std::set<ProcessId>>{{1, 2}});
  REQUIRE(build_partition(5, 3, 2).rest == std::set<ProcessId>{3, 4, 5});
  REQUIRE_THROWS_WITH(build_partition(4, 2, 2),
                      Catch::Matchers::ContainsSubstring("k*(n-f) <= n-1"));
}

TEST_CASE("border runs land on exactly k+1 decisions") {
  TwoStageProtocol protocol;
  struct Border {
    int n, f, k;
  };
  for (Border b : {Border{2, 1, 1}, Border{4, 2, 1}, Border{6, 4, 2}, Border{3, 2, 2}}) {
    CAPTURE(b.n, b.f, b.k);
    Trace trace = run_simulation(protocol, make_border_scenario(SystemParams(b.n, b.f, b.k)));
    REQUIRE(trace.complete());
    std::set<Value> distinct;
    for (const auto& [p, v] : decisions_of(trace)) distinct.insert(v);
    REQUIRE(distinct.size() == static_cast<std::size_t>(b.k + 1));
    REQUIRE(check_agreement(trace, b.k).fail());
    REQUIRE(check_agreement(trace, b.k + 1).pass());
    REQUIRE(check_validity(trace).pass());
    REQUIRE(check_termination(trace).pass());
  }
  REQUIRE_THROWS_WITH(make_border_scenario(SystemParams(3, 1, 1)),
                      Catch::Matchers::ContainsSubstring("k*n == (k+1)*f"));
}

TEST_CASE("state-track indistinguishability") {
  TwoStageProtocol protocol;
  Scenario sc = initial_dead_scenario(SystemParams(3, 1, 1), {3});
  sc.inputs = {{1, 10}, {2, 20}, {3, 30}};
  Trace a = run_simulation(protocol, sc);

  SECTION("every run matches itself") {
    REQUIRE(indistinguishable_until_decision(a, a, {1, 2}, protocol).pass());
  }
  SECTION("an input change is visible from the very first state") {
    Scenario other = sc;
    other.inputs[1] = 11;
    Trace b = run_simulation(protocol, other);
    Verdict v = indistinguishable_until_decision(a, b, {1}, protocol);
    REQUIRE(v.fail());
    REQUIRE(v.witness->times == std::vector<int>{0});
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("local state 0"));
  }
  SECTION("deciding in only one run is a mismatch") {
    Scenario cut = sc;
    cut.step_budget = 3;
    Trace b = run_simulation(protocol, cut);
    Verdict v = indistinguishable_until_decision(a, b, {2}, protocol);
    REQUIRE(v.fail());
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("only one run"));
  }
  SECTION("scope members must exist in both runs") {
    Verdict v = indistinguishable_until_decision(a, a, {9}, protocol);
    REQUIRE(v.fail());
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("missing"));
  }
}

TEST_CASE("run-family compatibility") {
  TwoStageProtocol protocol;
  Scenario sc = initial_dead_scenario(SystemParams(3, 1, 1), {3});
  Trace a = run_simulation(protocol, sc);
  Scenario other = sc;
  other.inputs = {{1, 11}, {2, 20}, {3, 30}};
  Trace b = run_simulation(protocol, other);

  REQUIRE(compatible({a}, {b, a}, {1, 2}, protocol).pass());
  REQUIRE(compatible({}, {b}, {1, 2}, protocol).pass());
  Verdict v = compatible({a}, {b}, {1}, protocol);
  REQUIRE(v.fail());
  REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("matches no run"));
}

TEST_CASE("a block can decide alone exactly when it covers the quota") {
  TwoStageProtocol protocol;
  SystemParams params(4, 2, 1);
  for (const auto& s : std::vector<std::set<ProcessId>>{{1, 2}, {2, 3}, {1, 2, 3}}) {
    IndependenceWitness w = t_independence_witness(protocol, params, s);
    CAPTURE(detail::join_ids(std::vector<ProcessId>(s.begin(), s.end())));
    REQUIRE(w.verdict.pass());
    REQUIRE(w.trace.complete());
  }
  IndependenceWitness starved = t_independence_witness(protocol, params, {1});
  REQUIRE(starved.verdict.fail());
  REQUIRE_FALSE(starved.trace.complete());
  REQUIRE_THAT(starved.verdict.witness->note,
               Catch::Matchers::ContainsSubstring("cannot decide"));

  // With f = n - 1 the quota is empty and even a singleton is self-sufficient.
  IndependenceWitness solo = t_independence_witness(protocol, SystemParams(4, 3, 1), {1});
  REQUIRE(solo.verdict.pass());

  REQUIRE_THROWS_AS(make_independence_scenario(params, {}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(make_independence_scenario(params, {9}, 1), std::invalid_argument);
}

TEST_CASE("pasting per-block runs") {
  TwoStageProtocol protocol;
  SystemParams params(4, 2, 1);
  std::vector<std::set<ProcessId>> blocks{{1, 2}, {3, 4}};
  Trace left = run_simulation(protocol, initial_dead_scenario(params, {3, 4}));
  Trace right = run_simulation(protocol, initial_dead_scenario(params, {1, 2}));
  REQUIRE(decisions_of(left) == std::map<ProcessId, Value>{{1, 1}, {2, 1}});
  REQUIRE(decisions_of(right) == std::map<ProcessId, Value>{{3, 3}, {4, 3}});

  Trace pasted = paste_runs(blocks, {left, right}, protocol);
  REQUIRE(pasted.complete());
  REQUIRE(decisions_of(pasted) ==
          std::map<ProcessId, Value>{{1, 1}, {2, 1}, {3, 3}, {4, 3}});
  REQUIRE(pasted.declared_crashes.empty());

  ReplayResult replayed = replay(pasted, protocol);
  REQUIRE(replayed.pass());

  // Until they decide, block members cannot tell the pasted run from the one
  // where the other block was dead all along.
  ReplayResult rl = replay(left, protocol);
  ReplayResult rr = replay(right, protocol);
  REQUIRE(indistinguishable_until_decision(replayed.tracks, rl.tracks, {1, 2}).pass());
  REQUIRE(indistinguishable_until_decision(replayed.tracks, rr.tracks, {3, 4}).pass());
  REQUIRE(indistinguishable_until_decision(replayed.tracks, rl.tracks, {3, 4}).fail());

  SECTION("input validation") {
    REQUIRE_THROWS_WITH(paste_runs(blocks, {left}, protocol),
                        Catch::Matchers::ContainsSubstring("counts differ"));
    REQUIRE_THROWS_WITH(paste_runs({{1, 3}, {2, 4}}, {left, right}, protocol),
                        Catch::Matchers::ContainsSubstring("initially dead"));
    REQUIRE_THROWS_WITH(paste_runs({{1, 2}, {3}}, {left, right}, protocol),
                        Catch::Matchers::ContainsSubstring("cover all processes"));
    Trace cut = left;
    cut.status = TraceStatus::Truncated;
    REQUIRE_THROWS_WITH(paste_runs(blocks, {cut, right}, protocol),
                        Catch::Matchers::ContainsSubstring("complete"));
  }
}
