#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>
#include <set>
#include <vector>

#include "kset/detectors.hpp"

using namespace kset;

namespace {

// Brute-force reading of the quorum laws, kept deliberately dumb: walk every
// choice of k+1 distinct processes with arbitrary query times and test
// pairwise disjointness with set intersection.
bool sigma_holds_naive(const FDHistory& h, int k) {
  std::vector<std::pair<ProcessId, int>> chosen;
  std::function<bool(ProcessId)> disjoint_tuple = [&](ProcessId from) -> bool {
    if (chosen.size() == static_cast<std::size_t>(k + 1)) return true;
    for (ProcessId p = from; p <= h.n; ++p)
      for (int t = 1; t <= h.horizon; ++t) {
        const auto& out = h.sigma_at(p, t);
        std::set<ProcessId> mine(out.begin(), out.end());
        bool ok = true;
        for (const auto& [q, tq] : chosen) {
          for (ProcessId x : h.sigma_at(q, tq))
            if (mine.count(x)) {
              ok = false;
              break;
            }
          if (!ok) break;
        }
        if (!ok) continue;
        chosen.emplace_back(p, t);
        if (disjoint_tuple(p + 1)) return true;
        chosen.pop_back();
      }
    return false;
  };
  if (disjoint_tuple(1)) return false;
  auto faulty = h.pattern.faulty();
  for (ProcessId p = 1; p <= h.n; ++p) {
    if (faulty.count(p)) continue;
    for (ProcessId q : h.sigma_at(p, h.horizon))
      if (faulty.count(q)) return false;
  }
  return true;
}

FDHistory constant_history(int n, int horizon, const std::vector<ProcessId>& sigma_out,
                           const std::vector<ProcessId>& omega_out,
                           FailurePattern pattern = {}) {
  FDHistory h;
  h.n = n;
  h.horizon = horizon;
  h.pattern = std::move(pattern);
  h.sigma.assign(n, std::vector<std::vector<ProcessId>>(horizon, sigma_out));
  h.omega.assign(n, std::vector<std::vector<ProcessId>>(horizon, omega_out));
  return h;
}

FDHistory random_history(std::mt19937_64& rng, int n, int horizon) {
  FDHistory h;
  h.n = n;
  h.horizon = horizon;
  for (ProcessId p = 1; p <= n; ++p)
    if (rng() % 4 == 0) h.pattern.mark_crashed(p, 1 + static_cast<int>(rng() % horizon));
  auto random_subset = [&] {
    std::vector<ProcessId> out;
    for (ProcessId q = 1; q <= n; ++q)
      if (rng() % 2 == 0) out.push_back(q);
    return out;
  };
  h.sigma.assign(n, std::vector<std::vector<ProcessId>>(horizon));
  h.omega.assign(n, std::vector<std::vector<ProcessId>>(horizon));
  for (ProcessId p = 1; p <= n; ++p)
    for (int t = 1; t <= horizon; ++t) {
      h.sigma[p - 1][t - 1] = random_subset();
      h.omega[p - 1][t - 1] = {static_cast<ProcessId>(1 + rng() % n)};
    }
  return h;
}

// All ways of splitting {1..n} into nonempty unlabeled blocks.
std::vector<std::vector<std::set<ProcessId>>> all_partitions(int n) {
  std::vector<std::vector<std::set<ProcessId>>> out;
  std::vector<std::set<ProcessId>> cur;
  std::function<void(ProcessId)> place = [&](ProcessId p) {
    if (p > n) {
      out.push_back(cur);
      return;
    }
    // Index loop: the recursive call grows `cur` and may reallocate it.
    for (std::size_t i = 0; i < cur.size(); ++i) {
      cur[i].insert(p);
      place(p + 1);
      cur[i].erase(p);
    }
    cur.push_back({p});
    place(p + 1);
    cur.pop_back();
  };
  place(1);
  return out;
}

}  // namespace

TEST_CASE("quorum checker agrees with the brute-force reading") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    int horizon = 1 + static_cast<int>(rng() % 3);
    FDHistory h = random_history(rng, n, horizon);
    for (int k = 1; k <= n - 1; ++k) {
      CAPTURE(trial, n, horizon, k);
      REQUIRE(check_sigma_k(h, k).pass() == sigma_holds_naive(h, k));
    }
  }
}

TEST_CASE("quorum checker on hand-built histories") {
  std::vector<ProcessId> everyone{1, 2, 3};
  SECTION("full outputs satisfy every k when nobody crashes") {
    FDHistory h = constant_history(3, 4, everyone, {1});
    REQUIRE(check_sigma_k(h, 1).pass());
    REQUIRE(check_sigma_k(h, 2).pass());
  }
  SECTION("full outputs break liveness once someone crashes") {
    FailurePattern pattern;
    pattern.mark_crashed(2, 1);
    FDHistory h = constant_history(3, 4, everyone, {1}, pattern);
    Verdict v = check_sigma_k(h, 2);
    REQUIRE(v.fail());
    REQUIRE(v.witness->times == std::vector<int>{4});
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("faulty"));
  }
  SECTION("self-only outputs are pairwise disjoint") {
    FDHistory h = constant_history(3, 2, {}, {1});
    for (ProcessId p = 1; p <= 3; ++p)
      for (int t = 1; t <= 2; ++t) h.sigma[p - 1][t - 1] = {p};
    Verdict v = check_sigma_k(h, 1);
    REQUIRE(v.fail());
    REQUIRE(v.witness->processes.size() == 2);
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("disjoint"));
  }
  SECTION("three blocks support k = 3 but not k = 2") {
    std::vector<std::set<ProcessId>> blocks{{1, 2}, {3, 4}, {5, 6}};
    FDHistory h = make_partition_history(blocks, {}, 1, {1, 3, 5}, 4);
    REQUIRE(check_sigma_k(h, 2).fail());
    REQUIRE(check_sigma_k(h, 3).pass());
  }
  SECTION("argument validation") {
    FDHistory h = constant_history(2, 1, {1, 2}, {1});
    REQUIRE_THROWS_AS(check_sigma_k(h, 0), std::invalid_argument);
    h.sigma.pop_back();
    REQUIRE_THROWS_AS(check_sigma_k(h, 1), std::invalid_argument);
  }
}

TEST_CASE("leader checker on hand-built histories") {
  SECTION("constant singleton leader") {
    FDHistory h = constant_history(3, 3, {1, 2, 3}, {2});
    REQUIRE(check_omega_k(h, 1).pass());
    REQUIRE(check_omega_k(h, 2).fail());  // every output must have exactly k members
  }
  SECTION("rotation before stabilization is fine") {
    FailurePattern pattern;
    pattern.mark_crashed(4, 2);
    std::vector<std::set<ProcessId>> blocks{{1, 2}, {3, 4}};
    FDHistory h = make_partition_history(blocks, pattern, 5, {1, 3}, 8);
    REQUIRE(check_omega_k(h, 2).pass());
    REQUIRE(check_sigma_k(h, 2).pass());
  }
  SECTION("divergent outputs at the horizon") {
    FDHistory h = constant_history(2, 2, {1, 2}, {1});
    h.omega[1][1] = {2};
    Verdict v = check_omega_k(h, 1);
    REQUIRE(v.fail());
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("common leader"));
  }
  SECTION("stable leader set of ghosts") {
    FailurePattern pattern;
    pattern.mark_crashed(2, 1);
    FDHistory h = constant_history(2, 2, {1, 2}, {2}, pattern);
    Verdict v = check_omega_k(h, 1);
    REQUIRE(v.fail());
    REQUIRE_THAT(v.witness->note, Catch::Matchers::ContainsSubstring("no correct process"));
  }
  SECTION("argument validation") {
    FDHistory h = constant_history(2, 1, {1, 2}, {1});
    REQUIRE_THROWS_AS(check_omega_k(h, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(check_omega_k(h, 3), std::invalid_argument);
  }
}

TEST_CASE("partition histories satisfy both laws for k = block count") {
  const int horizon = 6;
  for (int n = 2; n <= 4; ++n) {
    for (const auto& blocks : all_partitions(n)) {
      const int k = static_cast<int>(blocks.size());
      std::vector<FailurePattern> patterns{FailurePattern{}};
      for (ProcessId p = 1; p <= n; ++p)
        for (int t : {1, horizon / 2, horizon}) {
          FailurePattern pat;
          pat.mark_crashed(p, t);
          patterns.push_back(pat);
        }
      for (const auto& pattern : patterns) {
        auto faulty = pattern.faulty();
        std::set<ProcessId> ld;
        for (const auto& block : blocks) {
          ProcessId pick = *block.begin();
          for (ProcessId q : block)
            if (!faulty.count(q)) {
              pick = q;
              break;
            }
          ld.insert(pick);
        }
        FDHistory h = make_partition_history(blocks, pattern, horizon / 2 + 1, ld, horizon);
        CAPTURE(n, k, to_string(check_sigma_k(h, k)), to_string(check_omega_k(h, k)));
        REQUIRE(check_sigma_k(h, k).pass());
        REQUIRE(check_omega_k(h, k).pass());
      }
    }
  }
}

TEST_CASE("partition history validation") {
  std::vector<std::set<ProcessId>> two{{1, 2}, {3}};
  REQUIRE_THROWS_WITH(make_partition_history({}, {}, 1, {1}, 4),
                      Catch::Matchers::ContainsSubstring("no blocks"));
  REQUIRE_THROWS_WITH(make_partition_history({{1, 2}, {2, 3}}, {}, 1, {1}, 4),
                      Catch::Matchers::ContainsSubstring("overlap"));
  REQUIRE_THROWS_WITH(make_partition_history({{1, 3}}, {}, 1, {1}, 4),
                      Catch::Matchers::ContainsSubstring("partition 1..n"));
  REQUIRE_THROWS_WITH(make_partition_history(two, {}, 1, {9}, 4),
                      Catch::Matchers::ContainsSubstring("stranger"));
  REQUIRE_THROWS_WITH(make_partition_history(two, {}, 9, {1}, 4),
                      Catch::Matchers::ContainsSubstring("t_gst"));
  REQUIRE_THROWS_WITH(make_partition_history(two, {}, 1, {}, 4),
                      Catch::Matchers::ContainsSubstring("correct member"));
  FailurePattern dead_one;
  dead_one.mark_crashed(1, 1);
  REQUIRE_THROWS_WITH(make_partition_history(two, dead_one, 1, {1}, 4),
                      Catch::Matchers::ContainsSubstring("correct member"));
  FailurePattern stranger(std::map<ProcessId, int>{{7, 1}});
  REQUIRE_THROWS_WITH(make_partition_history(two, stranger, 1, {1}, 4),
                      Catch::Matchers::ContainsSubstring("stranger"));
}

TEST_CASE("history files round-trip") {
  FailurePattern pattern;
  pattern.mark_crashed(2, 3);
  FDHistory h = make_partition_history({{1, 2}, {3, 4}}, pattern, 2, {1, 3}, 4);
  std::string text = write_history(h);
  FDHistory back = parse_history(text);
  REQUIRE(write_history(back) == text);
  REQUIRE(back.n == 4);
  REQUIRE(back.horizon == 4);
  REQUIRE(back.pattern.crashed_from() == pattern.crashed_from());
  REQUIRE(back.sigma_at(1, 4) == std::vector<ProcessId>{1});
  REQUIRE(back.omega_at(4, 4) == std::vector<ProcessId>{1, 3});
}

TEST_CASE("history parsing reports line numbers") {
  REQUIRE_THROWS_WITH(parse_history(""), Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_WITH(parse_history("fdhistory v1 n=2 horizon=1 crashes=-\n"
                                    "h t=5 p=1 sigma=1 omega=1\n"),
                      Catch::Matchers::ContainsSubstring("line 2") &&
                          Catch::Matchers::ContainsSubstring("outside"));
  REQUIRE_THROWS_WITH(parse_history("fdhistory v1 n=2 horizon=1 crashes=-\n"
                                    "h t=1 p=1 sigma=1 omega=1 junk\n"),
                      Catch::Matchers::ContainsSubstring("trailing"));
  REQUIRE_THROWS_WITH(parse_history("fdhistory v1 n=2 horizon=1 crashes=x@y\n"),
                      Catch::Matchers::ContainsSubstring("bad"));
}
