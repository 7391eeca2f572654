#pragma once

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kset/analysis.hpp"
#include "kset/protocol.hpp"
#include "kset/scenario.hpp"
#include "kset/sim.hpp"
#include "kset/types.hpp"

namespace kset {

struct SweepRow {
  int n = 0;
  int f = 0;
  int k = 0;
  bool predicted_solvable = false;
  int agreement_violations = 0;
  int seeds_run = 0;
  int worst_distinct_decisions = 0;
  int truncated_runs = 0;
};

struct SweepReport {
  int n_max = 0;
  int seeds = 0;
  std::vector<SweepRow> rows;
};

constexpr int kSweepMaxN = 9;  // keeps whole-grid sweeps to seconds

namespace detail {

inline std::uint64_t sweep_seed(int n, int f, int k, int index) {
  std::uint64_t key = ((static_cast<std::uint64_t>(n) * 100 + static_cast<std::uint64_t>(f)) *
                           100 +
                       static_cast<std::uint64_t>(k)) *
                          1000003ULL +
                      static_cast<std::uint64_t>(index);
  return mix64(key);
}

// Seeded scenario: distinct shuffled inputs, a uniformly sized (0..f) set of
// initially dead processes, fair delivery for the survivors.
inline Scenario sweep_scenario(const SystemParams& params, int index) {
  std::mt19937_64 rng(sweep_seed(params.n, params.f, params.k, index));
  Scenario sc;
  sc.params = params;
  sc.seed = sweep_seed(params.n, params.f, params.k, index);
  sc.adversary = Adversary::initial_crash();
  std::vector<ProcessId> ids = all_processes(params);
  std::vector<Value> values(ids.begin(), ids.end());
  std::shuffle(values.begin(), values.end(), rng);
  for (std::size_t i = 0; i < ids.size(); ++i) sc.inputs[ids[i]] = values[i];
  std::uniform_int_distribution<int> size_pick(0, params.f);
  int dead = size_pick(rng);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int i = 0; i < dead; ++i) sc.initial_dead.insert(ids[static_cast<std::size_t>(i)]);
  return normalize_scenario(std::move(sc));
}

}  // namespace detail

/// Runs the (n, f, k) grid with `seeds` randomized fair/initial-crash runs
/// per tuple, recording observed agreement violations against the predicted
/// solvability. Border tuples (k*n == (k+1)*f) additionally run the
/// deterministic partitioned scenario that forces k+1 distinct decisions.
inline SweepReport run_sweep(int n_max, int seeds) {
  if (n_max < 2 || n_max > kSweepMaxN)
    throw std::invalid_argument("run_sweep: n-max must be in [2, " +
                                std::to_string(kSweepMaxN) + "]");
  if (seeds < 1) throw std::invalid_argument("run_sweep: seeds must be >= 1");
  TwoStageProtocol protocol;
  SweepReport report;
  report.n_max = n_max;
  report.seeds = seeds;
  for (int n = 2; n <= n_max; ++n)
    for (int f = 0; f <= n - 1; ++f)
      for (int k = 1; k <= n - 1; ++k) {
        SystemParams params(n, f, k);
        SweepRow row;
        row.n = n;
        row.f = f;
        row.k = k;
        row.predicted_solvable = solvable(n, f, k);
        auto account = [&](const Trace& trace) {
          ++row.seeds_run;
          if (!trace.complete()) ++row.truncated_runs;
          int distinct = 0;
          {
            std::set<Value> values;
            for (const auto& [p, v] : decisions_of(trace)) values.insert(v);
            distinct = static_cast<int>(values.size());
          }
          row.worst_distinct_decisions = std::max(row.worst_distinct_decisions, distinct);
          bool violated = check_agreement(trace, k).fail() || check_validity(trace).fail() ||
                          check_termination(trace).fail();
          if (violated) ++row.agreement_violations;
        };
        for (int s = 1; s <= seeds; ++s)
          account(run_simulation(protocol, detail::sweep_scenario(params, s)));
        if (static_cast<long long>(k) * n == static_cast<long long>(k + 1) * f)
          account(run_simulation(protocol, make_border_scenario(params)));
        report.rows.push_back(row);
      }
  return report;
}

inline std::string format_sweep_table(const SweepReport& report) {
  std::ostringstream out;
  out << "  n  f  k  solvable  violations  runs  worst-distinct  truncated\n";
  for (const auto& r : report.rows)
    out << std::setw(3) << r.n << std::setw(3) << r.f << std::setw(3) << r.k << std::setw(10)
        << (r.predicted_solvable ? "yes" : "no") << std::setw(12) << r.agreement_violations
        << std::setw(6) << r.seeds_run << std::setw(16) << r.worst_distinct_decisions
        << std::setw(11) << r.truncated_runs << '\n';
  return out.str();
}

inline std::string write_sweep_report(const SweepReport& report) {
  std::ostringstream out;
  out << "sweep v1 n-max=" << report.n_max << " seeds=" << report.seeds << '\n';
  for (const auto& r : report.rows)
    out << "row n=" << r.n << " f=" << r.f << " k=" << r.k
        << " predicted=" << (r.predicted_solvable ? "true" : "false")
        << " violations=" << r.agreement_violations << " runs=" << r.seeds_run
        << " worst=" << r.worst_distinct_decisions << " truncated=" << r.truncated_runs << '\n';
  return out.str();
}

}  // namespace kset
