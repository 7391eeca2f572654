#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kset/replay.hpp"
#include "kset/scenario.hpp"
#include "kset/sim.hpp"
#include "kset/trace.hpp"
#include "kset/types.hpp"
#include "kset/verdict.hpp"

namespace kset {

/// Final decision of each process that decided anywhere in the trace.
inline std::map<ProcessId, Value> decisions_of(const Trace& trace) {
  std::map<ProcessId, Value> out;
  for (const auto& step : trace.steps)
    if (step.decided && !out.count(step.actor)) out.emplace(step.actor, *step.decided);
  return out;
}

/// Uniform k-agreement: at most k distinct decision values across all
/// processes, the faulty included. The witness lists k+1 deciders with
/// pairwise distinct values and their deciding steps.
inline Verdict check_agreement(const Trace& trace, int k) {
  if (k < 1) throw std::invalid_argument("check_agreement: k must be >= 1");
  std::map<Value, std::pair<ProcessId, int>> first_decider;
  for (const auto& step : trace.steps)
    if (step.decided && !first_decider.count(*step.decided))
      first_decider.emplace(*step.decided, std::make_pair(step.actor, step.time));
  if (first_decider.size() <= static_cast<std::size_t>(k)) return Verdict::ok();
  Verdict::Witness w;
  for (const auto& [v, who] : first_decider) {
    if (w.values.size() == static_cast<std::size_t>(k) + 1) break;
    w.values.push_back(v);
    w.processes.push_back(who.first);
    w.times.push_back(who.second);
  }
  w.note = std::to_string(first_decider.size()) + " distinct decisions, bound " +
           std::to_string(k);
  return Verdict::failed(std::move(w));
}

/// Every decision must be some process's input.
inline Verdict check_validity(const Trace& trace) {
  std::set<Value> inputs;
  for (const auto& [p, v] : trace.inputs) inputs.insert(v);
  for (const auto& step : trace.steps)
    if (step.decided && !inputs.count(*step.decided)) {
      Verdict::Witness w;
      w.processes = {step.actor};
      w.times = {step.time};
      w.values = {*step.decided};
      w.note = "decision is nobody's input";
      return Verdict::failed(std::move(w));
    }
  return Verdict::ok();
}

/// Every correct process decides. Judged only on complete traces; a truncated
/// trace leaves termination indeterminate rather than failed.
inline Verdict check_termination(const Trace& trace) {
  if (!trace.complete())
    return Verdict::undecidable("trace is truncated; termination cannot be judged");
  FailurePattern pattern = derive_failure_pattern(trace);
  auto decided = decisions_of(trace);
  for (ProcessId p : trace.universe) {
    if (pattern.faulty().count(p)) continue;
    if (!decided.count(p)) {
      Verdict::Witness w;
      w.processes = {p};
      w.note = "correct process never decides";
      return Verdict::failed(std::move(w));
    }
  }
  return Verdict::ok();
}

/// Delivery fairness: no delivered message sat in its receiver's mailbox for
/// more than `bound` receiver-steps, and a complete trace leaves no message
/// to a correct process undelivered. Meaningful for adversaries that never
/// withhold (fair, initial-crash): a partition adversary's delay is counted
/// from the send, not the release, because traces do not record releases.
inline Verdict check_delivery_fairness(const Trace& trace, int bound) {
  if (bound < 1) throw std::invalid_argument("check_delivery_fairness: bound must be >= 1");
  std::map<MsgId, Message> in_flight;
  std::map<MsgId, int> idle_steps;  // receiver steps taken while pending
  for (const auto& step : trace.steps) {
    for (const auto& m : step.delivered) {
      auto it = in_flight.find(m.id);
      if (it == in_flight.end()) continue;  // replay vouches for honesty, not this checker
      if (idle_steps[m.id] > bound) {
        Verdict::Witness w;
        w.processes = {m.receiver};
        w.times = {m.send_time, step.time};
        w.note = "message " + std::to_string(m.id) + " waited " +
                 std::to_string(idle_steps[m.id]) + " receiver steps, bound " +
                 std::to_string(bound);
        return Verdict::failed(std::move(w));
      }
      in_flight.erase(it);
      idle_steps.erase(m.id);
    }
    for (auto& [id, steps] : idle_steps)
      if (in_flight.at(id).receiver == step.actor) ++steps;
    for (const auto& m : step.sent) {
      in_flight.emplace(m.id, m);
      idle_steps.emplace(m.id, 0);
    }
  }
  if (trace.complete()) {
    auto faulty = derive_failure_pattern(trace).faulty();
    std::set<ProcessId> members(trace.universe.begin(), trace.universe.end());
    for (const auto& [id, m] : in_flight)
      if (members.count(m.receiver) && !faulty.count(m.receiver)) {
        Verdict::Witness w;
        w.processes = {m.receiver};
        w.times = {m.send_time};
        w.note = "message " + std::to_string(id) + " to a correct process never delivered";
        return Verdict::failed(std::move(w));
      }
  }
  return Verdict::ok();
}

/// State-sequence equality for the processes in `scope`, judged on
/// reconstructed tracks: equal up to and including the deciding step when the
/// process decides in both runs; prefix-compatible when it decides in
/// neither; a decision on one side only is a mismatch.
inline Verdict indistinguishable_until_decision(const std::map<ProcessId, StateTrack>& a,
                                                const std::map<ProcessId, StateTrack>& b,
                                                const std::set<ProcessId>& scope) {
  for (ProcessId p : scope) {
    auto ia = a.find(p), ib = b.find(p);
    if (ia == a.end() || ib == b.end()) {
      Verdict::Witness w;
      w.processes = {p};
      w.note = "process missing from a run";
      return Verdict::failed(std::move(w));
    }
    const StateTrack& ta = ia->second;
    const StateTrack& tb = ib->second;
    if (ta.decided_at.has_value() != tb.decided_at.has_value()) {
      Verdict::Witness w;
      w.processes = {p};
      w.note = "process decides in only one run";
      return Verdict::failed(std::move(w));
    }
    std::size_t until = ta.decided_at
                            ? std::max(*ta.decided_at, *tb.decided_at)
                            : std::min(ta.states.size(), tb.states.size()) - 1;
    for (std::size_t i = 0; i <= until; ++i) {
      const std::string* sa = i < ta.states.size() ? &ta.states[i] : nullptr;
      const std::string* sb = i < tb.states.size() ? &tb.states[i] : nullptr;
      if (!sa || !sb || *sa != *sb) {
        Verdict::Witness w;
        w.processes = {p};
        w.times = {static_cast<int>(i)};
        w.note = "state sequences diverge at local state " + std::to_string(i);
        return Verdict::failed(std::move(w));
      }
    }
  }
  return Verdict::ok();
}

/// Convenience overload reconstructing both traces with the same algorithm.
inline Verdict indistinguishable_until_decision(const Trace& a, const Trace& b,
                                                const std::set<ProcessId>& scope,
                                                const Algorithm& algorithm) {
  ReplayResult ra = replay(a, algorithm);
  if (!ra.pass()) return ra.verdict;
  ReplayResult rb = replay(b, algorithm);
  if (!rb.pass()) return rb.verdict;
  return indistinguishable_until_decision(ra.tracks, rb.tracks, scope);
}

/// Compatibility of run families over `scope`: every run in `a` must be
/// indistinguishable (for scope members, until decision) from some run in
/// `b`. Empty `a` passes vacuously. The witness names the unmatched run.
inline Verdict compatible(const std::vector<Trace>& a, const std::vector<Trace>& b,
                          const std::set<ProcessId>& scope, const Algorithm& algorithm) {
  std::vector<std::map<ProcessId, StateTrack>> tracks_b;
  for (const auto& t : b) {
    ReplayResult r = replay(t, algorithm);
    if (!r.pass()) return r.verdict;
    tracks_b.push_back(std::move(r.tracks));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    ReplayResult ra = replay(a[i], algorithm);
    if (!ra.pass()) return ra.verdict;
    bool matched = false;
    for (const auto& tb : tracks_b)
      if (indistinguishable_until_decision(ra.tracks, tb, scope).pass()) {
        matched = true;
        break;
      }
    if (!matched) {
      Verdict::Witness w;
      w.times = {static_cast<int>(i)};
      w.note = "run " + std::to_string(i) + " of the first family matches no run of the second";
      return Verdict::failed(std::move(w));
    }
  }
  return Verdict::ok();
}

/// Scenario in which S hears nothing from outside S until every member of S
/// has decided (or crashed): inbound and outbound messages across the S
/// boundary are withheld with an after-decided(S) release. Inputs default to
/// the identity assignment; a seed shuffles nothing here, it only labels the
/// trace.
inline Scenario make_independence_scenario(const SystemParams& params,
                                           const std::set<ProcessId>& s, std::uint64_t seed) {
  if (s.empty()) throw std::invalid_argument("make_independence_scenario: S must be nonempty");
  for (ProcessId p : s)
    if (p < 1 || p > params.n)
      throw std::invalid_argument("make_independence_scenario: S member out of range");
  Scenario sc;
  sc.params = params;
  sc.seed = seed;
  std::set<ProcessId> rest;
  for (ProcessId p = 1; p <= params.n; ++p)
    if (!s.count(p)) rest.insert(p);
  std::vector<std::set<ProcessId>> blocks{s};
  if (!rest.empty()) blocks.push_back(std::move(rest));
  sc.adversary =
      Adversary::partition_delay(std::move(blocks), {ReleaseRule::Kind::AfterDecided, 0, s});
  sc.step_budget = 1000 + 200 * params.n;
  return normalize_scenario(std::move(sc));
}

struct IndependenceWitness {
  Verdict verdict;
  Trace trace;
};

/// Runs the independence scenario for S. Pass means the run completed: S
/// reached decisions on its own messages alone, so S can act independently.
/// If S starves, the run exhausts its budget and the truncated trace is the
/// failure evidence.
inline IndependenceWitness t_independence_witness(const Algorithm& algorithm,
                                                  const SystemParams& params,
                                                  const std::set<ProcessId>& s,
                                                  std::uint64_t seed = 1) {
  Scenario sc = make_independence_scenario(params, s, seed);
  Trace trace = run_simulation(algorithm, sc);
  if (trace.complete()) return {Verdict::ok(), std::move(trace)};
  Verdict::Witness w;
  w.processes.assign(s.begin(), s.end());
  w.note = "withheld run truncated: S cannot decide on its own messages";
  return {Verdict::failed(std::move(w)), std::move(trace)};
}

/// Whether k-set agreement is achievable with n processes when all f
/// possible crashes are initial (processes dead from the start):
/// k * n > (k + 1) * f, exact integer arithmetic.
inline bool solvable(int n, int f, int k) {
  if (n < 1 || f < 0 || k < 1) throw std::invalid_argument("solvable: bad parameters");
  return static_cast<long long>(k) * n > static_cast<long long>(k + 1) * f;
}

/// Largest k ruled out by the partition argument in the harder failure model
/// where one of the f crashes may strike mid-run: every k <= (n-1)/(n-f) is
/// unattainable there. Zero when f = 0. Note this is a different failure
/// model from `solvable`, which assumes initially-dead processes only; e.g.
/// (n, f) = (5, 3) has k = 2 achievable with initial crashes yet out of
/// reach once a single crash may be delayed.
inline int impossibility_bound(int n, int f) {
  if (n < 1 || f < 0 || f > n - 1)
    throw std::invalid_argument("impossibility_bound: bad parameters");
  if (f == 0) return 0;
  return (n - 1) / (n - f);
}

/// The disjoint process sets behind the partition argument for a given
/// (n, f, k): k - 1 decision blocks of size n - f and a remainder of at least
/// n - f + 1 processes. Exists exactly when k*(n-f) <= n-1.
struct ImpossibilityPartition {
  std::vector<std::set<ProcessId>> blocks;  // D_1 .. D_{k-1}, each of size n - f
  std::set<ProcessId> rest;                 // everything else
};

inline ImpossibilityPartition build_partition(int n, int f, int k) {
  if (n < 1 || f < 0 || f > n - 1 || k < 1)
    throw std::invalid_argument("build_partition: bad parameters");
  long long lhs = static_cast<long long>(k) * (n - f);
  if (lhs > n - 1)
    throw std::invalid_argument("build_partition: need k*(n-f) <= n-1, but " +
                                std::to_string(lhs) + " > " + std::to_string(n - 1));
  const int len = n - f;
  ImpossibilityPartition out;
  ProcessId next = 1;
  for (int i = 0; i < k - 1; ++i) {
    std::set<ProcessId> block;
    for (int j = 0; j < len; ++j) block.insert(next++);
    out.blocks.push_back(std::move(block));
  }
  for (; next <= n; ++next) out.rest.insert(next);
  return out;
}

/// The border-case scenario for kn = (k+1)f: k+1 blocks of n-f processes
/// each, every block cut off from the others until everyone decides, distinct
/// identity inputs. Each block settles on its own smallest member's input, so
/// the run produces exactly k+1 distinct decisions.
inline Scenario make_border_scenario(const SystemParams& params) {
  long long lhs = static_cast<long long>(params.k) * params.n;
  long long rhs = static_cast<long long>(params.k + 1) * params.f;
  if (lhs != rhs)
    throw std::invalid_argument("make_border_scenario: requires k*n == (k+1)*f");
  const int len = params.quorum();
  std::vector<std::set<ProcessId>> blocks;
  ProcessId next = 1;
  for (int i = 0; i < params.k + 1; ++i) {
    std::set<ProcessId> block;
    for (int j = 0; j < len; ++j) block.insert(next++);
    blocks.push_back(std::move(block));
  }
  Scenario sc;
  sc.params = params;
  sc.adversary = Adversary::partition_delay(std::move(blocks),
                                            {ReleaseRule::Kind::AfterAllDecided, 0, {}});
  return normalize_scenario(std::move(sc));
}

}  // namespace kset
