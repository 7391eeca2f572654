#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kset/algorithm.hpp"
#include "kset/scenario.hpp"
#include "kset/trace.hpp"
#include "kset/types.hpp"

namespace kset {

/// Optional deterministic failure-detector feed: queried once per step with
/// (actor, time). Simulations of the two-stage protocol run without one.
using FdSource = std::function<std::optional<FdValue>(ProcessId, int)>;

namespace detail {

class SimCore {
 public:
  SimCore(const Algorithm& algorithm, Scenario sc, FdSource fd)
      : algorithm_(algorithm), sc_(std::move(sc)), fd_(std::move(fd)) {
    for (ProcessId p : sc_.universe) {
      block_of_[p] = -1;
      for (std::size_t b = 0; b < sc_.adversary.blocks.size(); ++b)
        if (sc_.adversary.blocks[b].count(p)) block_of_[p] = static_cast<int>(b);
    }
    trace_.params = sc_.params;
    trace_.universe = sc_.universe;
    trace_.inputs = sc_.inputs;
    trace_.seed = sc_.seed;
    for (ProcessId p : sc_.universe) {
      if (sc_.initial_dead.count(p)) {
        crashed_.insert(p);
        trace_.declared_crashes[p] = 1;
        continue;
      }
      states_[p] = algorithm_.initial_state(p, sc_.params, sc_.inputs.at(p));
    }
    released_ = sc_.adversary.kind != AdversaryKind::PartitionDelay;
  }

  Trace run() {
    int time = 0;
    std::size_t rotation = 0;
    while (true) {
      if (quiescent()) {
        trace_.status = TraceStatus::Complete;
        break;
      }
      if (time >= sc_.step_budget) {
        trace_.status = TraceStatus::Truncated;
        break;
      }
      ++time;
      maybe_release(time);
      // Round-robin over the universe, skipping crashed processes. At least
      // one process is alive (scenario validation) so this terminates.
      while (crashed_.count(sc_.universe[rotation]))
        rotation = (rotation + 1) % sc_.universe.size();
      ProcessId actor = sc_.universe[rotation];
      rotation = (rotation + 1) % sc_.universe.size();
      step(actor, time);
      maybe_release(time);
    }
    return std::move(trace_);
  }

 private:
  void step(ProcessId actor, int time) {
    std::vector<Message> delivered;
    auto box = mailbox_.find(actor);
    if (box != mailbox_.end() && !box->second.empty()) {
      delivered.assign(box->second.begin(), box->second.end());
      box->second.clear();
    }
    std::optional<FdValue> fd = fd_ ? fd_(actor, time) : std::nullopt;

    bool crash_now = sc_.mid_run_crash && sc_.mid_run_crash->pid == actor &&
                     local_steps_[actor] + 1 == sc_.mid_run_crash->after_local_steps;
    ++local_steps_[actor];

    std::vector<Outgoing> outgoing = algorithm_.sending(*states_[actor], delivered);
    std::vector<Message> sent;
    for (auto& o : outgoing) {
      Message m{next_id_++, actor, o.receiver, time, std::move(o.payload)};
      if (crash_now && sc_.mid_run_crash->omit.count(m.receiver)) continue;  // omitted: id burned
      route(m);
      sent.push_back(std::move(m));
    }

    StatePtr next = algorithm_.transition(*states_[actor], delivered, fd);
    std::optional<Value> decided = algorithm_.decision(*next);
    states_[actor] = std::move(next);
    if (decided) decided_[actor] = *decided;

    StepRecord rec;
    rec.time = time;
    rec.actor = actor;
    rec.delivered = std::move(delivered);
    rec.fd_output = std::move(fd);
    rec.sent = std::move(sent);
    rec.decided = decided;
    trace_.steps.push_back(std::move(rec));

    if (crash_now) {
      crashed_.insert(actor);
      trace_.declared_crashes[actor] = time + 1;
    }
  }

  void route(const Message& m) {
    if (!block_of_.count(m.receiver)) return;  // outside the universe: no such endpoint
    if (!released_ && cross_block(m.sender, m.receiver)) {
      withheld_[m.receiver].push_back(m);
      return;
    }
    mailbox_[m.receiver].push_back(m);
  }

  bool cross_block(ProcessId a, ProcessId b) const {
    int ba = block_of_.at(a), bb = block_of_.at(b);
    return ba != -1 && bb != -1 && ba != bb;
  }

  void maybe_release(int time) {
    if (released_) return;
    const auto& rule = sc_.adversary.release;
    bool fire = false;
    switch (rule.kind) {
      case ReleaseRule::Kind::AtStep: fire = time >= rule.step; break;
      case ReleaseRule::Kind::AfterAllDecided: {
        fire = true;
        for (ProcessId p : sc_.universe)
          if (!crashed_.count(p) && !decided_.count(p)) {
            fire = false;
            break;
          }
        break;
      }
      case ReleaseRule::Kind::AfterDecided: {
        fire = true;
        for (ProcessId p : rule.who)
          if (!crashed_.count(p) && !decided_.count(p)) {
            fire = false;
            break;
          }
        break;
      }
    }
    if (!fire) return;
    released_ = true;
    // Withheld messages join the mailboxes in global emission order.
    std::vector<Message> all;
    for (auto& [p, msgs] : withheld_)
      for (auto& m : msgs) all.push_back(std::move(m));
    withheld_.clear();
    std::sort(all.begin(), all.end(), [](const Message& a, const Message& b) { return a.id < b.id; });
    for (auto& m : all) mailbox_[m.receiver].push_back(std::move(m));
  }

  bool quiescent() const {
    for (ProcessId p : sc_.universe) {
      if (crashed_.count(p)) continue;
      if (!decided_.count(p)) return false;
      auto box = mailbox_.find(p);
      if (box != mailbox_.end() && !box->second.empty()) return false;
      auto held = withheld_.find(p);
      if (held != withheld_.end() && !held->second.empty()) return false;
    }
    return true;
  }

  const Algorithm& algorithm_;
  Scenario sc_;
  FdSource fd_;
  Trace trace_;
  std::map<ProcessId, StatePtr> states_;
  std::map<ProcessId, std::deque<Message>> mailbox_;
  std::map<ProcessId, std::vector<Message>> withheld_;
  std::map<ProcessId, int> local_steps_;
  std::map<ProcessId, Value> decided_;
  std::set<ProcessId> crashed_;
  std::map<ProcessId, int> block_of_;
  MsgId next_id_ = 1;
  bool released_ = false;
};

}  // namespace detail

/// Deterministic simulation: round-robin scheduling over non-crashed
/// processes, adversary-controlled delivery, one process step per time unit.
/// The run ends complete at quiescence (every correct process decided and
/// every releasable message to a correct process delivered) or truncated when
/// the step budget runs out. Identical (scenario, seed) yields a
/// byte-identical trace.
inline Trace run_simulation(const Algorithm& algorithm, const Scenario& scenario,
                            FdSource fd = nullptr) {
  return detail::SimCore(algorithm, normalize_scenario(scenario), std::move(fd)).run();
}

/// Splices per-block runs into one run of the full system: the i-th run's
/// steps are copied with fresh times and message ids (each block's processes
/// evolve through exactly the states they saw in their own run), and only
/// afterwards are the accumulated cross-block messages delivered, fair and
/// round-robin, until quiescence. Each runs[i] must be a complete run in
/// which exactly the processes outside partition[i] are initially dead.
inline Trace paste_runs(const std::vector<std::set<ProcessId>>& partition,
                        const std::vector<Trace>& runs, const Algorithm& algorithm) {
  if (runs.empty()) throw std::invalid_argument("paste_runs: no runs given");
  if (partition.size() != runs.size())
    throw std::invalid_argument("paste_runs: partition and run counts differ");
  const SystemParams params = runs.front().params;
  std::map<ProcessId, int> block_of;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (partition[i].empty()) throw std::invalid_argument("paste_runs: empty block");
    for (ProcessId p : partition[i]) {
      if (p < 1 || p > params.n)
        throw std::invalid_argument("paste_runs: block member out of range");
      if (!block_of.emplace(p, static_cast<int>(i)).second)
        throw std::invalid_argument("paste_runs: blocks overlap");
    }
  }
  if (block_of.size() != static_cast<std::size_t>(params.n))
    throw std::invalid_argument("paste_runs: partition must cover all processes");

  Trace out;
  out.params = params;
  out.universe = all_processes(params);
  out.seed = runs.front().seed;

  std::map<ProcessId, StatePtr> states;
  std::map<ProcessId, std::optional<Value>> decided;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Trace& run = runs[i];
    if (!(run.params == params))
      throw std::invalid_argument("paste_runs: runs disagree on system parameters");
    if (!run.complete()) throw std::invalid_argument("paste_runs: runs must be complete");
    if (run.universe != out.universe)
      throw std::invalid_argument("paste_runs: runs must cover the full system");
    for (ProcessId p = 1; p <= params.n; ++p) {
      bool inside = partition[i].count(p) > 0;
      bool dead = run.declared_crashes.count(p) && run.declared_crashes.at(p) == 1;
      if (inside == dead)
        throw std::invalid_argument(
            "paste_runs: run " + std::to_string(i) +
            " must leave exactly the processes outside its block initially dead");
    }
    for (ProcessId p : partition[i]) {
      auto it = run.inputs.find(p);
      if (it == run.inputs.end())
        throw std::invalid_argument("paste_runs: run lacks an input for a block member");
      out.inputs[p] = it->second;
      states[p] = algorithm.initial_state(p, params, it->second);
    }
  }

  MsgId next_id = 1;
  int time = 0;
  std::map<ProcessId, std::deque<Message>> pending;  // undelivered, per receiver

  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::map<MsgId, Message> remapped;  // this run's old id -> new message
    std::set<MsgId> seen_delivery;
    for (const auto& step : runs[i].steps) {
      if (!partition[i].count(step.actor))
        throw std::invalid_argument("paste_runs: step by a process outside the block");
      ++time;
      std::vector<Message> delivered;
      for (const auto& old : step.delivered) {
        auto it = remapped.find(old.id);
        if (it == remapped.end() || !seen_delivery.insert(old.id).second)
          throw std::invalid_argument("paste_runs: delivery without a matching send");
        delivered.push_back(it->second);
      }
      std::vector<Outgoing> outgoing = algorithm.sending(*states[step.actor], delivered);
      if (outgoing.size() != step.sent.size())
        throw std::invalid_argument("paste_runs: run does not replay against the algorithm");
      std::vector<Message> sent;
      for (std::size_t j = 0; j < outgoing.size(); ++j) {
        const Message& old = step.sent[j];
        if (old.receiver != outgoing[j].receiver || !(old.payload == outgoing[j].payload))
          throw std::invalid_argument("paste_runs: run does not replay against the algorithm");
        Message m{next_id++, step.actor, outgoing[j].receiver, time,
                  std::move(outgoing[j].payload)};
        remapped.emplace(old.id, m);
        sent.push_back(m);
        // Deliveries inside the segment consume from `pending` lazily: since
        // the source run was complete, every intra-block message is delivered
        // within the segment, so whatever remains afterwards is cross-block.
        pending[m.receiver].push_back(std::move(m));
      }
      for (const auto& m : delivered) {
        auto& box = pending[m.receiver];
        auto it = std::find_if(box.begin(), box.end(),
                               [&](const Message& x) { return x.id == m.id; });
        if (it == box.end())
          throw std::invalid_argument("paste_runs: delivery without a matching send");
        box.erase(it);
      }
      StatePtr next = algorithm.transition(*states[step.actor], delivered, step.fd_output);
      std::optional<Value> now = algorithm.decision(*next);
      if (now != step.decided)
        throw std::invalid_argument("paste_runs: decision does not replay");
      states[step.actor] = std::move(next);
      if (now) decided[step.actor] = now;

      StepRecord rec;
      rec.time = time;
      rec.actor = step.actor;
      rec.delivered = std::move(delivered);
      rec.fd_output = step.fd_output;
      rec.sent = std::move(sent);
      rec.decided = step.decided;
      out.steps.push_back(std::move(rec));
    }
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (ProcessId p : partition[i])
      if (!decided[p])
        throw std::invalid_argument("paste_runs: block member undecided in its own run");

  // Drain phase: everything still pending is a cross-block message. Deliver
  // fair, one round-robin pass at a time; transitions may emit further
  // messages (not with this protocol, but the loop does not assume that).
  std::size_t rotation = 0;
  const int guard = time + 10000;
  auto drained = [&]() {
    for (const auto& [p, box] : pending)
      if (!box.empty()) return false;
    return true;
  };
  while (!drained()) {
    if (time >= guard) throw std::logic_error("paste_runs: drain phase failed to quiesce");
    ++time;
    ProcessId actor = out.universe[rotation];
    rotation = (rotation + 1) % out.universe.size();
    std::vector<Message> delivered;
    auto& box = pending[actor];
    delivered.assign(box.begin(), box.end());
    box.clear();
    std::vector<Outgoing> outgoing = algorithm.sending(*states[actor], delivered);
    std::vector<Message> sent;
    for (auto& o : outgoing) {
      Message m{next_id++, actor, o.receiver, time, std::move(o.payload)};
      pending[m.receiver].push_back(m);
      sent.push_back(std::move(m));
    }
    StatePtr next = algorithm.transition(*states[actor], delivered, std::nullopt);
    std::optional<Value> now = algorithm.decision(*next);
    states[actor] = std::move(next);
    StepRecord rec;
    rec.time = time;
    rec.actor = actor;
    rec.delivered = std::move(delivered);
    rec.sent = std::move(sent);
    rec.decided = now;
    out.steps.push_back(std::move(rec));
  }
  out.status = TraceStatus::Complete;
  return out;
}

}  // namespace kset
