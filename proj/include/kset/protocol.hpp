#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kset/algorithm.hpp"
#include "kset/graph.hpp"
#include "kset/types.hpp"

namespace kset {

/// Raised when a delivered batch is impossible under an honest run of the
/// two-stage protocol (conflicting duplicate announcements, self-messages,
/// foreign payload kinds). Guards replay checking of edited traces.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Phase { Stage1, Stage2, Decided };

/// State of the two-stage agreement protocol.
///
/// Stage 1 broadcasts the process id and collects the first L - 1 = n - f - 1
/// distinct announcements; those senders form this process's in-neighborhood
/// in the reception graph. Stage 2 broadcasts (input, heard-list) and waits
/// until a stage-2 payload is held for everything in `want`: the stage-1
/// senders plus every id mentioned in a held list (transitively), so the
/// process ends up with complete knowledge of an in-closed subgraph around
/// itself and every participant computes identical edges for it.
struct ProtocolState final : AlgorithmState {
  ProcessId pid = 0;
  SystemParams params;
  Value input = 0;
  Phase phase = Phase::Stage1;
  bool stage1_sent = false;
  bool stage2_sent = false;
  std::set<ProcessId> stage1_heard;          // capped at L - 1 senders, in delivery order
  std::map<ProcessId, Stage2> stage2_info;   // sender -> held payload
  std::set<ProcessId> want;                  // ids whose stage-2 payload is awaited
  std::optional<Value> decision;
  bool strict_wait = false;  // narrow reading: only stage-1 senders' lists extend want

  std::string describe() const override {
    std::ostringstream out;
    out << "pid=" << pid << " phase="
        << (phase == Phase::Stage1 ? "s1" : phase == Phase::Stage2 ? "s2" : "done")
        << " x=" << input << " sent=" << stage1_sent << stage2_sent << " heard={"
        << detail::join_ids(stage1_heard) << "} info={";
    bool first = true;
    for (const auto& [q, s] : stage2_info) {
      if (!first) out << ';';
      first = false;
      out << q << ":(" << s.proposal << ",[" << detail::join_ids(s.heard) << "])";
    }
    out << "} want={" << detail::join_ids(want) << "} y="
        << (decision ? std::to_string(*decision) : "-");
    return out.str();
  }

  int quota() const { return params.quorum() - 1; }  // L - 1
};

namespace detail {

inline void absorb_stage2(ProtocolState& st, ProcessId sender, const Stage2& payload) {
  auto it = st.stage2_info.find(sender);
  if (it != st.stage2_info.end()) {
    if (!(it->second == payload))
      throw ProtocolViolation("conflicting stage-2 payloads from process " +
                              std::to_string(sender));
    return;
  }
  st.stage2_info.emplace(sender, payload);
}

// Applies one delivered batch to a copy of the state: stage-1 senders
// accumulate (in delivery order) until the quota L - 1 is reached, stage-2
// payloads are recorded in any phase.
inline ProtocolState absorb(const ProtocolState& state, const std::vector<Message>& delivered) {
  ProtocolState st = state;
  for (const auto& m : delivered) {
    if (m.sender == st.pid) throw ProtocolViolation("self-addressed message delivered");
    if (std::holds_alternative<Stage1>(m.payload)) {
      if (st.phase == Phase::Stage1 &&
          static_cast<int>(st.stage1_heard.size()) < st.quota())
        st.stage1_heard.insert(m.sender);
    } else if (const auto* s2 = std::get_if<Stage2>(&m.payload)) {
      absorb_stage2(st, m.sender, *s2);
    } else {
      throw ProtocolViolation("foreign payload kind delivered to protocol process");
    }
    if (st.phase == Phase::Stage1 && static_cast<int>(st.stage1_heard.size()) >= st.quota())
      st.phase = Phase::Stage2;
  }
  if (st.phase == Phase::Stage1 && static_cast<int>(st.stage1_heard.size()) >= st.quota())
    st.phase = Phase::Stage2;
  return st;
}

inline std::set<ProcessId> recompute_want(const ProtocolState& st) {
  std::set<ProcessId> want = st.stage1_heard;
  for (const auto& [q, s] : st.stage2_info) {
    if (st.strict_wait && !st.stage1_heard.count(q)) continue;
    for (ProcessId m : s.heard)
      if (m != st.pid) want.insert(m);
  }
  return want;
}

}  // namespace detail

/// Decision rule: on the held subgraph spanning want + self (edges point from
/// a heard process to the hearer), take the source components from which this
/// process is reachable, pick the one holding the smallest id anywhere in
/// them, and adopt the input of its smallest member.
inline Value decide_value(const ProtocolState& state) {
  std::set<ProcessId> verts = state.want;
  verts.insert(state.pid);
  Digraph g(verts);
  for (const auto& [w, s] : state.stage2_info) {
    if (!verts.count(w)) continue;
    for (ProcessId u : s.heard)
      if (u != w && verts.count(u)) g.add_edge(u, w);
  }
  for (ProcessId u : state.stage1_heard)
    if (verts.count(u)) g.add_edge(u, state.pid);

  auto sources = reachable_sources(g, state.pid);
  if (sources.empty())
    throw std::logic_error("decide_value: no source component reaches the decider");
  const std::set<ProcessId>* best = &sources.front();
  for (const auto& comp : sources)
    if (*comp.begin() < *best->begin()) best = &comp;
  ProcessId m = *best->begin();
  if (m == state.pid) return state.input;
  auto it = state.stage2_info.find(m);
  if (it == state.stage2_info.end())
    throw std::logic_error("decide_value: no held proposal for elected process " +
                           std::to_string(m));
  return it->second.proposal;
}

/// The two-stage k-set agreement protocol (k never appears in the code paths:
/// the achievable bound is a consequence of the quota, not a parameter).
class TwoStageProtocol final : public Algorithm {
 public:
  explicit TwoStageProtocol(bool strict_wait = false) : strict_wait_(strict_wait) {}

  std::string name() const override { return strict_wait_ ? "kset-strict" : "kset"; }

  StatePtr initial_state(ProcessId pid, const SystemParams& params, Value input) const override {
    if (pid < 1 || pid > params.n)
      throw std::invalid_argument("TwoStageProtocol: pid out of range");
    auto st = std::make_unique<ProtocolState>();
    st->pid = pid;
    st->params = params;
    st->input = input;
    st->strict_wait = strict_wait_;
    return st;
  }

  StatePtr transition(const AlgorithmState& state, const std::vector<Message>& delivered,
                      const std::optional<FdValue>&) const override {
    const auto& cur = cast(state);
    bool could_decide = cur.phase == Phase::Stage2;
    auto st = std::make_unique<ProtocolState>(detail::absorb(cur, delivered));
    if (!st->stage1_sent) st->stage1_sent = true;
    if (st->phase != Phase::Stage1) {
      st->stage2_sent = true;
      st->want = detail::recompute_want(*st);
    }
    // A decision needs a full step in stage 2: the step that completes the
    // quota only switches stages, so the wait set is never judged in the same
    // breath it was first formed.
    if (could_decide && st->phase == Phase::Stage2) {
      bool held = true;
      for (ProcessId q : st->want)
        if (!st->stage2_info.count(q)) {
          held = false;
          break;
        }
      if (held) {
        st->decision = decide_value(*st);
        st->phase = Phase::Decided;
      }
    }
    return st;
  }

  std::vector<Outgoing> sending(const AlgorithmState& state,
                                const std::vector<Message>& delivered) const override {
    const auto& cur = cast(state);
    std::vector<Outgoing> out;
    if (!cur.stage1_sent)
      for (ProcessId q = 1; q <= cur.params.n; ++q)
        if (q != cur.pid) out.push_back({q, Stage1{}});
    if (!cur.stage2_sent) {
      ProtocolState after = detail::absorb(cur, delivered);
      if (after.phase != Phase::Stage1) {
        Stage2 payload{cur.input,
                       {after.stage1_heard.begin(), after.stage1_heard.end()}};
        for (ProcessId q = 1; q <= cur.params.n; ++q)
          if (q != cur.pid) out.push_back({q, payload});
      }
    }
    return out;
  }

  std::optional<Value> decision(const AlgorithmState& state) const override {
    return cast(state).decision;
  }

 private:
  static const ProtocolState& cast(const AlgorithmState& state) {
    const auto* st = dynamic_cast<const ProtocolState*>(&state);
    if (!st) throw std::invalid_argument("TwoStageProtocol: foreign state object");
    return *st;
  }

  bool strict_wait_;
};

/// Name-keyed factory used by the CLI and trace checking.
inline AlgorithmPtr make_algorithm(const std::string& name) {
  if (name == "kset") return std::make_shared<TwoStageProtocol>(false);
  if (name == "kset-strict") return std::make_shared<TwoStageProtocol>(true);
  throw std::invalid_argument("unknown algorithm '" + name + "' (known: kset, kset-strict)");
}

inline std::vector<std::string> algorithm_names() { return {"kset", "kset-strict"}; }

}  // namespace kset
