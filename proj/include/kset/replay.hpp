#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kset/algorithm.hpp"
#include "kset/trace.hpp"
#include "kset/types.hpp"
#include "kset/verdict.hpp"

namespace kset {

/// Reconstructed per-process state history: states[0] is the initial state,
/// states[j] the state after the process's j-th own step. decided_at is the
/// index of the first state carrying a decision.
struct StateTrack {
  std::vector<std::string> states;
  std::optional<std::size_t> decided_at;
};

struct ReplayResult {
  Verdict verdict;
  Trace trace;  // fully reconstructed run (meaningful when verdict passes)
  std::map<ProcessId, StateTrack> tracks;

  bool pass() const { return verdict.pass(); }
};

namespace detail {

struct SentCandidate {
  Message msg;
  bool kept = false;  // actually sent (not omitted by a crashing final step)
};

inline Verdict::Witness step_witness(int time, ProcessId actor, std::string note) {
  Verdict::Witness w;
  w.processes = {actor};
  w.times = {time};
  w.note = std::move(note);
  return w;
}

}  // namespace detail

/// Replays a step skeleton against an algorithm: reconstructs every state and
/// message, checking that each recorded step is exactly what the algorithm
/// produces from the reconstructed state and the recorded deliveries. The one
/// allowance is a process's final recorded step, whose sent set may be any
/// subset of the recomputation — that is the crash model's send omission.
/// Message ids are consumed for the full recomputed emission either way,
/// which keeps id assignment deterministic and omissions identifiable.
inline ReplayResult replay_skeleton(const TraceSkeleton& sk, const Algorithm& algorithm) {
  ReplayResult res;
  res.trace.params = sk.params;
  res.trace.universe = sk.universe;
  res.trace.inputs = sk.inputs;
  res.trace.seed = sk.seed;
  res.trace.status = sk.status;
  res.trace.declared_crashes = sk.declared_crashes;

  auto fail = [&](int time, ProcessId actor, const std::string& note) {
    res.verdict = Verdict::failed(detail::step_witness(time, actor, note));
    return res;
  };

  sk.params.validate();
  if (sk.universe.empty()) throw std::invalid_argument("replay: empty universe");
  std::map<ProcessId, StatePtr> states;
  for (ProcessId p : sk.universe) {
    if (p < 1 || p > sk.params.n)
      throw std::invalid_argument("replay: universe id out of range");
    auto it = sk.inputs.find(p);
    if (it == sk.inputs.end())
      throw std::invalid_argument("replay: no input for process " + std::to_string(p));
    states[p] = algorithm.initial_state(p, sk.params, it->second);
    res.tracks[p].states.push_back(states[p]->describe());
  }

  std::map<ProcessId, std::size_t> last_step_of;  // actor -> last index in sk.steps
  for (std::size_t i = 0; i < sk.steps.size(); ++i) last_step_of[sk.steps[i].actor] = i;

  std::map<MsgId, detail::SentCandidate> registry;
  std::set<MsgId> delivered_already;
  std::map<ProcessId, std::optional<Value>> decided;
  MsgId next_id = 1;

  for (std::size_t i = 0; i < sk.steps.size(); ++i) {
    const auto& s = sk.steps[i];
    int expected_time = static_cast<int>(i) + 1;
    if (s.time != expected_time)
      return fail(s.time, s.actor,
                  "step times must be consecutive from 1 (expected " +
                      std::to_string(expected_time) + ")");
    if (!states.count(s.actor))
      return fail(s.time, s.actor, "actor is not a universe member");
    {
      auto it = sk.declared_crashes.find(s.actor);
      if (it != sk.declared_crashes.end() && s.time >= it->second)
        return fail(s.time, s.actor, "crashed process takes a step");
    }

    std::vector<Message> delivered;
    for (MsgId id : s.delivered_ids) {
      auto it = registry.find(id);
      if (it == registry.end())
        return fail(s.time, s.actor, "delivery of unknown message " + std::to_string(id));
      if (!it->second.kept)
        return fail(s.time, s.actor, "delivery of omitted message " + std::to_string(id));
      if (it->second.msg.receiver != s.actor)
        return fail(s.time, s.actor,
                    "message " + std::to_string(id) + " is addressed to process " +
                        std::to_string(it->second.msg.receiver));
      if (!delivered_already.insert(id).second)
        return fail(s.time, s.actor, "message " + std::to_string(id) + " delivered twice");
      delivered.push_back(it->second.msg);
    }

    const AlgorithmState& cur = *states[s.actor];
    std::vector<Outgoing> outgoing = algorithm.sending(cur, delivered);
    MsgId base = next_id;
    next_id += outgoing.size();
    bool final_step = last_step_of[s.actor] == i;
    if (!final_step && s.sent_ids.size() != outgoing.size())
      return fail(s.time, s.actor,
                  "sent " + std::to_string(s.sent_ids.size()) + " messages, algorithm sends " +
                      std::to_string(outgoing.size()));
    if (s.sent_ids.size() > outgoing.size())
      return fail(s.time, s.actor, "more sent messages than the algorithm produces");
    std::vector<Message> sent;
    std::size_t at = 0;
    for (std::size_t j = 0; j < outgoing.size(); ++j) {
      Message m{base + j, s.actor, outgoing[j].receiver, s.time, std::move(outgoing[j].payload)};
      bool kept = at < s.sent_ids.size() && s.sent_ids[at] == base + j;
      if (at < s.sent_ids.size() && s.sent_ids[at] < base + j)
        return fail(s.time, s.actor,
                    "sent id " + std::to_string(s.sent_ids[at]) + " does not match emission");
      if (kept) {
        sent.push_back(m);
        ++at;
      }
      registry.emplace(m.id, detail::SentCandidate{std::move(m), kept});
    }
    if (at != s.sent_ids.size())
      return fail(s.time, s.actor,
                  "sent id " + std::to_string(s.sent_ids[at]) + " does not match emission");

    StatePtr next = algorithm.transition(cur, delivered, s.fd_output);
    std::optional<Value> now = algorithm.decision(*next);
    if (now != s.decided)
      return fail(s.time, s.actor,
                  "decision divergence (recomputed " +
                      (now ? std::to_string(*now) : std::string("-")) + ", recorded " +
                      (s.decided ? std::to_string(*s.decided) : std::string("-")) + ")");
    auto& prev = decided[s.actor];
    if (prev && (!now || *now != *prev))
      return fail(s.time, s.actor, "decision is write-once but changed");
    bool newly = !prev && now.has_value();
    prev = now;

    auto& track = res.tracks[s.actor];
    track.states.push_back(next->describe());
    if (newly) track.decided_at = track.states.size() - 1;
    states[s.actor] = std::move(next);

    StepRecord rec;
    rec.time = s.time;
    rec.actor = s.actor;
    rec.delivered = std::move(delivered);
    rec.fd_output = s.fd_output;
    rec.sent = std::move(sent);
    rec.decided = s.decided;
    res.trace.steps.push_back(std::move(rec));
  }
  return res;
}

/// Full replay of an in-memory trace: skeleton replay plus content equality
/// of every recorded message against the recomputation.
inline ReplayResult replay(const Trace& trace, const Algorithm& algorithm) {
  ReplayResult res = replay_skeleton(skeleton_of(trace), algorithm);
  if (!res.pass()) return res;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& orig = trace.steps[i];
    const auto& rec = res.trace.steps[i];
    auto mismatch = [&](const std::string& what) {
      res.verdict =
          Verdict::failed(detail::step_witness(orig.time, orig.actor, what + " content differs"));
      return res;
    };
    if (orig.sent.size() != rec.sent.size()) return mismatch("sent");
    for (std::size_t j = 0; j < orig.sent.size(); ++j)
      if (!(orig.sent[j].same_content(rec.sent[j]) && orig.sent[j].id == rec.sent[j].id))
        return mismatch("sent");
    if (orig.delivered.size() != rec.delivered.size()) return mismatch("delivered");
    for (std::size_t j = 0; j < orig.delivered.size(); ++j)
      if (!(orig.delivered[j].same_content(rec.delivered[j]) &&
            orig.delivered[j].id == rec.delivered[j].id))
        return mismatch("delivered");
  }
  return res;
}

}  // namespace kset
