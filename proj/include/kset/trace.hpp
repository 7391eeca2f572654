#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kset/types.hpp"

namespace kset {

/// One scheduled step: the actor receives `delivered` (possibly empty), may
/// read a failure-detector value, transitions, and emits `sent`. `decided`
/// reflects the actor's decision status after the step and is write-once per
/// process across a trace.
struct StepRecord {
  int time = 0;  // 1-based global step index; consecutive within a trace
  ProcessId actor = 0;
  std::vector<Message> delivered;  // in delivery order (ascending message id)
  std::optional<FdValue> fd_output;
  std::vector<Message> sent;  // in the algorithm's emission order
  std::optional<Value> decided;
};

enum class TraceStatus { Complete, Truncated };

/// A finite run. Complete means every correct process decided and every
/// message addressed to a correct process was delivered (the quiescent
/// extension); Truncated means the step budget ran out first.
struct Trace {
  SystemParams params;
  std::vector<ProcessId> universe;  // participating processes, sorted; defaults to 1..n
  std::map<ProcessId, Value> inputs;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  TraceStatus status = TraceStatus::Complete;
  // First time from which each explicitly crashed process is crashed
  // (initially dead processes map to 1). Needed because a truncated trace
  // cannot distinguish "slow" from "crashed" by inspection.
  std::map<ProcessId, int> declared_crashes;

  bool complete() const { return status == TraceStatus::Complete; }
};

/// Crash pattern: for each faulty process, the earliest time t with the
/// process crashed at t (it takes no step at any time >= t). crashed_at(t)
/// grows monotonically in t.
class FailurePattern {
 public:
  FailurePattern() = default;
  explicit FailurePattern(std::map<ProcessId, int> crashed_from)
      : crashed_from_(std::move(crashed_from)) {}

  void mark_crashed(ProcessId p, int from_time) {
    auto it = crashed_from_.find(p);
    if (it == crashed_from_.end() || from_time < it->second) crashed_from_[p] = from_time;
  }

  bool is_crashed(ProcessId p, int t) const {
    auto it = crashed_from_.find(p);
    return it != crashed_from_.end() && t >= it->second;
  }

  std::set<ProcessId> crashed_at(int t) const {
    std::set<ProcessId> out;
    for (const auto& [p, from] : crashed_from_)
      if (t >= from) out.insert(p);
    return out;
  }

  std::set<ProcessId> faulty() const {
    std::set<ProcessId> out;
    for (const auto& [p, from] : crashed_from_) out.insert(p);
    return out;
  }

  const std::map<ProcessId, int>& crashed_from() const { return crashed_from_; }

  bool admissible(const SystemParams& params) const {
    return crashed_from_.size() <= static_cast<std::size_t>(params.f);
  }

 private:
  std::map<ProcessId, int> crashed_from_;
};

/// Derives the crash pattern of a trace. A process with no step at all is
/// initially dead. Beyond that, only explicitly declared crashes count:
/// a complete trace stands for its quiescent extension in which every other
/// process keeps stepping forever, and in a truncated trace a silent process
/// may merely be unscheduled.
inline FailurePattern derive_failure_pattern(const Trace& trace) {
  std::map<ProcessId, int> last_step;
  for (const auto& step : trace.steps) {
    auto [it, fresh] = last_step.emplace(step.actor, step.time);
    if (!fresh) it->second = std::max(it->second, step.time);
  }
  FailurePattern out;
  for (ProcessId p : trace.universe)
    if (!last_step.count(p)) out.mark_crashed(p, 1);
  for (const auto& [p, declared_from] : trace.declared_crashes) {
    auto it = last_step.find(p);
    out.mark_crashed(p, it == last_step.end() ? 1 : std::max(declared_from, it->second + 1));
  }
  return out;
}

// --- text serialization ----------------------------------------------------
//
// One header line followed by one line per step. Only message ids are
// written; contents are recoverable by replaying the algorithm, which is also
// what keeps the format honest (a tampered file no longer replays).
//
//   trace v1 n=3 f=1 k=1 seed=42 universe=1,2,3 inputs=1:10,... status=complete
//   step t=1 actor=1 delivered=- fd=- sent=1,2 decided=-

/// Step line with message ids only, as parsed back from a trace file.
struct SkeletonStep {
  int time = 0;
  ProcessId actor = 0;
  std::vector<MsgId> delivered_ids;
  std::optional<FdValue> fd_output;
  std::vector<MsgId> sent_ids;
  std::optional<Value> decided;
};

struct TraceSkeleton {
  SystemParams params;
  std::vector<ProcessId> universe;
  std::map<ProcessId, Value> inputs;
  std::uint64_t seed = 0;
  TraceStatus status = TraceStatus::Complete;
  std::map<ProcessId, int> declared_crashes;
  std::vector<SkeletonStep> steps;
};

inline TraceSkeleton skeleton_of(const Trace& trace) {
  TraceSkeleton sk;
  sk.params = trace.params;
  sk.universe = trace.universe;
  sk.inputs = trace.inputs;
  sk.seed = trace.seed;
  sk.status = trace.status;
  sk.declared_crashes = trace.declared_crashes;
  sk.steps.reserve(trace.steps.size());
  for (const auto& step : trace.steps) {
    SkeletonStep s;
    s.time = step.time;
    s.actor = step.actor;
    for (const auto& m : step.delivered) s.delivered_ids.push_back(m.id);
    s.fd_output = step.fd_output;
    for (const auto& m : step.sent) s.sent_ids.push_back(m.id);
    s.decided = step.decided;
    sk.steps.push_back(std::move(s));
  }
  return sk;
}

namespace detail {

inline std::string join_msg_ids(const std::vector<MsgId>& ids) {
  if (ids.empty()) return "-";
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ',';
    out << ids[i];
  }
  return out.str();
}

inline std::string format_inputs(const std::map<ProcessId, Value>& inputs) {
  if (inputs.empty()) return "-";
  std::ostringstream out;
  bool first = true;
  for (const auto& [p, v] : inputs) {
    if (!first) out << ',';
    first = false;
    out << p << ':' << v;
  }
  return out.str();
}

inline std::string format_crashes(const std::map<ProcessId, int>& crashes) {
  if (crashes.empty()) return "-";
  std::ostringstream out;
  bool first = true;
  for (const auto& [p, t] : crashes) {
    if (!first) out << ',';
    first = false;
    out << p << '@' << t;
  }
  return out.str();
}

class FieldScanner {
 public:
  FieldScanner(const std::string& line, int lineno) : lineno_(lineno), in_(line) {}

  std::string expect(const std::string& key) {
    std::string tok;
    if (!(in_ >> tok)) fail("missing field '" + key + "'");
    auto eq = tok.find('=');
    if (eq == std::string::npos || tok.substr(0, eq) != key)
      fail("expected field '" + key + "', got '" + tok + "'");
    return tok.substr(eq + 1);
  }

  std::string expect_word(const std::string& word) {
    std::string tok;
    if (!(in_ >> tok) || tok != word) fail("expected '" + word + "'");
    return tok;
  }

  bool at_end() {
    std::string tok;
    return !(in_ >> tok);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("trace line " + std::to_string(lineno_) + ": " + msg);
  }

  int lineno() const { return lineno_; }

 private:
  int lineno_;
  std::istringstream in_;
};

inline long long parse_int(const std::string& s, const FieldScanner& sc, const char* what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    sc.fail(std::string("bad ") + what + " '" + s + "'");
  }
}

inline std::vector<long long> parse_int_list(const std::string& s, const FieldScanner& sc,
                                             const char* what) {
  std::vector<long long> out;
  if (s == "-") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(parse_int(part, sc, what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline std::string write_trace(const Trace& trace) {
  std::ostringstream out;
  out << "trace v1 n=" << trace.params.n << " f=" << trace.params.f << " k=" << trace.params.k
      << " seed=" << trace.seed << " universe=" << detail::join_ids(trace.universe)
      << " inputs=" << detail::format_inputs(trace.inputs)
      << " crashes=" << detail::format_crashes(trace.declared_crashes)
      << " status=" << (trace.complete() ? "complete" : "truncated") << '\n';
  auto skel = skeleton_of(trace);
  for (const auto& s : skel.steps) {
    out << "step t=" << s.time << " actor=" << s.actor
        << " delivered=" << detail::join_msg_ids(s.delivered_ids)
        << " fd=" << (s.fd_output ? detail::join_ids(*s.fd_output) : "-")
        << " sent=" << detail::join_msg_ids(s.sent_ids)
        << " decided=" << (s.decided ? std::to_string(*s.decided) : "-") << '\n';
  }
  return out.str();
}

inline TraceSkeleton parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  TraceSkeleton sk;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    detail::FieldScanner sc(line, lineno);
    if (!saw_header) {
      sc.expect_word("trace");
      sc.expect_word("v1");
      int n = static_cast<int>(detail::parse_int(sc.expect("n"), sc, "n"));
      int f = static_cast<int>(detail::parse_int(sc.expect("f"), sc, "f"));
      int k = static_cast<int>(detail::parse_int(sc.expect("k"), sc, "k"));
      try {
        sk.params = SystemParams(n, f, k);
      } catch (const std::invalid_argument& e) {
        sc.fail(e.what());
      }
      sk.seed = static_cast<std::uint64_t>(detail::parse_int(sc.expect("seed"), sc, "seed"));
      for (long long v : detail::parse_int_list(sc.expect("universe"), sc, "universe id"))
        sk.universe.push_back(static_cast<ProcessId>(v));
      std::string inputs = sc.expect("inputs");
      if (inputs != "-") {
        std::size_t start = 0;
        while (start <= inputs.size()) {
          auto comma = inputs.find(',', start);
          auto part = inputs.substr(
              start, comma == std::string::npos ? std::string::npos : comma - start);
          auto colon = part.find(':');
          if (colon == std::string::npos) sc.fail("bad input assignment '" + part + "'");
          sk.inputs[static_cast<ProcessId>(
              detail::parse_int(part.substr(0, colon), sc, "input pid"))] =
              detail::parse_int(part.substr(colon + 1), sc, "input value");
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      std::string crashes = sc.expect("crashes");
      if (crashes != "-") {
        std::size_t start = 0;
        while (start <= crashes.size()) {
          auto comma = crashes.find(',', start);
          auto part = crashes.substr(
              start, comma == std::string::npos ? std::string::npos : comma - start);
          auto at = part.find('@');
          if (at == std::string::npos) sc.fail("bad crash entry '" + part + "'");
          sk.declared_crashes[static_cast<ProcessId>(
              detail::parse_int(part.substr(0, at), sc, "crash pid"))] =
              static_cast<int>(detail::parse_int(part.substr(at + 1), sc, "crash time"));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      std::string status = sc.expect("status");
      if (status == "complete")
        sk.status = TraceStatus::Complete;
      else if (status == "truncated")
        sk.status = TraceStatus::Truncated;
      else
        sc.fail("bad status '" + status + "'");
      if (!sc.at_end()) sc.fail("trailing tokens after header");
      saw_header = true;
      continue;
    }
    sc.expect_word("step");
    SkeletonStep s;
    s.time = static_cast<int>(detail::parse_int(sc.expect("t"), sc, "time"));
    s.actor = static_cast<ProcessId>(detail::parse_int(sc.expect("actor"), sc, "actor"));
    for (long long v : detail::parse_int_list(sc.expect("delivered"), sc, "message id"))
      s.delivered_ids.push_back(static_cast<MsgId>(v));
    std::string fd = sc.expect("fd");
    if (fd != "-") {
      FdValue ids;
      detail::FieldScanner dummy(fd, lineno);
      for (long long v : detail::parse_int_list(fd, sc, "fd id"))
        ids.push_back(static_cast<ProcessId>(v));
      s.fd_output = std::move(ids);
    }
    for (long long v : detail::parse_int_list(sc.expect("sent"), sc, "message id"))
      s.sent_ids.push_back(static_cast<MsgId>(v));
    std::string decided = sc.expect("decided");
    if (decided != "-") s.decided = detail::parse_int(decided, sc, "decision");
    if (!sc.at_end()) sc.fail("trailing tokens after step");
    sk.steps.push_back(std::move(s));
  }
  if (!saw_header) throw std::invalid_argument("trace line 1: missing header");
  if (sk.universe.empty()) sk.universe = all_processes(sk.params);
  return sk;
}

}  // namespace kset
