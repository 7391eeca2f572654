#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kset/types.hpp"

namespace kset {

/// Outcome of a property check. Fail verdicts carry a machine-readable
/// witness; Indeterminate is reserved for properties that cannot be judged on
/// the given evidence (e.g. liveness on a truncated trace).
struct Verdict {
  enum class Outcome { Pass, Fail, Indeterminate };

  struct Witness {
    std::vector<ProcessId> processes;
    std::vector<int> times;
    std::vector<Value> values;
    std::string note;
  };

  Outcome outcome = Outcome::Pass;
  std::optional<Witness> witness;

  bool pass() const { return outcome == Outcome::Pass; }
  bool fail() const { return outcome == Outcome::Fail; }
  bool indeterminate() const { return outcome == Outcome::Indeterminate; }

  static Verdict ok() { return Verdict{}; }
  static Verdict failed(Witness w) { return Verdict{Outcome::Fail, std::move(w)}; }
  static Verdict undecidable(std::string note) {
    return Verdict{Outcome::Indeterminate, Witness{{}, {}, {}, std::move(note)}};
  }
};

inline std::string to_string(const Verdict& v) {
  std::ostringstream out;
  switch (v.outcome) {
    case Verdict::Outcome::Pass: out << "pass"; break;
    case Verdict::Outcome::Fail: out << "fail"; break;
    case Verdict::Outcome::Indeterminate: out << "indeterminate"; break;
  }
  if (v.witness) {
    const auto& w = *v.witness;
    if (!w.processes.empty()) out << " processes=" << detail::join_ids(w.processes);
    if (!w.times.empty()) {
      out << " times=";
      for (std::size_t i = 0; i < w.times.size(); ++i) out << (i ? "," : "") << w.times[i];
    }
    if (!w.values.empty()) {
      out << " values=";
      for (std::size_t i = 0; i < w.values.size(); ++i) out << (i ? "," : "") << w.values[i];
    }
    if (!w.note.empty()) out << " note=" << w.note;
  }
  return out.str();
}

}  // namespace kset
