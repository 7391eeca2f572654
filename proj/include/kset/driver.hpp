#pragma once

#include <optional>
#include <sstream>
#include <string>

#include "kset/analysis.hpp"
#include "kset/protocol.hpp"
#include "kset/replay.hpp"
#include "kset/scenario.hpp"
#include "kset/sim.hpp"
#include "kset/sweep.hpp"
#include "kset/trace.hpp"

namespace kset {

// Exit-code contract shared by every subcommand: 0 all checks pass,
// 1 a property was violated (or a trace failed replay), 2 bad input.
enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitUsage = 2 };

struct CommandResult {
  int exit_code = kExitOk;
  std::string output;               // human-readable report for stdout
  std::optional<std::string> file;  // trace / report text when one was produced
};

namespace detail {

inline void report_verdict(std::ostringstream& out, const std::string& label, const Verdict& v,
                           bool& violated) {
  out << label << ": " << to_string(v) << '\n';
  if (v.fail()) violated = true;
}

}  // namespace detail

/// Runs a scenario, reports the agreement/validity/termination verdicts, and
/// (when requested by the caller) hands back the serialized trace.
inline CommandResult cmd_run(const Scenario& scenario, const Algorithm& algorithm) {
  CommandResult result;
  Scenario normalized = normalize_scenario(scenario);
  Trace trace = run_simulation(algorithm, normalized);
  std::ostringstream out;
  out << "algorithm: " << algorithm.name() << '\n';
  out << "status: " << (trace.complete() ? "complete" : "truncated") << " steps=" << trace.steps.size()
      << '\n';
  auto decisions = decisions_of(trace);
  out << "decisions:";
  if (decisions.empty()) out << " -";
  for (const auto& [p, v] : decisions) out << ' ' << p << "->" << v;
  out << '\n';
  bool violated = false;
  detail::report_verdict(out, "agreement", check_agreement(trace, normalized.params.k), violated);
  detail::report_verdict(out, "validity", check_validity(trace), violated);
  detail::report_verdict(out, "termination", check_termination(trace), violated);
  result.exit_code = violated ? kExitViolation : kExitOk;
  result.output = out.str();
  result.file = write_trace(trace);
  return result;
}

/// Parses a serialized trace, replays it against the named algorithm, and
/// re-checks the three correctness properties. A replay mismatch counts as a
/// violation; malformed input is a usage error.
inline CommandResult cmd_check(const std::string& trace_text, const Algorithm& algorithm,
                               std::optional<int> k_override = std::nullopt) {
  CommandResult result;
  TraceSkeleton sk;
  try {
    sk = parse_trace(trace_text);
  } catch (const std::exception& e) {
    result.exit_code = kExitUsage;
    result.output = std::string("trace parse error: ") + e.what() + '\n';
    return result;
  }
  std::ostringstream out;
  out << "algorithm: " << algorithm.name() << '\n';
  ReplayResult replayed = replay_skeleton(sk, algorithm);
  bool violated = false;
  detail::report_verdict(out, "replay", replayed.verdict, violated);
  if (replayed.pass()) {
    int k = k_override.value_or(sk.params.k);
    detail::report_verdict(out, "agreement", check_agreement(replayed.trace, k), violated);
    detail::report_verdict(out, "validity", check_validity(replayed.trace), violated);
    detail::report_verdict(out, "termination", check_termination(replayed.trace), violated);
  }
  result.exit_code = violated ? kExitViolation : kExitOk;
  result.output = out.str();
  return result;
}

/// Sweeps the parameter grid and renders both the human table and the
/// machine-readable report.
inline CommandResult cmd_sweep(int n_max, int seeds) {
  CommandResult result;
  SweepReport report = run_sweep(n_max, seeds);
  bool surprise = false;
  for (const auto& row : report.rows)
    if (row.predicted_solvable && row.agreement_violations > 0) surprise = true;
  result.exit_code = surprise ? kExitViolation : kExitOk;
  result.output = format_sweep_table(report);
  result.file = write_sweep_report(report);
  return result;
}

}  // namespace kset
