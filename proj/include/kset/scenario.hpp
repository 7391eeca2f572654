#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kset/types.hpp"

namespace kset {

/// When a partition-delay adversary hands the withheld messages over to
/// normal delivery. AfterDecided waits until every listed process has decided
/// or crashed; the empty set stands for "all correct processes".
struct ReleaseRule {
  enum class Kind { AfterAllDecided, AtStep, AfterDecided };
  Kind kind = Kind::AfterAllDecided;
  int step = 0;                // AtStep
  std::set<ProcessId> who;     // AfterDecided
};

enum class AdversaryKind { Fair, InitialCrash, PartitionDelay };

/// Delivery policy. Fair releases every message immediately. InitialCrash is
/// fair delivery that additionally insists the crash plan contains initial
/// crashes only. PartitionDelay withholds messages between distinct blocks
/// until the release rule fires; processes outside every block communicate
/// freely.
struct Adversary {
  AdversaryKind kind = AdversaryKind::Fair;
  std::vector<std::set<ProcessId>> blocks;
  ReleaseRule release;

  static Adversary fair() { return {}; }
  static Adversary initial_crash() { return {AdversaryKind::InitialCrash, {}, {}}; }
  static Adversary partition_delay(std::vector<std::set<ProcessId>> blocks, ReleaseRule rule) {
    return {AdversaryKind::PartitionDelay, std::move(blocks), std::move(rule)};
  }
};

/// A crash scheduled after the victim's n-th own step; that final step omits
/// sends to `omit` and the process never runs again.
struct MidRunCrash {
  ProcessId pid = 0;
  int after_local_steps = 1;
  std::set<ProcessId> omit;
};

struct Scenario {
  SystemParams params;
  std::vector<ProcessId> universe;  // defaults to 1..n when empty
  std::map<ProcessId, Value> inputs;
  Adversary adversary;
  std::set<ProcessId> initial_dead;
  std::optional<MidRunCrash> mid_run_crash;
  std::uint64_t seed = 1;
  int fairness_bound = 64;
  int step_budget = 100000;
};

/// Fills defaults and rejects structurally invalid scenarios (crash budget
/// above f, overlapping blocks, inputs missing, nobody left alive, ...).
inline Scenario normalize_scenario(Scenario sc) {
  sc.params.validate();
  if (sc.universe.empty()) sc.universe = all_processes(sc.params);
  std::sort(sc.universe.begin(), sc.universe.end());
  sc.universe.erase(std::unique(sc.universe.begin(), sc.universe.end()), sc.universe.end());
  std::set<ProcessId> uni(sc.universe.begin(), sc.universe.end());
  for (ProcessId p : sc.universe) {
    if (p < 1 || p > sc.params.n)
      throw std::invalid_argument("scenario: universe id " + std::to_string(p) +
                                  " out of range");
    if (!sc.inputs.count(p)) sc.inputs[p] = p;  // identity default
  }
  for (const auto& [p, v] : sc.inputs)
    if (!uni.count(p))
      throw std::invalid_argument("scenario: input for non-member process " + std::to_string(p));
  std::size_t crash_count = sc.initial_dead.size() + (sc.mid_run_crash ? 1 : 0);
  if (crash_count > static_cast<std::size_t>(sc.params.f))
    throw std::invalid_argument("scenario: crash plan exceeds f = " +
                                std::to_string(sc.params.f));
  for (ProcessId p : sc.initial_dead)
    if (!uni.count(p))
      throw std::invalid_argument("scenario: initially dead process not in universe");
  if (sc.mid_run_crash) {
    const auto& mc = *sc.mid_run_crash;
    if (!uni.count(mc.pid))
      throw std::invalid_argument("scenario: mid-run crash victim not in universe");
    if (sc.initial_dead.count(mc.pid))
      throw std::invalid_argument("scenario: mid-run crash victim already initially dead");
    if (mc.after_local_steps < 1)
      throw std::invalid_argument("scenario: mid-run crash needs at least one local step");
  }
  std::size_t alive = 0;
  for (ProcessId p : sc.universe)
    if (!sc.initial_dead.count(p)) ++alive;
  if (alive == 0) throw std::invalid_argument("scenario: no process left alive");
  if (sc.adversary.kind == AdversaryKind::InitialCrash && sc.mid_run_crash)
    throw std::invalid_argument("scenario: initial-crash adversary forbids mid-run crashes");
  if (sc.adversary.kind == AdversaryKind::PartitionDelay) {
    if (sc.adversary.blocks.empty())
      throw std::invalid_argument("scenario: partition-delay needs at least one block");
    std::set<ProcessId> seen;
    for (const auto& block : sc.adversary.blocks) {
      if (block.empty()) throw std::invalid_argument("scenario: empty partition block");
      for (ProcessId p : block) {
        if (!uni.count(p))
          throw std::invalid_argument("scenario: block member not in universe");
        if (!seen.insert(p).second)
          throw std::invalid_argument("scenario: partition blocks overlap");
      }
    }
    const auto& rule = sc.adversary.release;
    if (rule.kind == ReleaseRule::Kind::AtStep && rule.step < 1)
      throw std::invalid_argument("scenario: release step must be >= 1");
    if (rule.kind == ReleaseRule::Kind::AfterDecided)
      for (ProcessId p : rule.who)
        if (!uni.count(p))
          throw std::invalid_argument("scenario: release watch-set member not in universe");
  } else if (!sc.adversary.blocks.empty()) {
    throw std::invalid_argument("scenario: blocks given for a non-partition adversary");
  }
  if (sc.fairness_bound < 1)
    throw std::invalid_argument("scenario: fairness bound must be >= 1");
  if (sc.step_budget < 1) throw std::invalid_argument("scenario: step budget must be >= 1");
  return sc;
}

// --- scenario files ----------------------------------------------------------
//
//   [params]
//   n = 4
//   f = 2
//   k = 1
//
//   [inputs]
//   1 = 10
//   2 = 20
//
//   [adversary]
//   kind = partition-delay
//   blocks = 1 2 | 3 4
//   release = after-all-decided      (or: at-step 40 / after-decided 1 2)
//
//   [crash-plan]
//   initial-dead = 3 4
//   mid-run = 2 after 3 omit 1
//
//   [run]
//   seed = 42
//   fairness-bound = 64
//   step-budget = 100000

namespace detail {

[[noreturn]] inline void scn_fail(int lineno, const std::string& msg) {
  throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": " + msg);
}

inline long long scn_int(const std::string& s, int lineno, const char* what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    scn_fail(lineno, std::string("bad ") + what + " '" + s + "'");
  }
}

inline std::vector<std::string> scn_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string scn_trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  Scenario sc;
  bool saw_params = false;
  int n = 0, f = -1, k = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::scn_trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') detail::scn_fail(lineno, "unterminated section header");
      section = t.substr(1, t.size() - 2);
      if (section != "params" && section != "inputs" && section != "adversary" &&
          section != "crash-plan" && section != "run")
        detail::scn_fail(lineno, "unknown section [" + section + "]");
      if (section == "params") saw_params = true;
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) detail::scn_fail(lineno, "expected 'key = value'");
    std::string key = detail::scn_trim(t.substr(0, eq));
    std::string value = detail::scn_trim(t.substr(eq + 1));
    if (section.empty()) detail::scn_fail(lineno, "assignment before any section");
    if (section == "params") {
      if (key == "n")
        n = static_cast<int>(detail::scn_int(value, lineno, "n"));
      else if (key == "f")
        f = static_cast<int>(detail::scn_int(value, lineno, "f"));
      else if (key == "k")
        k = static_cast<int>(detail::scn_int(value, lineno, "k"));
      else if (key == "universe")
        for (const auto& w : detail::scn_words(value))
          sc.universe.push_back(
              static_cast<ProcessId>(detail::scn_int(w, lineno, "universe id")));
      else
        detail::scn_fail(lineno, "unknown params key '" + key + "'");
    } else if (section == "inputs") {
      sc.inputs[static_cast<ProcessId>(detail::scn_int(key, lineno, "pid"))] =
          detail::scn_int(value, lineno, "input value");
    } else if (section == "adversary") {
      if (key == "kind") {
        if (value == "fair")
          sc.adversary.kind = AdversaryKind::Fair;
        else if (value == "initial-crash")
          sc.adversary.kind = AdversaryKind::InitialCrash;
        else if (value == "partition-delay")
          sc.adversary.kind = AdversaryKind::PartitionDelay;
        else
          detail::scn_fail(lineno, "unknown adversary kind '" + value + "'");
      } else if (key == "blocks") {
        std::size_t start = 0;
        while (start <= value.size()) {
          auto bar = value.find('|', start);
          auto part = value.substr(
              start, bar == std::string::npos ? std::string::npos : bar - start);
          std::set<ProcessId> block;
          for (const auto& w : detail::scn_words(part))
            block.insert(static_cast<ProcessId>(detail::scn_int(w, lineno, "block member")));
          if (block.empty()) detail::scn_fail(lineno, "empty block");
          sc.adversary.blocks.push_back(std::move(block));
          if (bar == std::string::npos) break;
          start = bar + 1;
        }
      } else if (key == "release") {
        auto words = detail::scn_words(value);
        if (words.empty()) detail::scn_fail(lineno, "missing release rule");
        if (words[0] == "after-all-decided") {
          if (words.size() != 1) detail::scn_fail(lineno, "after-all-decided takes no args");
          sc.adversary.release = {ReleaseRule::Kind::AfterAllDecided, 0, {}};
        } else if (words[0] == "at-step") {
          if (words.size() != 2) detail::scn_fail(lineno, "at-step needs one step number");
          sc.adversary.release = {
              ReleaseRule::Kind::AtStep,
              static_cast<int>(detail::scn_int(words[1], lineno, "release step")),
              {}};
        } else if (words[0] == "after-decided") {
          if (words.size() < 2) detail::scn_fail(lineno, "after-decided needs process ids");
          ReleaseRule rule{ReleaseRule::Kind::AfterDecided, 0, {}};
          for (std::size_t i = 1; i < words.size(); ++i)
            rule.who.insert(
                static_cast<ProcessId>(detail::scn_int(words[i], lineno, "release id")));
          sc.adversary.release = std::move(rule);
        } else {
          detail::scn_fail(lineno, "unknown release rule '" + words[0] + "'");
        }
      } else {
        detail::scn_fail(lineno, "unknown adversary key '" + key + "'");
      }
    } else if (section == "crash-plan") {
      if (key == "initial-dead") {
        for (const auto& w : detail::scn_words(value))
          sc.initial_dead.insert(static_cast<ProcessId>(detail::scn_int(w, lineno, "pid")));
      } else if (key == "mid-run") {
        auto words = detail::scn_words(value);
        if (words.size() < 3 || words[1] != "after")
          detail::scn_fail(lineno, "mid-run syntax: <pid> after <steps> [omit <ids...>]");
        MidRunCrash mc;
        mc.pid = static_cast<ProcessId>(detail::scn_int(words[0], lineno, "pid"));
        mc.after_local_steps = static_cast<int>(detail::scn_int(words[2], lineno, "steps"));
        if (words.size() > 3) {
          if (words[3] != "omit")
            detail::scn_fail(lineno, "mid-run syntax: <pid> after <steps> [omit <ids...>]");
          for (std::size_t i = 4; i < words.size(); ++i)
            mc.omit.insert(static_cast<ProcessId>(detail::scn_int(words[i], lineno, "pid")));
        }
        sc.mid_run_crash = std::move(mc);
      } else {
        detail::scn_fail(lineno, "unknown crash-plan key '" + key + "'");
      }
    } else if (section == "run") {
      if (key == "seed")
        sc.seed = static_cast<std::uint64_t>(detail::scn_int(value, lineno, "seed"));
      else if (key == "fairness-bound")
        sc.fairness_bound = static_cast<int>(detail::scn_int(value, lineno, "fairness bound"));
      else if (key == "step-budget")
        sc.step_budget = static_cast<int>(detail::scn_int(value, lineno, "step budget"));
      else
        detail::scn_fail(lineno, "unknown run key '" + key + "'");
    }
  }
  if (!saw_params) throw std::invalid_argument("scenario line 1: missing [params] section");
  try {
    sc.params = SystemParams(n, f, k);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  return normalize_scenario(std::move(sc));
}

inline std::string write_scenario(const Scenario& sc) {
  std::ostringstream out;
  out << "[params]\nn = " << sc.params.n << "\nf = " << sc.params.f << "\nk = " << sc.params.k
      << "\n";
  if (sc.universe != all_processes(sc.params)) {
    out << "universe =";
    for (ProcessId p : sc.universe) out << ' ' << p;
    out << '\n';
  }
  out << "\n[inputs]\n";
  for (const auto& [p, v] : sc.inputs) out << p << " = " << v << '\n';
  out << "\n[adversary]\nkind = ";
  switch (sc.adversary.kind) {
    case AdversaryKind::Fair: out << "fair\n"; break;
    case AdversaryKind::InitialCrash: out << "initial-crash\n"; break;
    case AdversaryKind::PartitionDelay: {
      out << "partition-delay\nblocks = ";
      for (std::size_t i = 0; i < sc.adversary.blocks.size(); ++i) {
        if (i) out << " | ";
        bool first = true;
        for (ProcessId p : sc.adversary.blocks[i]) {
          if (!first) out << ' ';
          first = false;
          out << p;
        }
      }
      out << "\nrelease = ";
      switch (sc.adversary.release.kind) {
        case ReleaseRule::Kind::AfterAllDecided: out << "after-all-decided"; break;
        case ReleaseRule::Kind::AtStep: out << "at-step " << sc.adversary.release.step; break;
        case ReleaseRule::Kind::AfterDecided: {
          out << "after-decided";
          for (ProcessId p : sc.adversary.release.who) out << ' ' << p;
          break;
        }
      }
      out << '\n';
      break;
    }
  }
  if (!sc.initial_dead.empty() || sc.mid_run_crash) {
    out << "\n[crash-plan]\n";
    if (!sc.initial_dead.empty()) {
      out << "initial-dead =";
      for (ProcessId p : sc.initial_dead) out << ' ' << p;
      out << '\n';
    }
    if (sc.mid_run_crash) {
      out << "mid-run = " << sc.mid_run_crash->pid << " after "
          << sc.mid_run_crash->after_local_steps;
      if (!sc.mid_run_crash->omit.empty()) {
        out << " omit";
        for (ProcessId p : sc.mid_run_crash->omit) out << ' ' << p;
      }
      out << '\n';
    }
  }
  out << "\n[run]\nseed = " << sc.seed << "\nfairness-bound = " << sc.fairness_bound
      << "\nstep-budget = " << sc.step_budget << '\n';
  return out.str();
}

}  // namespace kset
