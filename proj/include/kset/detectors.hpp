#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kset/trace.hpp"
#include "kset/types.hpp"
#include "kset/verdict.hpp"

namespace kset {

/// A failure-detector history over a finite horizon: the sigma (quorum) and
/// omega (leader-set) outputs of every process at every time 1..horizon,
/// together with the crash pattern they were generated against.
struct FDHistory {
  int n = 0;
  int horizon = 0;
  FailurePattern pattern;
  // outputs[p][t-1], sorted ascending; processes are 1..n.
  std::vector<std::vector<std::vector<ProcessId>>> sigma;
  std::vector<std::vector<std::vector<ProcessId>>> omega;

  const std::vector<ProcessId>& sigma_at(ProcessId p, int t) const {
    return sigma[static_cast<std::size_t>(p - 1)][static_cast<std::size_t>(t - 1)];
  }
  const std::vector<ProcessId>& omega_at(ProcessId p, int t) const {
    return omega[static_cast<std::size_t>(p - 1)][static_cast<std::size_t>(t - 1)];
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("FDHistory: n must be >= 1");
    if (horizon < 1) throw std::invalid_argument("FDHistory: horizon must be >= 1");
    auto check = [&](const auto& table, const char* which) {
      if (table.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument(std::string("FDHistory: ") + which +
                                    " must cover every process");
      for (const auto& row : table) {
        if (row.size() != static_cast<std::size_t>(horizon))
          throw std::invalid_argument(std::string("FDHistory: ") + which +
                                      " must cover every time up to the horizon");
        for (const auto& ids : row)
          for (ProcessId q : ids)
            if (q < 1 || q > n)
              throw std::invalid_argument(std::string("FDHistory: ") + which +
                                          " output id out of range");
      }
    };
    check(sigma, "sigma");
    check(omega, "omega");
  }
};

namespace detail {

inline bool sorted_intersects(const std::vector<ProcessId>& a, const std::vector<ProcessId>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j])
      ++i;
    else
      ++j;
  }
  return false;
}

}  // namespace detail

/// Checks the quorum-detector laws for parameter k:
///  - Intersection: among any k+1 distinct processes queried at any k+1
///    times, some two outputs share a process.
///  - Liveness: from some time through the horizon, correct processes' outputs
///    contain no faulty process.
/// Fail verdicts carry the offending (process, time) tuple. Distinct output
/// sets per process are deduplicated first, which keeps the exhaustive tuple
/// walk tractable without changing its answer.
inline Verdict check_sigma_k(const FDHistory& h, int k) {
  h.validate();
  if (k < 1) throw std::invalid_argument("check_sigma_k: k must be >= 1");

  struct Distinct {
    std::vector<ProcessId> out;
    int time;  // representative query time for the witness
  };
  std::vector<std::vector<Distinct>> menu(static_cast<std::size_t>(h.n));
  for (ProcessId p = 1; p <= h.n; ++p) {
    auto& m = menu[static_cast<std::size_t>(p - 1)];
    for (int t = 1; t <= h.horizon; ++t) {
      const auto& out = h.sigma_at(p, t);
      bool fresh = true;
      for (const auto& d : m)
        if (d.out == out) {
          fresh = false;
          break;
        }
      if (fresh) m.push_back({out, t});
    }
  }

  // Depth-first choice of k+1 processes and one distinct output for each,
  // pruning as soon as two chosen outputs intersect.
  std::vector<std::pair<ProcessId, const Distinct*>> chosen;
  std::function<bool(ProcessId)> search = [&](ProcessId from) -> bool {
    if (chosen.size() == static_cast<std::size_t>(k + 1)) return true;
    for (ProcessId p = from; p <= h.n; ++p) {
      for (const auto& d : menu[static_cast<std::size_t>(p - 1)]) {
        bool disjoint = true;
        for (const auto& [q, prev] : chosen)
          if (detail::sorted_intersects(prev->out, d.out)) {
            disjoint = false;
            break;
          }
        if (!disjoint) continue;
        chosen.emplace_back(p, &d);
        if (search(p + 1)) return true;
        chosen.pop_back();
      }
    }
    return false;
  };
  if (search(1)) {
    Verdict::Witness w;
    for (const auto& [p, d] : chosen) {
      w.processes.push_back(p);
      w.times.push_back(d->time);
    }
    w.note = "pairwise disjoint quorum outputs";
    return Verdict::failed(std::move(w));
  }

  std::set<ProcessId> faulty = h.pattern.faulty();
  for (ProcessId p = 1; p <= h.n; ++p) {
    if (faulty.count(p)) continue;
    // Liveness over a finite horizon: the suffix property collapses to the
    // horizon point — some faulty id in a correct process's final output
    // means no stabilization time exists within the evidence.
    const auto& out = h.sigma_at(p, h.horizon);
    for (ProcessId q : out)
      if (faulty.count(q)) {
        Verdict::Witness w;
        w.processes = {p, q};
        w.times = {h.horizon};
        w.note = "correct process still trusts a faulty one at the horizon";
        return Verdict::failed(std::move(w));
      }
  }
  return Verdict::ok();
}

/// Checks the leader-detector laws for parameter k: every output must have
/// exactly k members, and scanning backward from the horizon there must be a
/// (nonempty) suffix on which all processes constantly output one common set
/// containing at least one correct process.
inline Verdict check_omega_k(const FDHistory& h, int k) {
  h.validate();
  if (k < 1 || k > h.n) throw std::invalid_argument("check_omega_k: k must be in [1, n]");
  for (ProcessId p = 1; p <= h.n; ++p)
    for (int t = 1; t <= h.horizon; ++t)
      if (h.omega_at(p, t).size() != static_cast<std::size_t>(k)) {
        Verdict::Witness w;
        w.processes = {p};
        w.times = {t};
        w.note = "leader set has " + std::to_string(h.omega_at(p, t).size()) +
                 " members, expected " + std::to_string(k);
        return Verdict::failed(std::move(w));
      }

  const std::vector<ProcessId>& ld = h.omega_at(1, h.horizon);
  int start = h.horizon;
  while (start > 1) {
    bool uniform = true;
    for (ProcessId p = 1; p <= h.n && uniform; ++p)
      if (h.omega_at(p, start - 1) != ld) uniform = false;
    if (!uniform) break;
    --start;
  }
  for (ProcessId p = 1; p <= h.n; ++p)
    if (h.omega_at(p, h.horizon) != ld) {
      Verdict::Witness w;
      w.processes = {p};
      w.times = {h.horizon};
      w.note = "no common leader set at the horizon";
      return Verdict::failed(std::move(w));
    }
  std::set<ProcessId> faulty = h.pattern.faulty();
  bool has_correct = false;
  for (ProcessId q : ld)
    if (!faulty.count(q)) has_correct = true;
  if (!has_correct) {
    Verdict::Witness w;
    w.processes = ld;
    w.times = {start};
    w.note = "stable leader set contains no correct process";
    return Verdict::failed(std::move(w));
  }
  return Verdict::ok();
}

/// Builds the history induced by running one quorum detector per partition
/// block: a live member outputs the currently-live members of its own block;
/// a crashed process outputs everyone from its crash time on. Leader outputs
/// rotate arbitrarily before t_gst and are constantly `ld` afterward. Any two
/// live same-block outputs share the later querier, and any k+1 processes
/// include two from one of the k blocks, so the combined history satisfies
/// the k-quorum laws; pairing it with the stabilized leader outputs makes it
/// a valid (sigma_k, omega_k) history.
inline FDHistory make_partition_history(const std::vector<std::set<ProcessId>>& partition,
                                        const FailurePattern& pattern, int t_gst,
                                        const std::set<ProcessId>& ld, int horizon) {
  if (partition.empty()) throw std::invalid_argument("make_partition_history: no blocks");
  int n = 0;
  for (const auto& block : partition) n += static_cast<int>(block.size());
  std::map<ProcessId, const std::set<ProcessId>*> block_of;
  for (const auto& block : partition) {
    if (block.empty()) throw std::invalid_argument("make_partition_history: empty block");
    for (ProcessId p : block) {
      if (p < 1 || p > n)
        throw std::invalid_argument("make_partition_history: blocks must partition 1..n");
      if (!block_of.emplace(p, &block).second)
        throw std::invalid_argument("make_partition_history: blocks overlap");
    }
  }
  if (horizon < 1) throw std::invalid_argument("make_partition_history: horizon must be >= 1");
  if (t_gst < 1 || t_gst > horizon)
    throw std::invalid_argument("make_partition_history: t_gst must lie within the horizon");
  std::set<ProcessId> faulty = pattern.faulty();
  for (ProcessId p : faulty)
    if (!block_of.count(p))
      throw std::invalid_argument("make_partition_history: crash pattern names a stranger");
  bool ld_correct = false;
  for (ProcessId q : ld) {
    if (!block_of.count(q))
      throw std::invalid_argument("make_partition_history: leader set names a stranger");
    if (!faulty.count(q)) ld_correct = true;
  }
  if (ld.empty() || !ld_correct)
    throw std::invalid_argument(
        "make_partition_history: leader set needs at least one correct member");

  const int k = static_cast<int>(ld.size());
  FDHistory h;
  h.n = n;
  h.horizon = horizon;
  h.pattern = pattern;
  h.sigma.assign(static_cast<std::size_t>(n), {});
  h.omega.assign(static_cast<std::size_t>(n), {});
  std::vector<ProcessId> ld_sorted(ld.begin(), ld.end());
  for (ProcessId p = 1; p <= n; ++p) {
    auto& sig = h.sigma[static_cast<std::size_t>(p - 1)];
    auto& om = h.omega[static_cast<std::size_t>(p - 1)];
    for (int t = 1; t <= horizon; ++t) {
      std::vector<ProcessId> out;
      if (pattern.is_crashed(p, t)) {
        for (ProcessId q = 1; q <= n; ++q) out.push_back(q);
      } else {
        for (ProcessId q : *block_of.at(p))
          if (!pattern.is_crashed(q, t)) out.push_back(q);
      }
      sig.push_back(std::move(out));
      if (t >= t_gst) {
        om.push_back(ld_sorted);
      } else {
        std::vector<ProcessId> leaders;
        for (int j = 0; j < k; ++j)
          leaders.push_back(static_cast<ProcessId>((p + t + j - 2) % n + 1));
        std::sort(leaders.begin(), leaders.end());
        om.push_back(std::move(leaders));
      }
    }
  }
  return h;
}

// --- history files -----------------------------------------------------------
//
//   fdhistory v1 n=4 horizon=8 crashes=2@3
//   h t=1 p=1 sigma=1,2 omega=1,3

inline std::string write_history(const FDHistory& h) {
  std::ostringstream out;
  out << "fdhistory v1 n=" << h.n << " horizon=" << h.horizon
      << " crashes=" << detail::format_crashes(h.pattern.crashed_from()) << '\n';
  for (int t = 1; t <= h.horizon; ++t)
    for (ProcessId p = 1; p <= h.n; ++p)
      out << "h t=" << t << " p=" << p << " sigma=" << detail::join_ids(h.sigma_at(p, t))
          << " omega=" << detail::join_ids(h.omega_at(p, t)) << '\n';
  return out.str();
}

inline FDHistory parse_history(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  FDHistory h;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    detail::FieldScanner sc(line, lineno);
    if (!saw_header) {
      sc.expect_word("fdhistory");
      sc.expect_word("v1");
      h.n = static_cast<int>(detail::parse_int(sc.expect("n"), sc, "n"));
      h.horizon = static_cast<int>(detail::parse_int(sc.expect("horizon"), sc, "horizon"));
      std::string crashes = sc.expect("crashes");
      if (crashes != "-") {
        std::size_t start = 0;
        while (start <= crashes.size()) {
          auto comma = crashes.find(',', start);
          auto part = crashes.substr(
              start, comma == std::string::npos ? std::string::npos : comma - start);
          auto at = part.find('@');
          if (at == std::string::npos) sc.fail("bad crash entry '" + part + "'");
          h.pattern.mark_crashed(
              static_cast<ProcessId>(detail::parse_int(part.substr(0, at), sc, "pid")),
              static_cast<int>(detail::parse_int(part.substr(at + 1), sc, "time")));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
      if (h.n < 1 || h.horizon < 1) sc.fail("n and horizon must be >= 1");
      h.sigma.assign(static_cast<std::size_t>(h.n),
                     std::vector<std::vector<ProcessId>>(static_cast<std::size_t>(h.horizon)));
      h.omega.assign(static_cast<std::size_t>(h.n),
                     std::vector<std::vector<ProcessId>>(static_cast<std::size_t>(h.horizon)));
      saw_header = true;
      continue;
    }
    sc.expect_word("h");
    int t = static_cast<int>(detail::parse_int(sc.expect("t"), sc, "time"));
    ProcessId p = static_cast<ProcessId>(detail::parse_int(sc.expect("p"), sc, "pid"));
    if (t < 1 || t > h.horizon || p < 1 || p > h.n) sc.fail("entry outside the declared table");
    std::vector<ProcessId> sig, om;
    for (long long v : detail::parse_int_list(sc.expect("sigma"), sc, "sigma id"))
      sig.push_back(static_cast<ProcessId>(v));
    for (long long v : detail::parse_int_list(sc.expect("omega"), sc, "omega id"))
      om.push_back(static_cast<ProcessId>(v));
    h.sigma[static_cast<std::size_t>(p - 1)][static_cast<std::size_t>(t - 1)] = std::move(sig);
    h.omega[static_cast<std::size_t>(p - 1)][static_cast<std::size_t>(t - 1)] = std::move(om);
    if (!sc.at_end()) sc.fail("trailing tokens");
  }
  if (!saw_header) throw std::invalid_argument("history line 1: missing header");
  h.validate();
  return h;
}

}  // namespace kset
