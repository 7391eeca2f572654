#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kset {

using ProcessId = int;         // 1-based, dense in [1, n]
using Value = std::int64_t;    // proposal/decision domain; "undecided" is modeled as std::nullopt
using MsgId = std::uint64_t;   // unique per trace, assigned in emission order
using FdValue = std::vector<ProcessId>;  // failure-detector output, sorted ascending

/// Static system parameters. L = n - f is the quota size used throughout:
/// a process can only ever wait for messages from L - 1 other processes
/// without risking a deadlock against f crashes.
struct SystemParams {
  int n = 0;
  int f = 0;
  int k = 0;

  SystemParams() = default;
  SystemParams(int n_, int f_, int k_) : n(n_), f(f_), k(k_) { validate(); }

  int quorum() const { return n - f; }  // L

  void validate() const {
    if (n < 1) throw std::invalid_argument("SystemParams: n must be >= 1");
    if (f < 0 || f > n - 1)
      throw std::invalid_argument("SystemParams: f must satisfy 0 <= f <= n-1");
    int k_max = n > 1 ? n - 1 : 1;  // single-process systems admit k = 1
    if (k < 1 || k > k_max)
      throw std::invalid_argument("SystemParams: k must satisfy 1 <= k <= max(1, n-1)");
  }

  bool operator==(const SystemParams& o) const { return n == o.n && f == o.f && k == o.k; }
};

// Message payloads. Stage1 announces the sender's id (carried by the
// envelope); Stage2 publishes the sender's proposal together with the list of
// exactly L - 1 processes it heard from in the first stage. Opaque carries
// uninterpreted bytes for user-supplied algorithms.
struct Stage1 {
  bool operator==(const Stage1&) const { return true; }
};
struct Stage2 {
  Value proposal = 0;
  std::vector<ProcessId> heard;  // sorted, no self, size L - 1
  bool operator==(const Stage2& o) const { return proposal == o.proposal && heard == o.heard; }
};
struct Opaque {
  std::string bytes;
  bool operator==(const Opaque& o) const { return bytes == o.bytes; }
};
using Payload = std::variant<Stage1, Stage2, Opaque>;

struct Message {
  MsgId id = 0;
  ProcessId sender = 0;
  ProcessId receiver = 0;
  int send_time = 0;  // global step index at which it was sent
  Payload payload;

  bool same_content(const Message& o) const {
    return sender == o.sender && receiver == o.receiver && send_time == o.send_time &&
           payload == o.payload;
  }
};

namespace detail {

inline std::string join_ids(const std::vector<ProcessId>& ids, char sep = ',') {
  if (ids.empty()) return "-";
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << sep;
    out << ids[i];
  }
  return out.str();
}

inline std::string join_ids(const std::set<ProcessId>& ids, char sep = ',') {
  return join_ids(std::vector<ProcessId>(ids.begin(), ids.end()), sep);
}

inline std::string payload_to_string(const Payload& p) {
  struct V {
    std::string operator()(const Stage1&) const { return "stage1"; }
    std::string operator()(const Stage2& s) const {
      return "stage2(" + std::to_string(s.proposal) + ",[" + join_ids(s.heard) + "])";
    }
    std::string operator()(const Opaque& o) const { return "opaque(" + o.bytes + ")"; }
  };
  return std::visit(V{}, p);
}

// splitmix64: cheap, well-distributed mixer used to derive per-run seeds from
// (tuple, index) coordinates so sweep rows are order-independent.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline std::vector<ProcessId> all_processes(const SystemParams& params) {
  std::vector<ProcessId> out;
  out.reserve(static_cast<std::size_t>(params.n));
  for (ProcessId p = 1; p <= params.n; ++p) out.push_back(p);
  return out;
}

}  // namespace kset
