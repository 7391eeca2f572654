#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kset/types.hpp"

namespace kset {

/// Simple directed graph over ProcessIds (no self-loops, no parallel edges).
/// Used for the first-stage reception graph: edge u -> w means w received u's
/// first-stage message, so in-neighborhoods are exactly the heard-lists.
class Digraph {
 public:
  Digraph() = default;

  explicit Digraph(const std::set<ProcessId>& vertices) {
    for (ProcessId v : vertices) add_vertex(v);
  }

  static Digraph from_edges(const std::set<ProcessId>& vertices,
                            const std::vector<std::pair<ProcessId, ProcessId>>& edges) {
    Digraph g(vertices);
    for (const auto& [u, w] : edges) g.add_edge(u, w);
    return g;
  }

  void add_vertex(ProcessId v) {
    if (index_of(v)) return;
    index_[v] = verts_.size();
    verts_.push_back(v);
    out_.emplace_back();
    in_.emplace_back();
  }

  void add_edge(ProcessId u, ProcessId w) {
    if (u == w) throw std::invalid_argument("Digraph: self-loops are not allowed");
    auto ui = index_of(u), wi = index_of(w);
    if (!ui || !wi) throw std::invalid_argument("Digraph: edge endpoint is not a vertex");
    auto& outs = out_[*ui];
    if (std::find(outs.begin(), outs.end(), *wi) != outs.end()) return;
    outs.push_back(*wi);
    in_[*wi].push_back(*ui);
  }

  bool has_edge(ProcessId u, ProcessId w) const {
    auto ui = index_of(u), wi = index_of(w);
    if (!ui || !wi) return false;
    const auto& outs = out_[*ui];
    return std::find(outs.begin(), outs.end(), *wi) != outs.end();
  }

  std::size_t vertex_count() const { return verts_.size(); }
  const std::vector<ProcessId>& vertices() const { return verts_; }
  bool has_vertex(ProcessId v) const { return index_of(v).has_value(); }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (const auto& outs : out_) c += outs.size();
    return c;
  }

  // Internal index accessors used by the algorithms below.
  const std::vector<std::size_t>& out_at(std::size_t i) const { return out_[i]; }
  const std::vector<std::size_t>& in_at(std::size_t i) const { return in_[i]; }
  ProcessId vertex_at(std::size_t i) const { return verts_[i]; }
  std::optional<std::size_t> index_of(ProcessId v) const {
    auto it = index_.find(v);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<ProcessId> verts_;
  std::map<ProcessId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

namespace detail {

// Iterative Tarjan; returns component id per vertex index. Components are
// numbered in reverse topological order of the condensation (a component's
// successors always have smaller ids).
inline std::vector<int> tarjan_components(const Digraph& g, int& component_count) {
  const std::size_t n = g.vertex_count();
  std::vector<int> comp(n, -1), low(n, 0), num(n, -1);
  std::vector<std::size_t> stack;
  std::vector<bool> on_stack(n, false);
  int counter = 0;
  component_count = 0;

  struct Frame {
    std::size_t v;
    std::size_t edge = 0;
  };

  for (std::size_t root = 0; root < n; ++root) {
    if (num[root] != -1) continue;
    std::vector<Frame> frames{{root}};
    num[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      Frame& fr = frames.back();
      const auto& outs = g.out_at(fr.v);
      if (fr.edge < outs.size()) {
        std::size_t w = outs[fr.edge++];
        if (num[w] == -1) {
          num[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back(Frame{w});
        } else if (on_stack[w]) {
          low[fr.v] = std::min(low[fr.v], num[w]);
        }
      } else {
        if (low[fr.v] == num[fr.v]) {
          while (true) {
            std::size_t w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = component_count;
            if (w == fr.v) break;
          }
          ++component_count;
        }
        std::size_t v = fr.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }
  return comp;
}

}  // namespace detail

/// Strongly connected components with no incoming edge from outside, i.e. the
/// in-degree-0 vertices of the condensation. Returned sorted by smallest
/// member id; members sorted ascending.
inline std::vector<std::set<ProcessId>> source_components(const Digraph& g) {
  int count = 0;
  std::vector<int> comp = detail::tarjan_components(g, count);
  std::vector<bool> has_external_in(static_cast<std::size_t>(count), false);
  for (std::size_t v = 0; v < g.vertex_count(); ++v)
    for (std::size_t u : g.in_at(v))
      if (comp[u] != comp[v]) has_external_in[static_cast<std::size_t>(comp[v])] = true;

  std::vector<std::set<ProcessId>> sources(static_cast<std::size_t>(count));
  for (std::size_t v = 0; v < g.vertex_count(); ++v)
    sources[static_cast<std::size_t>(comp[v])].insert(g.vertex_at(v));
  std::vector<std::set<ProcessId>> out;
  for (int c = 0; c < count; ++c)
    if (!has_external_in[static_cast<std::size_t>(c)]) out.push_back(std::move(sources[static_cast<std::size_t>(c)]));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  return out;
}

inline int min_in_degree(const Digraph& g) {
  if (g.vertex_count() == 0)
    throw std::invalid_argument("min_in_degree: graph has no vertices");
  std::size_t best = g.in_at(0).size();
  for (std::size_t v = 1; v < g.vertex_count(); ++v) best = std::min(best, g.in_at(v).size());
  return static_cast<int>(best);
}

/// Source components from which v is reachable (along directed paths). Every
/// vertex of a finite digraph is reachable from at least one source component:
/// walking in-edges backwards must end up trapped in one.
inline std::vector<std::set<ProcessId>> reachable_sources(const Digraph& g, ProcessId v) {
  auto vi = g.index_of(v);
  if (!vi) throw std::invalid_argument("reachable_sources: vertex not in graph");
  // Backward reachability from v.
  std::vector<bool> seen(g.vertex_count(), false);
  std::vector<std::size_t> work{*vi};
  seen[*vi] = true;
  while (!work.empty()) {
    std::size_t x = work.back();
    work.pop_back();
    for (std::size_t u : g.in_at(x))
      if (!seen[u]) {
        seen[u] = true;
        work.push_back(u);
      }
  }
  std::vector<std::set<ProcessId>> out;
  for (const auto& comp : source_components(g))
    if (seen[*g.index_of(*comp.begin())]) out.push_back(comp);
  return out;
}

/// The unique source component if there is exactly one, otherwise nullopt.
/// With a unique source every process's decision rule lands on the same
/// component, which is what forces agreement in well-connected runs.
inline std::optional<std::set<ProcessId>> unique_source_component(const Digraph& g) {
  auto sources = source_components(g);
  if (sources.size() == 1) return sources.front();
  return std::nullopt;
}

/// Weakly connected components (edge direction ignored), sorted by smallest
/// member.
inline std::vector<std::set<ProcessId>> weak_components(const Digraph& g) {
  std::vector<int> comp(g.vertex_count(), -1);
  int count = 0;
  for (std::size_t root = 0; root < g.vertex_count(); ++root) {
    if (comp[root] != -1) continue;
    std::vector<std::size_t> work{root};
    comp[root] = count;
    while (!work.empty()) {
      std::size_t x = work.back();
      work.pop_back();
      auto visit = [&](std::size_t y) {
        if (comp[y] == -1) {
          comp[y] = count;
          work.push_back(y);
        }
      };
      for (std::size_t w : g.out_at(x)) visit(w);
      for (std::size_t u : g.in_at(x)) visit(u);
    }
    ++count;
  }
  std::vector<std::set<ProcessId>> out(static_cast<std::size_t>(count));
  for (std::size_t v = 0; v < g.vertex_count(); ++v)
    out[static_cast<std::size_t>(comp[v])].insert(g.vertex_at(v));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  return out;
}

/// Seeded random simple digraph on vertices 1..n: every ordered pair gets an
/// edge with probability edge_prob, then each vertex short of min_in_deg
/// receives extra in-edges from uniformly chosen fresh sources until it meets
/// the target. Deterministic for a fixed seed.
inline Digraph random_digraph(int n, int min_in_deg, double edge_prob, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_digraph: n must be >= 1");
  if (min_in_deg < 0 || min_in_deg > n - 1)
    throw std::invalid_argument("random_digraph: min in-degree must be in [0, n-1]");
  std::mt19937_64 rng(detail::mix64(seed));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::set<ProcessId> verts;
  for (ProcessId v = 1; v <= n; ++v) verts.insert(v);
  Digraph g(verts);
  for (ProcessId u = 1; u <= n; ++u)
    for (ProcessId w = 1; w <= n; ++w)
      if (u != w && coin(rng) < edge_prob) g.add_edge(u, w);
  for (ProcessId w = 1; w <= n; ++w) {
    std::vector<ProcessId> candidates;
    for (ProcessId u = 1; u <= n; ++u)
      if (u != w && !g.has_edge(u, w)) candidates.push_back(u);
    std::size_t deficit = 0;
    std::size_t have = g.in_at(*g.index_of(w)).size();
    if (static_cast<int>(have) < min_in_deg) deficit = static_cast<std::size_t>(min_in_deg) - have;
    for (std::size_t i = 0; i < deficit; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      std::size_t j = pick(rng);
      g.add_edge(candidates[j], w);
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
  return g;
}

/// Parses the "u w" edge-per-line text format; blank lines and lines starting
/// with '#' are ignored. Vertices are the union of endpoint ids plus any ids
/// on single-token "v" lines (isolated vertices).
inline Digraph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<ProcessId, ProcessId>> edges;
  std::set<ProcessId> verts;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a) || a[0] == '#') continue;
    if (!(ls >> b)) {
      verts.insert(std::stoi(a));
      continue;
    }
    if (ls >> extra)
      throw std::invalid_argument("edge list line " + std::to_string(lineno) +
                                  ": expected 'u w'");
    try {
      edges.emplace_back(std::stoi(a), std::stoi(b));
    } catch (const std::exception&) {
      throw std::invalid_argument("edge list line " + std::to_string(lineno) +
                                  ": ids must be integers");
    }
    verts.insert(edges.back().first);
    verts.insert(edges.back().second);
  }
  return Digraph::from_edges(verts, edges);
}

}  // namespace kset
