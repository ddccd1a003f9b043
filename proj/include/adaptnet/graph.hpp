#pragma once

// Undirected projection of a network state, weighted modularity, Louvain
// community detection and the five outcome measures of a finished run.

#include <adaptnet/model.hpp>
#include <adaptnet/random.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace adaptnet {

struct Edge {
  std::size_t i;  // i < j
  std::size_t j;
  double weight;  // > 0

  bool operator==(const Edge&) const = default;
};

/// Simple undirected graph: no self-loops, no duplicate pairs, strictly positive weights.
class UndirectedWeightedGraph {
 public:
  UndirectedWeightedGraph() = default;

  /// Edges in any order; pairs are normalized to i < j. Zero-weight edges are dropped.
  UndirectedWeightedGraph(std::size_t n, std::vector<Edge> edges) : n_(n) {
    for (auto& e : edges) {
      if (e.i == e.j) throw std::invalid_argument("graph: self-loops are not allowed");
      if (e.i >= n || e.j >= n) throw std::invalid_argument("graph: edge endpoint out of range");
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
        throw std::invalid_argument("graph: edge weights must be finite and nonnegative");
      if (e.i > e.j) std::swap(e.i, e.j);
    }
    std::erase_if(edges, [](const Edge& e) { return e.weight == 0.0; });
    std::sort(edges.begin(), edges.end(),
              [](const Edge& l, const Edge& r) { return std::pair(l.i, l.j) < std::pair(r.i, r.j); });
    if (std::adjacent_find(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
          return l.i == r.i && l.j == r.j;
        }) != edges.end())
      throw std::invalid_argument("graph: duplicate node pair");
    edges_ = std::move(edges);
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  double total_weight() const noexcept {
    double m = 0.0;
    for (const auto& e : edges_) m += e.weight;
    return m;
  }

  /// Weighted degree of every node.
  std::vector<double> degrees() const {
    std::vector<double> k(n_, 0.0);
    for (const auto& e : edges_) {
      k[e.i] += e.weight;
      k[e.j] += e.weight;
    }
    return k;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

/// Node -> community assignment with ids contiguous from 0.
class Partition {
 public:
  Partition() = default;

  /// Arbitrary labels are relabelled 0, 1, ... in order of first appearance.
  explicit Partition(std::span<const std::size_t> labels) : assignment_(labels.size()) {
    std::vector<std::size_t> remap;
    for (std::size_t v = 0; v < labels.size(); ++v) {
      const std::size_t label = labels[v];
      if (label >= remap.size()) remap.resize(label + 1, npos);
      if (remap[label] == npos) remap[label] = count_++;
      assignment_[v] = remap[label];
    }
  }

  static Partition singletons(std::size_t n) {
    std::vector<std::size_t> labels(n);
    std::iota(labels.begin(), labels.end(), std::size_t{0});
    return Partition(labels);
  }

  static Partition whole(std::size_t n) { return Partition(std::vector<std::size_t>(n, 0)); }

  std::size_t size() const noexcept { return assignment_.size(); }
  std::size_t community_count() const noexcept { return count_; }
  std::size_t operator[](std::size_t node) const { return assignment_.at(node); }
  std::span<const std::size_t> assignment() const noexcept { return assignment_; }

  bool operator==(const Partition&) const = default;

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> assignment_;
  std::size_t count_ = 0;
};

/// Each unordered pair gets the mean of its two directed weights; pairs averaging 0 are omitted.
inline UndirectedWeightedGraph symmetrize(const NetworkState& s) {
  const std::size_t n = s.size();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = (s.w(i, j) + s.w(j, i)) / 2.0;
      if (avg > 0.0) edges.push_back({i, j, avg});
    }
  return UndirectedWeightedGraph(n, std::move(edges));
}

/// Newman-Girvan modularity at resolution 1. Zero for a graph without edges.
inline double modularity(const UndirectedWeightedGraph& g, const Partition& p) {
  if (p.size() != g.size()) throw std::invalid_argument("modularity: partition does not cover every node");
  const double m = g.total_weight();
  if (m <= 0.0) return 0.0;
  const std::size_t k = p.community_count();
  std::vector<double> internal(k, 0.0);
  std::vector<double> total(k, 0.0);
  for (const auto& e : g.edges()) {
    const std::size_t ci = p[e.i];
    const std::size_t cj = p[e.j];
    if (ci == cj) internal[ci] += 2.0 * e.weight;
    total[ci] += e.weight;
    total[cj] += e.weight;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double frac = total[c] / (2.0 * m);
    q += internal[c] / (2.0 * m) - frac * frac;
  }
  return q;
}

struct LouvainOptions {
  double min_gain = 1e-9;  // in modularity units
};

namespace detail {

// Graph at one Louvain level; super-nodes carry internal weight as a self-loop.
struct LevelGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;  // excludes self-loops
  std::vector<double> self_loop;
  std::vector<double> degree;  // includes 2x self-loop

  std::size_t size() const noexcept { return adj.size(); }
};

inline LevelGraph level_from(const UndirectedWeightedGraph& g) {
  LevelGraph lg;
  lg.adj.resize(g.size());
  lg.self_loop.assign(g.size(), 0.0);
  lg.degree.assign(g.size(), 0.0);
  for (const auto& e : g.edges()) {
    lg.adj[e.i].emplace_back(e.j, e.weight);
    lg.adj[e.j].emplace_back(e.i, e.weight);
    lg.degree[e.i] += e.weight;
    lg.degree[e.j] += e.weight;
  }
  return lg;
}

// Local-moving phase. Returns true if any node changed community.
inline bool move_nodes(const LevelGraph& g, double m, std::vector<std::size_t>& comm, Rng& rng,
                       double min_gain) {
  const std::size_t n = g.size();
  std::vector<double> tot(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) tot[comm[v]] += g.degree[v];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span(order), rng);

  std::vector<double> link(n, 0.0);
  std::vector<std::size_t> touched;
  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const std::size_t v : order) {
      const std::size_t own = comm[v];
      const double kv = g.degree[v];
      touched.clear();
      for (const auto& [u, w] : g.adj[v]) {
        const std::size_t cu = comm[u];
        if (link[cu] == 0.0) touched.push_back(cu);
        link[cu] += w;
      }
      tot[own] -= kv;
      // Gain of inserting v into community c, scaled by m relative to modularity.
      auto gain = [&](std::size_t c) { return link[c] - tot[c] * kv / (2.0 * m); };
      const double own_gain = gain(own);
      std::size_t best = own;
      double best_gain = own_gain;
      for (const std::size_t c : touched) {
        const double gc = gain(c);
        if (gc > best_gain || (gc == best_gain && c < best)) {
          best = c;
          best_gain = gc;
        }
      }
      if (best != own && (best_gain - own_gain) / m > min_gain) {
        comm[v] = best;
        moved = true;
        any_move = true;
      } else {
        best = own;
      }
      tot[best] += kv;
      for (const std::size_t c : touched) link[c] = 0.0;
    }
  }
  return any_move;
}

// Collapses communities into super-nodes; relabels comm to 0..k-1 and returns the new graph.
inline LevelGraph aggregate(const LevelGraph& g, std::vector<std::size_t>& comm) {
  const Partition relabelled(comm);
  comm.assign(relabelled.assignment().begin(), relabelled.assignment().end());
  const std::size_t k = relabelled.community_count();

  LevelGraph next;
  next.adj.resize(k);
  next.self_loop.assign(k, 0.0);
  next.degree.assign(k, 0.0);
  std::vector<double> row(k, 0.0);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t v = 0; v < g.size(); ++v) members[comm[v]].push_back(v);

  std::vector<std::size_t> touched;
  for (std::size_t c = 0; c < k; ++c) {
    touched.clear();
    for (const std::size_t v : members[c]) {
      next.self_loop[c] += g.self_loop[v];
      next.degree[c] += g.degree[v];
      for (const auto& [u, w] : g.adj[v]) {
        const std::size_t cu = comm[u];
        if (cu == c) {
          if (u > v) next.self_loop[c] += w;
          continue;
        }
        if (row[cu] == 0.0) touched.push_back(cu);
        row[cu] += w;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (const std::size_t cu : touched) {
      next.adj[c].emplace_back(cu, row[cu]);
      row[cu] = 0.0;
    }
  }
  return next;
}

}  // namespace detail

/// Two-phase Louvain: local moves then aggregation, repeated until a level makes no move.
/// The visit order is reshuffled from `rng` once per level; ties go to the lowest community id.
inline Partition louvain(const UndirectedWeightedGraph& g, Rng& rng, const LouvainOptions& opts = {}) {
  const std::size_t n = g.size();
  const double m = g.total_weight();
  if (n == 0) return Partition{};
  if (m <= 0.0) return Partition::singletons(n);

  std::vector<std::size_t> node_to_super(n);
  std::iota(node_to_super.begin(), node_to_super.end(), std::size_t{0});
  detail::LevelGraph level = detail::level_from(g);

  for (;;) {
    std::vector<std::size_t> comm(level.size());
    std::iota(comm.begin(), comm.end(), std::size_t{0});
    if (!detail::move_nodes(level, m, comm, rng, opts.min_gain)) break;
    level = detail::aggregate(level, comm);
    for (auto& s : node_to_super) s = comm[s];
  }
  return Partition(node_to_super);
}

/// Mean opinion of each community, ordered by community id.
inline std::vector<double> community_average_states(const Partition& p, std::span<const double> x) {
  if (p.size() != x.size()) throw std::invalid_argument("community_average_states: size mismatch");
  std::vector<double> sum(p.community_count(), 0.0);
  std::vector<std::size_t> count(p.community_count(), 0);
  for (std::size_t v = 0; v < x.size(); ++v) {
    sum[p[v]] += x[v];
    ++count[p[v]];
  }
  for (std::size_t c = 0; c < sum.size(); ++c) sum[c] /= static_cast<double>(count[c]);
  return sum;
}

struct OutcomeVector {
  double avg_edge_weight = 0.0;
  std::size_t num_communities = 1;
  double modularity = 0.0;
  double range_community_states = 0.0;
  double std_community_states = 0.0;

  bool operator==(const OutcomeVector&) const = default;
};

inline constexpr std::size_t kMeasureCount = 5;

/// Measure names in canonical order; used as field names in every file format.
inline constexpr const char* kMeasureNames[kMeasureCount] = {
    "avg_edge_weight", "num_communities", "modularity", "range_community_states", "std_community_states"};

inline std::array<double, kMeasureCount> as_array(const OutcomeVector& o) {
  return {o.avg_edge_weight, static_cast<double>(o.num_communities), o.modularity, o.range_community_states,
          o.std_community_states};
}

inline OutcomeVector outcome_vector(const NetworkState& s, Rng& rng) {
  OutcomeVector out;
  out.avg_edge_weight = s.mean_weight();
  const auto graph = symmetrize(s);
  const Partition part = louvain(graph, rng);
  out.num_communities = part.community_count();
  out.modularity = modularity(graph, part);

  const auto means = community_average_states(part, s.x);
  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  out.range_community_states = *hi - *lo;
  if (means.size() > 1) {
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double var = 0.0;
    for (const double v : means) var += (v - mu) * (v - mu);
    out.std_community_states = std::sqrt(var / static_cast<double>(means.size()));
  }
  return out;
}

/// Community detection seeded from the run seed's dedicated stream.
inline OutcomeVector outcome_vector(const NetworkState& s, std::uint64_t run_seed) {
  Rng rng = Rng::for_stream(run_seed, Stream::community_detection);
  return outcome_vector(s, rng);
}

}  // namespace adaptnet
