#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tropic/errors.hpp"
#include "tropic/validation.hpp"

namespace tropic {

// community[u] for every projection node, ids renumbered 0.. in order of
// each community's smallest member.
struct RawPartition {
  std::vector<std::uint32_t> community;
  double modularity = 0.0;
  std::uint64_t seed = 0;
};

struct Nec {
  std::uint32_t id = 0;
  std::vector<node_index> urls;  // sorted

  std::size_t size() const noexcept { return urls.size(); }
};

struct NecPartition {
  static constexpr std::int32_t none = -1;

  std::vector<Nec> necs;
  std::vector<std::int32_t> membership;  // url -> NEC id, or `none`
  double modularity = 0.0;
  std::uint64_t seed = 0;

  bool in_nec(node_index url) const { return url < membership.size() && membership[url] != none; }
};

namespace detail {

struct WeightedGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // no self entries
  std::vector<double> self;                                       // internal weight per node

  std::size_t size() const { return adj.size(); }
};

inline std::vector<std::uint32_t> canonical_labels(const std::vector<std::uint32_t>& raw) {
  std::vector<std::uint32_t> remap(raw.size(), UINT32_MAX);
  std::vector<std::uint32_t> out(raw.size());
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (remap[raw[i]] == UINT32_MAX) remap[raw[i]] = next++;
    out[i] = remap[raw[i]];
  }
  return out;
}

// Fisher-Yates driven directly by mt19937_64 output so the order is the
// same on every standard library.
inline std::vector<std::uint32_t> seeded_order(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

// Local-moving phase. Returns true when any node changed community.
inline bool local_moves(const WeightedGraph& g, double resolution, double m2, std::mt19937_64& rng,
                        std::vector<std::uint32_t>& comm) {
  const std::size_t n = g.size();
  std::vector<double> k(n, 0.0), tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : g.adj[i]) k[i] += w;
    k[i] += 2.0 * g.self[i];
    comm[i] = static_cast<std::uint32_t>(i);
    tot[i] = k[i];
  }
  const auto order = seeded_order(n, rng);
  std::vector<double> link(n, 0.0);
  std::vector<std::uint32_t> touched;
  bool any = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (std::uint32_t i : order) {
      if (k[i] == 0.0) continue;
      const std::uint32_t own = comm[i];
      for (const auto& [j, w] : g.adj[i]) {
        const std::uint32_t c = comm[j];
        if (link[c] == 0.0) touched.push_back(c);
        link[c] += w;
      }
      tot[own] -= k[i];
      std::uint32_t best = own;
      double best_gain = link[own] - resolution * tot[own] * k[i] / m2;
      for (std::uint32_t c : touched) {
        const double gain = link[c] - resolution * tot[c] * k[i] / m2;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += k[i];
      comm[i] = best;
      if (best != own) moved = any = true;
      for (std::uint32_t c : touched) link[c] = 0.0;
      link[own] = 0.0;
      touched.clear();
    }
  }
  return any;
}

inline WeightedGraph aggregate(const WeightedGraph& g, const std::vector<std::uint32_t>& comm, std::size_t nc) {
  WeightedGraph out;
  out.adj.resize(nc);
  out.self.assign(nc, 0.0);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> acc(nc);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ci = comm[i];
    out.self[ci] += g.self[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (j < i) continue;
      const auto cj = comm[j];
      if (ci == cj) {
        out.self[ci] += w;
      } else {
        acc[ci].push_back({cj, w});
        acc[cj].push_back({ci, w});
      }
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    auto& list = acc[c];
    std::sort(list.begin(), list.end());
    for (const auto& [j, w] : list) {
      if (!out.adj[c].empty() && out.adj[c].back().first == j) {
        out.adj[c].back().second += w;
      } else {
        out.adj[c].push_back({j, w});
      }
    }
  }
  return out;
}

}  // namespace detail

// Newman modularity with resolution, unit edge weights.
inline double modularity(const ValidatedProjection& projection, const std::vector<std::uint32_t>& community,
                         double resolution = 1.0) {
  const double m = static_cast<double>(projection.edges.size());
  if (m == 0.0) return 0.0;
  std::vector<double> internal(projection.n_nodes, 0.0), tot(projection.n_nodes, 0.0);
  for (const auto& e : projection.edges) {
    tot[community[e.a]] += 1.0;
    tot[community[e.b]] += 1.0;
    if (community[e.a] == community[e.b]) internal[community[e.a]] += 1.0;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < projection.n_nodes; ++c)
    q += internal[c] / m - resolution * (tot[c] / (2.0 * m)) * (tot[c] / (2.0 * m));
  return q;
}

// Louvain-style greedy modularity maximization. Node visiting order at every
// level is a permutation drawn from `seed`.
inline RawPartition detect_communities(const ValidatedProjection& projection, double resolution = 1.0,
                                       std::uint64_t seed = 0) {
  if (!(resolution > 0.0)) throw invalid_argument("resolution must be positive");
  const std::size_t n = projection.n_nodes;
  RawPartition out;
  out.seed = seed;
  out.community.resize(n);
  std::iota(out.community.begin(), out.community.end(), 0u);
  if (projection.edges.empty()) return out;

  detail::WeightedGraph g;
  g.adj.resize(n);
  g.self.assign(n, 0.0);
  for (const auto& e : projection.edges) {
    if (e.a >= n || e.b >= n || e.a == e.b) throw invalid_argument("malformed projection edge");
    g.adj[e.a].push_back({e.b, 1.0});
    g.adj[e.b].push_back({e.a, 1.0});
  }
  for (auto& list : g.adj) std::sort(list.begin(), list.end());
  const double m2 = 2.0 * static_cast<double>(projection.edges.size());

  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> membership(n);
  std::iota(membership.begin(), membership.end(), 0u);
  for (;;) {
    std::vector<std::uint32_t> comm(g.size());
    if (!detail::local_moves(g, resolution, m2, rng, comm)) break;
    comm = detail::canonical_labels(comm);
    const std::size_t nc = *std::max_element(comm.begin(), comm.end()) + 1;
    for (auto& c : membership) c = comm[c];
    if (nc == g.size()) break;
    g = detail::aggregate(g, comm, nc);
  }
  out.community = detail::canonical_labels(membership);
  out.modularity = modularity(projection, out.community, resolution);
  return out;
}

// Communities with at least `min_size` URLs become NECs, ordered by size
// descending then smallest URL index; ids follow that order.
inline NecPartition extract_necs(const RawPartition& raw, std::size_t min_size = 2) {
  if (min_size < 2) throw invalid_argument("min_size must be at least 2");
  const std::size_t n = raw.community.size();
  std::size_t nc = 0;
  for (auto c : raw.community) nc = std::max<std::size_t>(nc, c + 1);
  std::vector<std::vector<node_index>> members(nc);
  for (node_index u = 0; u < n; ++u) members[raw.community[u]].push_back(u);

  NecPartition out;
  out.modularity = raw.modularity;
  out.seed = raw.seed;
  out.membership.assign(n, NecPartition::none);
  for (auto& m : members)
    if (m.size() >= min_size) out.necs.push_back({0, std::move(m)});
  std::sort(out.necs.begin(), out.necs.end(), [](const Nec& l, const Nec& r) {
    if (l.size() != r.size()) return l.size() > r.size();
    return l.urls.front() < r.urls.front();
  });
  for (std::uint32_t id = 0; id < out.necs.size(); ++id) {
    out.necs[id].id = id;
    for (node_index u : out.necs[id].urls) out.membership[u] = static_cast<std::int32_t>(id);
  }
  return out;
}

// Stable text form: header lines, then "<id>\t<size>\t<url,url,...>".
inline std::string serialize(const NecPartition& partition) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", partition.modularity);
  std::string out = "modularity\t" + std::string(buf) + "\nseed\t" + std::to_string(partition.seed) + "\n";
  for (const auto& nec : partition.necs) {
    out += std::to_string(nec.id) + '\t' + std::to_string(nec.size()) + '\t';
    for (std::size_t k = 0; k < nec.urls.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(nec.urls[k]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace tropic
