#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tropic/bipartite.hpp"
#include "tropic/communities.hpp"
#include "tropic/ingestion.hpp"

namespace testing_support {

using tropic::node_index;

inline tropic::EdgeList edges(std::initializer_list<std::pair<std::string, std::string>> rows) {
  tropic::EdgeList out;
  for (const auto& [url, user] : rows) out.add({url, user});
  return out;
}

inline tropic::EdgeList parse_edges(const std::string& text, tropic::EdgeListOptions opts = {}) {
  std::istringstream in(text);
  return tropic::parse_edge_list(in, opts);
}

inline tropic::BaseKnowledge parse_base(const std::string& text) {
  std::istringstream in(text);
  return tropic::parse_base_knowledge(in);
}

// users [2,2,1], urls [2,2,1]
inline tropic::BipartiteGraph fixture_graph() { return tropic::BipartiteGraph(3, {{0, 1}, {0, 2}, {1}}); }

inline node_index url_of(const tropic::BipartiteGraph& g, const std::string& label) {
  const auto& l = g.url_labels();
  return static_cast<node_index>(std::find(l.begin(), l.end(), label) - l.begin());
}

inline node_index user_of(const tropic::BipartiteGraph& g, const std::string& label) {
  const auto& l = g.user_labels();
  return static_cast<node_index>(std::find(l.begin(), l.end(), label) - l.begin());
}

// NEC partition over `n_urls` with the given communities, ids in list order.
inline tropic::NecPartition necs_of(std::size_t n_urls, const std::vector<std::vector<node_index>>& groups) {
  tropic::NecPartition p;
  p.membership.assign(n_urls, tropic::NecPartition::none);
  for (std::uint32_t id = 0; id < groups.size(); ++id) {
    tropic::Nec nec{id, groups[id]};
    std::sort(nec.urls.begin(), nec.urls.end());
    for (auto a : nec.urls) p.membership[a] = static_cast<std::int32_t>(id);
    p.necs.push_back(std::move(nec));
  }
  return p;
}

inline tropic::NecPartition necs_by_label(const tropic::BipartiteGraph& g,
                                          const std::vector<std::vector<std::string>>& groups) {
  std::vector<std::vector<node_index>> idx;
  for (const auto& group : groups) {
    idx.emplace_back();
    for (const auto& label : group) idx.back().push_back(url_of(g, label));
  }
  return necs_of(g.n_urls(), idx);
}

// Chung-Lu style graph with Pareto node weights on both layers.
inline tropic::BipartiteGraph heavy_tailed_graph(std::size_t n_users, std::size_t n_urls, double density,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<double> w(n_users), v(n_urls);
  double sw = 0, sv = 0;
  for (auto& x : w) sw += x = std::pow(1.0 - u01(), -1.0 / 1.5);
  for (auto& x : v) sv += x = std::pow(1.0 - u01(), -1.0 / 2.0);
  const double scale = density * static_cast<double>(n_users * n_urls) / (sw * sv);
  std::vector<std::vector<node_index>> adj(n_users);
  for (std::size_t i = 0; i < n_users; ++i)
    for (std::size_t a = 0; a < n_urls; ++a)
      if (u01() < std::min(1.0, scale * w[i] * v[a])) adj[i].push_back(static_cast<node_index>(a));
  return tropic::BipartiteGraph(n_urls, std::move(adj));
}

}  // namespace testing_support
