#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "tropic/errors.hpp"

namespace tropic {

using node_index = std::uint32_t;

enum class Layer { users, urls };

// Binary user x URL biadjacency. Adjacency is stored user-side only; share
// multiplicities ride along in a parallel structure for the scoring stage.
class BipartiteGraph {
public:
  BipartiteGraph() = default;

  // Builds from per-user URL lists. Lists are sorted and deduplicated; an
  // empty `multiplicity` means every share counts once. Labels default to
  // "u<i>" and "a<j>".
  BipartiteGraph(std::size_t n_urls, std::vector<std::vector<node_index>> adjacency,
                 std::vector<std::vector<std::uint32_t>> multiplicity = {},
                 std::vector<std::string> user_labels = {}, std::vector<std::string> url_labels = {})
      : n_urls_(n_urls), adjacency_(std::move(adjacency)), multiplicity_(std::move(multiplicity)),
        user_labels_(std::move(user_labels)), url_labels_(std::move(url_labels)) {
    if (multiplicity_.empty()) {
      multiplicity_.resize(adjacency_.size());
      for (std::size_t i = 0; i < adjacency_.size(); ++i)
        multiplicity_[i].assign(adjacency_[i].size(), 1);
    }
    if (multiplicity_.size() != adjacency_.size())
      throw invalid_argument("multiplicity shape does not match adjacency");
    normalize();
    if (user_labels_.empty())
      for (std::size_t i = 0; i < n_users(); ++i) user_labels_.push_back("u" + std::to_string(i));
    if (url_labels_.empty())
      for (std::size_t j = 0; j < n_urls_; ++j) url_labels_.push_back("a" + std::to_string(j));
    if (user_labels_.size() != n_users() || url_labels_.size() != n_urls_)
      throw invalid_argument("label count does not match node count");
  }

  std::size_t n_users() const noexcept { return adjacency_.size(); }
  std::size_t n_urls() const noexcept { return n_urls_; }
  std::size_t edge_count() const noexcept { return edge_count_; }
  bool empty() const noexcept { return edge_count_ == 0; }

  const std::vector<std::vector<node_index>>& adjacency() const noexcept { return adjacency_; }
  const std::vector<std::uint32_t>& multiplicities(node_index user) const {
    check_user(user);
    return multiplicity_[user];
  }
  const std::vector<std::size_t>& user_degrees() const noexcept { return user_degrees_; }
  const std::vector<std::size_t>& url_degrees() const noexcept { return url_degrees_; }
  const std::vector<std::string>& user_labels() const noexcept { return user_labels_; }
  const std::vector<std::string>& url_labels() const noexcept { return url_labels_; }

  std::size_t degree(Layer layer, node_index i) const {
    if (layer == Layer::users) {
      check_user(i);
      return user_degrees_[i];
    }
    if (i >= n_urls_) throw index_out_of_range(i, n_urls_);
    return url_degrees_[i];
  }

  // URL-side adjacency, derived on demand.
  std::vector<std::vector<node_index>> url_adjacency() const {
    std::vector<std::vector<node_index>> out(n_urls_);
    for (std::size_t j = 0; j < n_urls_; ++j) out[j].reserve(url_degrees_[j]);
    for (node_index i = 0; i < n_users(); ++i)
      for (node_index a : adjacency_[i]) out[a].push_back(i);
    return out;
  }

  void check_user(node_index user) const {
    if (user >= n_users()) throw index_out_of_range(user, n_users());
  }

private:
  void normalize() {
    user_degrees_.assign(n_users(), 0);
    url_degrees_.assign(n_urls_, 0);
    edge_count_ = 0;
    for (std::size_t i = 0; i < adjacency_.size(); ++i) {
      auto& adj = adjacency_[i];
      auto& mult = multiplicity_[i];
      if (mult.size() != adj.size()) throw invalid_argument("multiplicity shape does not match adjacency");
      std::vector<std::size_t> order(adj.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto l, auto r) { return adj[l] < adj[r]; });
      std::vector<node_index> a2;
      std::vector<std::uint32_t> m2;
      for (auto o : order) {
        if (adj[o] >= n_urls_) throw index_out_of_range(adj[o], n_urls_);
        if (!a2.empty() && a2.back() == adj[o]) {
          m2.back() += mult[o];
        } else {
          a2.push_back(adj[o]);
          m2.push_back(mult[o]);
        }
      }
      adj = std::move(a2);
      mult = std::move(m2);
      user_degrees_[i] = adj.size();
      for (node_index a : adj) ++url_degrees_[a];
      edge_count_ += adj.size();
    }
  }

  std::size_t n_urls_ = 0;
  std::size_t edge_count_ = 0;
  std::vector<std::vector<node_index>> adjacency_;
  std::vector<std::vector<std::uint32_t>> multiplicity_;
  std::vector<std::size_t> user_degrees_;
  std::vector<std::size_t> url_degrees_;
  std::vector<std::string> user_labels_;
  std::vector<std::string> url_labels_;
};

struct DegreeClass {
  std::size_t degree = 0;
  std::vector<node_index> members;
};

// Equal-degree groups per layer, ordered by ascending degree.
struct DegreeClasses {
  std::vector<DegreeClass> user_classes;
  std::vector<DegreeClass> url_classes;
};

namespace detail {

inline std::vector<DegreeClass> group_by_degree(const std::vector<std::size_t>& degrees) {
  std::map<std::size_t, std::vector<node_index>> groups;
  for (node_index i = 0; i < degrees.size(); ++i) groups[degrees[i]].push_back(i);
  std::vector<DegreeClass> out;
  out.reserve(groups.size());
  for (auto& [deg, members] : groups) out.push_back({deg, std::move(members)});
  return out;
}

}  // namespace detail

inline DegreeClasses degree_classes(const BipartiteGraph& graph) {
  return {detail::group_by_degree(graph.user_degrees()), detail::group_by_degree(graph.url_degrees())};
}

inline const std::vector<node_index>& neighbors(const BipartiteGraph& graph, node_index user) {
  graph.check_user(user);
  return graph.adjacency()[user];
}

}  // namespace tropic
