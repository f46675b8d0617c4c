#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tropic/bicm.hpp"
#include "tropic/bipartite.hpp"
#include "tropic/errors.hpp"

namespace tropic {

// exact: Poisson-binomial DP; poisson: Poisson(sum q) tail; automatic: exact
// when at most `exact_user_limit` users have a non-zero co-share probability.
enum class PValueMode { automatic, exact, poisson };

inline constexpr std::size_t exact_user_limit = 1024;

struct Cooccurrence {
  node_index a = 0;  // a < b
  node_index b = 0;
  std::uint32_t count = 0;

  friend bool operator==(const Cooccurrence&, const Cooccurrence&) = default;
};

// Observed co-share counts V_ab for every URL pair with V_ab >= 1, sorted by
// (a, b).
struct CooccurrenceTable {
  std::vector<Cooccurrence> pairs;

  std::uint32_t count(node_index a, node_index b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair{a, b},
                               [](const Cooccurrence& c, const std::pair<node_index, node_index>& k) {
                                 return std::pair{c.a, c.b} < k;
                               });
    if (it == pairs.end() || it->a != a || it->b != b) return 0;
    return it->count;
  }
  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
};

inline CooccurrenceTable count_cooccurrences(const BipartiteGraph& graph) {
  const std::uint64_t n = graph.n_urls();
  std::unordered_map<std::uint64_t, std::uint32_t> counts;
  for (const auto& adj : graph.adjacency())
    for (std::size_t i = 0; i < adj.size(); ++i)
      for (std::size_t j = i + 1; j < adj.size(); ++j) ++counts[adj[i] * n + adj[j]];
  CooccurrenceTable table;
  table.pairs.reserve(counts.size());
  for (const auto& [key, v] : counts)
    table.pairs.push_back({static_cast<node_index>(key / n), static_cast<node_index>(key % n), v});
  std::sort(table.pairs.begin(), table.pairs.end(),
            [](const auto& l, const auto& r) { return std::pair{l.a, l.b} < std::pair{r.a, r.b}; });
  return table;
}

// P(V >= observed) for V a sum of independent Bernoulli(q_i), each q_i
// repeated weight_i times (weights empty = all 1). The upper tail is
// accumulated in an absorbing state, so no 1 - cdf cancellation.
inline double poisson_binomial_tail(std::span<const double> q, std::size_t observed,
                                    std::span<const std::uint32_t> weights = {}) {
  if (observed == 0) return 1.0;
  std::vector<double> dist(observed, 0.0);
  dist[0] = 1.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double qi = q[i];
    if (qi <= 0.0) continue;
    const std::uint32_t reps = weights.empty() ? 1 : weights[i];
    for (std::uint32_t r = 0; r < reps; ++r) {
      tail += dist[observed - 1] * qi;
      for (std::size_t j = observed - 1; j > 0; --j) dist[j] = dist[j] * (1.0 - qi) + dist[j - 1] * qi;
      dist[0] *= (1.0 - qi);
    }
  }
  return std::min(1.0, tail);
}

// P(X >= observed) for X ~ Poisson(lambda).
inline double poisson_tail(double lambda, std::size_t observed) {
  if (observed == 0) return 1.0;
  if (lambda <= 0.0) return 0.0;
  const double v = static_cast<double>(observed);
  if (v > lambda) {
    double term = std::exp(-lambda + v * std::log(lambda) - std::lgamma(v + 1.0));
    double sum = 0.0;
    for (double j = v; term > 0.0; j += 1.0) {
      sum += term;
      if (term < sum * 1e-17) break;
      term *= lambda / (j + 1.0);
    }
    return std::min(1.0, sum);
  }
  double term = std::exp(-lambda);
  double cdf = 0.0;
  for (std::size_t j = 0; j < observed; ++j) {
    cdf += term;
    term *= lambda / static_cast<double>(j + 1);
  }
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

namespace detail {

// q per user group for the pair (a, b), with group sizes.
inline double pair_tail(std::span<const double> q, std::span<const std::uint32_t> weights,
                        std::size_t observed, PValueMode mode) {
  if (mode == PValueMode::automatic) {
    std::size_t users = 0;
    for (std::size_t g = 0; g < q.size(); ++g)
      if (q[g] > 0.0) users += weights[g];
    mode = users <= exact_user_limit ? PValueMode::exact : PValueMode::poisson;
  }
  if (mode == PValueMode::exact) return poisson_binomial_tail(q, observed, weights);
  double lambda = 0.0;
  for (std::size_t g = 0; g < q.size(); ++g) lambda += q[g] * weights[g];
  return poisson_tail(lambda, observed);
}

}  // namespace detail

// P(V_ab >= observed) under the fitted null, V_ab = sum_i Bernoulli(p_ia p_ib).
inline double pair_pvalue(const BicmModel& model, node_index a, node_index b, std::size_t observed,
                          PValueMode mode = PValueMode::automatic) {
  model.check(Layer::urls, a);
  model.check(Layer::urls, b);
  const auto& groups = model.user_groups();
  std::vector<double> q(groups.size());
  std::vector<std::uint32_t> w(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    q[g] = model.p(groups[g].representative, a) * model.p(groups[g].representative, b);
    w[g] = groups[g].count;
  }
  return detail::pair_tail(q, w, observed, mode);
}

// Benjamini-Hochberg step-up cutoff: the largest sorted p_(k) with
// p_(k) <= k * alpha / m, or nothing when no rank qualifies.
inline std::optional<double> bh_threshold(std::span<const double> pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw invalid_argument("alpha must lie in (0, 1]");
  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  for (std::size_t k = sorted.size(); k > 0; --k)
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / m) return sorted[k - 1];
  return std::nullopt;
}

struct ValidatedEdge {
  node_index a = 0;
  node_index b = 0;
  double pvalue = 1.0;

  friend bool operator==(const ValidatedEdge&, const ValidatedEdge&) = default;
};

struct ValidatedProjection {
  std::size_t n_nodes = 0;           // URL count; node indices are URL indices
  std::vector<ValidatedEdge> edges;  // sorted by (a, b)
  std::optional<double> threshold;
  std::size_t tested_pairs = 0;
};

inline ValidatedProjection validate_projection(const BipartiteGraph& graph, const BicmModel& model, double alpha,
                                               PValueMode mode = PValueMode::automatic) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw invalid_argument("alpha must lie in (0, 1]");
  if (graph.n_users() != model.n_users() || graph.n_urls() != model.n_urls())
    throw invalid_argument("model dimensions do not match the graph");

  const auto table = count_cooccurrences(graph);
  const auto& groups = model.user_groups();
  const std::size_t ng = groups.size();
  std::vector<double> prob(ng * graph.n_urls());
  for (std::size_t g = 0; g < ng; ++g)
    for (node_index a = 0; a < graph.n_urls(); ++a) prob[g * graph.n_urls() + a] = model.p(groups[g].representative, a);
  std::vector<std::uint32_t> w(ng);
  for (std::size_t g = 0; g < ng; ++g) w[g] = groups[g].count;

  std::vector<double> pvalues(table.size());
  std::vector<double> q(ng);
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& pair = table.pairs[k];
    for (std::size_t g = 0; g < ng; ++g)
      q[g] = prob[g * graph.n_urls() + pair.a] * prob[g * graph.n_urls() + pair.b];
    pvalues[k] = detail::pair_tail(q, w, pair.count, mode);
  }

  ValidatedProjection out;
  out.n_nodes = graph.n_urls();
  out.tested_pairs = table.size();
  out.threshold = bh_threshold(pvalues, alpha);
  if (out.threshold) {
    for (std::size_t k = 0; k < table.size(); ++k)
      if (pvalues[k] <= *out.threshold) out.edges.push_back({table.pairs[k].a, table.pairs[k].b, pvalues[k]});
  }
  return out;
}

}  // namespace tropic
