#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "tropic/bipartite.hpp"
#include "tropic/errors.hpp"

namespace tropic {

enum class SolverMethod { fixed_point, newton };

struct SolverConfig {
  double tolerance = 1e-8;  // on the max relative degree residual
  std::size_t max_iterations = 10000;
  SolverMethod method = SolverMethod::fixed_point;

  void validate() const {
    if (!(tolerance > 0)) throw invalid_argument("solver tolerance must be positive");
    if (max_iterations < 1) throw invalid_argument("solver max_iterations must be at least 1");
  }
};

// Users whose probability rows are identical (one per degree class).
struct UserGroup {
  node_index representative = 0;
  std::uint32_t count = 0;
};

// Fitted Bipartite Configuration Model.
//
// Degenerate nodes (degree 0, or connected to every remaining node of the
// other layer) are peeled off before solving. Each peeled node carries a
// fitness of exactly 0 or +inf and a peel rank; the probability between a
// peeled node and anything still free at the time it was peeled is fixed
// by the earlier-peeled endpoint. Free nodes carry rank `free_rank`.
class BicmModel {
public:
  static constexpr std::uint32_t free_rank = std::numeric_limits<std::uint32_t>::max();

  std::size_t n_users() const noexcept { return x_.size(); }
  std::size_t n_urls() const noexcept { return y_.size(); }
  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<std::uint32_t>& user_rank() const noexcept { return user_rank_; }
  const std::vector<std::uint32_t>& url_rank() const noexcept { return url_rank_; }
  const std::vector<UserGroup>& user_groups() const noexcept { return groups_; }
  const std::vector<std::uint32_t>& user_group() const noexcept { return user_group_; }

  double tolerance_achieved() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

  // Unchecked p_ia.
  double p(node_index i, node_index a) const noexcept {
    const auto ru = user_rank_[i];
    const auto ra = url_rank_[a];
    if (ru < ra) return x_[i] == 0.0 ? 0.0 : 1.0;
    if (ra < ru) return y_[a] == 0.0 ? 0.0 : 1.0;
    const double xy = x_[i] * y_[a];
    return xy / (1.0 + xy);
  }

  void check(Layer layer, node_index i) const {
    const auto n = layer == Layer::users ? n_users() : n_urls();
    if (i >= n) throw index_out_of_range(i, n);
  }

private:
  friend BicmModel fit_bicm(const BipartiteGraph&, const SolverConfig&);

  std::vector<double> x_, y_;
  std::vector<std::uint32_t> user_rank_, url_rank_;
  std::vector<UserGroup> groups_;
  std::vector<std::uint32_t> user_group_;
  double residual_ = 0.0;
  std::size_t iterations_ = 0;
};

inline double link_probability(const BicmModel& model, node_index user, node_index url) {
  model.check(Layer::users, user);
  model.check(Layer::urls, url);
  return model.p(user, url);
}

inline double expected_degree(const BicmModel& model, Layer layer, node_index node) {
  model.check(layer, node);
  double s = 0.0;
  if (layer == Layer::users) {
    for (node_index a = 0; a < model.n_urls(); ++a) s += model.p(node, a);
  } else {
    for (node_index i = 0; i < model.n_users(); ++i) s += model.p(i, node);
  }
  return s;
}

// Max over all nodes of |expected - observed| / max(observed, 1).
inline double max_relative_residual(const BicmModel& model, const BipartiteGraph& graph) {
  double worst = 0.0;
  std::vector<double> url_sum(model.n_urls(), 0.0);
  for (node_index i = 0; i < model.n_users(); ++i) {
    double s = 0.0;
    for (node_index a = 0; a < model.n_urls(); ++a) {
      const double p = model.p(i, a);
      s += p;
      url_sum[a] += p;
    }
    const double k = static_cast<double>(graph.user_degrees()[i]);
    worst = std::max(worst, std::abs(s - k) / std::max(k, 1.0));
  }
  for (node_index a = 0; a < model.n_urls(); ++a) {
    const double d = static_cast<double>(graph.url_degrees()[a]);
    worst = std::max(worst, std::abs(url_sum[a] - d) / std::max(d, 1.0));
  }
  return worst;
}

namespace detail {

// Class-level reduced system over the free (non-peeled) degree classes.
struct ReducedSystem {
  std::vector<double> user_target, url_target;  // residual degrees
  std::vector<double> user_weight, url_weight;  // class sizes
  std::vector<double> user_scale, url_scale;    // max(original degree, 1)

  std::size_t nu() const { return user_target.size(); }
  std::size_t na() const { return url_target.size(); }

  // Fills expected class degrees for log-fitnesses (theta, phi).
  void expected(const std::vector<double>& theta, const std::vector<double>& phi, std::vector<double>& eu,
                std::vector<double>& ea) const {
    eu.assign(nu(), 0.0);
    ea.assign(na(), 0.0);
    for (std::size_t c = 0; c < nu(); ++c) {
      for (std::size_t d = 0; d < na(); ++d) {
        const double p = 1.0 / (1.0 + std::exp(-(theta[c] + phi[d])));
        eu[c] += url_weight[d] * p;
        ea[d] += user_weight[c] * p;
      }
    }
  }

  double residual(const std::vector<double>& theta, const std::vector<double>& phi) const {
    std::vector<double> eu, ea;
    expected(theta, phi, eu, ea);
    double worst = 0.0;
    for (std::size_t c = 0; c < nu(); ++c)
      worst = std::max(worst, std::abs(eu[c] - user_target[c]) / user_scale[c]);
    for (std::size_t d = 0; d < na(); ++d)
      worst = std::max(worst, std::abs(ea[d] - url_target[d]) / url_scale[d]);
    return worst;
  }
};

// One damped Gauss-Seidel sweep of x <- r / sum_d n_d y_d / (1 + x y_d),
// y <- s / sum_c m_c x_c / (1 + x_c y), carried out in log space.
inline void fixed_point_sweep(const ReducedSystem& sys, std::vector<double>& theta, std::vector<double>& phi,
                              double damping) {
  for (std::size_t c = 0; c < sys.nu(); ++c) {
    const double x = std::exp(theta[c]);
    double denom = 0.0;
    for (std::size_t d = 0; d < sys.na(); ++d) {
      const double y = std::exp(phi[d]);
      denom += sys.url_weight[d] * y / (1.0 + x * y);
    }
    const double next = std::log(sys.user_target[c] / denom);
    theta[c] += damping * (next - theta[c]);
  }
  for (std::size_t d = 0; d < sys.na(); ++d) {
    const double y = std::exp(phi[d]);
    double denom = 0.0;
    for (std::size_t c = 0; c < sys.nu(); ++c) {
      const double x = std::exp(theta[c]);
      denom += sys.user_weight[c] * x / (1.0 + x * y);
    }
    const double next = std::log(sys.url_target[d] / denom);
    phi[d] += damping * (next - phi[d]);
  }
}

// Newton step on the log-fitness system with the last URL class pinned
// (the system is invariant under theta + c, phi - c). Backtracks until the
// residual decreases; returns false when no decrease was found.
inline bool newton_step(const ReducedSystem& sys, std::vector<double>& theta, std::vector<double>& phi,
                        double& residual) {
  const std::size_t nu = sys.nu(), na = sys.na();
  const std::size_t n = nu + na - 1;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  std::vector<double> eu(nu, 0.0), ea(na, 0.0);
  for (std::size_t c = 0; c < nu; ++c) {
    for (std::size_t d = 0; d < na; ++d) {
      const double p = 1.0 / (1.0 + std::exp(-(theta[c] + phi[d])));
      const double w = p * (1.0 - p);
      eu[c] += sys.url_weight[d] * p;
      ea[d] += sys.user_weight[c] * p;
      jac(c, c) += sys.url_weight[d] * w;
      if (d + 1 < na) {
        jac(c, nu + d) += sys.url_weight[d] * w;
        jac(nu + d, c) += sys.user_weight[c] * w;
        jac(nu + d, nu + d) += sys.user_weight[c] * w;
      }
    }
  }
  for (std::size_t c = 0; c < nu; ++c) f(c) = eu[c] - sys.user_target[c];
  for (std::size_t d = 0; d + 1 < na; ++d) f(nu + d) = ea[d] - sys.url_target[d];
  Eigen::VectorXd step = jac.partialPivLu().solve(-f);
  if (!step.allFinite()) return false;

  for (double t = 1.0; t > 1e-6; t *= 0.5) {
    auto th = theta;
    auto ph = phi;
    for (std::size_t c = 0; c < nu; ++c) th[c] += t * step(c);
    for (std::size_t d = 0; d + 1 < na; ++d) ph[d] += t * step(nu + d);
    const double r = sys.residual(th, ph);
    if (std::isfinite(r) && r < residual) {
      theta = std::move(th);
      phi = std::move(ph);
      residual = r;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Fits the BiCM by maximum likelihood on the degree-class reduced system.
// Throws no_convergence when max_iterations is exhausted.
inline BicmModel fit_bicm(const BipartiteGraph& graph, const SolverConfig& config = {}) {
  config.validate();
  if (graph.empty()) throw empty_input();

  const auto classes = degree_classes(graph);
  const auto& uc = classes.user_classes;
  const auto& ac = classes.url_classes;

  // Peel degenerate classes; ranks give the order of peeling.
  std::vector<double> ures(uc.size()), ares(ac.size());
  std::vector<std::uint32_t> urank(uc.size(), BicmModel::free_rank), arank(ac.size(), BicmModel::free_rank);
  std::vector<bool> ufull(uc.size(), false), afull(ac.size(), false);
  for (std::size_t c = 0; c < uc.size(); ++c) ures[c] = static_cast<double>(uc[c].degree);
  for (std::size_t d = 0; d < ac.size(); ++d) ares[d] = static_cast<double>(ac[d].degree);
  double free_users = static_cast<double>(graph.n_users());
  double free_urls = static_cast<double>(graph.n_urls());
  std::uint32_t step = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t c = 0; c < uc.size(); ++c) {
      if (urank[c] != BicmModel::free_rank) continue;
      const double m = static_cast<double>(uc[c].members.size());
      if (ures[c] == 0.0 || free_urls == 0.0) {
        urank[c] = step++;
        free_users -= m;
        changed = true;
      } else if (ures[c] == free_urls) {
        urank[c] = step++;
        ufull[c] = true;
        free_users -= m;
        for (std::size_t d = 0; d < ac.size(); ++d)
          if (arank[d] == BicmModel::free_rank) ares[d] -= m;
        changed = true;
      }
    }
    for (std::size_t d = 0; d < ac.size(); ++d) {
      if (arank[d] != BicmModel::free_rank) continue;
      const double n = static_cast<double>(ac[d].members.size());
      if (ares[d] == 0.0 || free_users == 0.0) {
        arank[d] = step++;
        free_urls -= n;
        changed = true;
      } else if (ares[d] == free_users) {
        arank[d] = step++;
        afull[d] = true;
        free_urls -= n;
        for (std::size_t c = 0; c < uc.size(); ++c)
          if (urank[c] == BicmModel::free_rank) ures[c] -= n;
        changed = true;
      }
    }
  }

  detail::ReducedSystem sys;
  std::vector<std::size_t> free_uc, free_ac;
  for (std::size_t c = 0; c < uc.size(); ++c) {
    if (urank[c] != BicmModel::free_rank) continue;
    free_uc.push_back(c);
    sys.user_target.push_back(ures[c]);
    sys.user_weight.push_back(static_cast<double>(uc[c].members.size()));
    sys.user_scale.push_back(std::max(1.0, static_cast<double>(uc[c].degree)));
  }
  for (std::size_t d = 0; d < ac.size(); ++d) {
    if (arank[d] != BicmModel::free_rank) continue;
    free_ac.push_back(d);
    sys.url_target.push_back(ares[d]);
    sys.url_weight.push_back(static_cast<double>(ac[d].members.size()));
    sys.url_scale.push_back(std::max(1.0, static_cast<double>(ac[d].degree)));
  }

  std::vector<double> theta(sys.nu()), phi(sys.na());
  std::size_t iterations = 0;
  double residual = 0.0;
  if (sys.nu() > 0 && sys.na() > 0) {
    double edges = 0.0;
    for (std::size_t c = 0; c < sys.nu(); ++c) edges += sys.user_target[c] * sys.user_weight[c];
    const double root = std::sqrt(edges);
    for (std::size_t c = 0; c < sys.nu(); ++c) theta[c] = std::log(sys.user_target[c] / root);
    for (std::size_t d = 0; d < sys.na(); ++d) phi[d] = std::log(sys.url_target[d] / root);

    residual = sys.residual(theta, phi);
    double damping = 1.0;
    const std::size_t warmup = config.method == SolverMethod::newton ? 20 : config.max_iterations;
    while (residual > config.tolerance && iterations < config.max_iterations) {
      if (iterations >= warmup) {
        if (!detail::newton_step(sys, theta, phi, residual)) break;
        ++iterations;
        continue;
      }
      auto th = theta;
      auto ph = phi;
      detail::fixed_point_sweep(sys, th, ph, damping);
      const double r = sys.residual(th, ph);
      ++iterations;
      if (!std::isfinite(r) || r > residual * 1.5) {
        damping = std::max(0.05, damping * 0.5);
        continue;
      }
      theta = std::move(th);
      phi = std::move(ph);
      residual = r;
    }
    if (!(residual <= config.tolerance)) throw no_convergence(iterations, residual);
    // The sweep stops just inside the tolerance; a few Newton steps tighten
    // the fitnesses well below it when the reduced system is small enough.
    if (sys.nu() + sys.na() <= 2000)
      for (int k = 0; k < 3 && residual > config.tolerance * 1e-4; ++k)
        if (!detail::newton_step(sys, theta, phi, residual)) break;

    // Canonical gauge: equal node-weighted mean log-fitness on both layers.
    double mean_theta = 0.0, mean_phi = 0.0, wu = 0.0, wa = 0.0;
    for (std::size_t c = 0; c < sys.nu(); ++c) {
      mean_theta += sys.user_weight[c] * theta[c];
      wu += sys.user_weight[c];
    }
    for (std::size_t d = 0; d < sys.na(); ++d) {
      mean_phi += sys.url_weight[d] * phi[d];
      wa += sys.url_weight[d];
    }
    const double shift = (mean_phi / wa - mean_theta / wu) / 2.0;
    for (auto& t : theta) t += shift;
    for (auto& p : phi) p -= shift;
  }

  BicmModel model;
  const double inf = std::numeric_limits<double>::infinity();
  model.x_.assign(graph.n_users(), 0.0);
  model.y_.assign(graph.n_urls(), 0.0);
  model.user_rank_.assign(graph.n_users(), BicmModel::free_rank);
  model.url_rank_.assign(graph.n_urls(), BicmModel::free_rank);
  model.user_group_.assign(graph.n_users(), 0);
  std::size_t fi = 0;
  for (std::size_t c = 0; c < uc.size(); ++c) {
    double value;
    if (urank[c] == BicmModel::free_rank) {
      value = std::exp(theta[fi++]);
    } else {
      value = ufull[c] ? inf : 0.0;
    }
    model.groups_.push_back({uc[c].members.front(), static_cast<std::uint32_t>(uc[c].members.size())});
    for (node_index i : uc[c].members) {
      model.x_[i] = value;
      model.user_rank_[i] = urank[c];
      model.user_group_[i] = static_cast<std::uint32_t>(c);
    }
  }
  std::size_t fa = 0;
  for (std::size_t d = 0; d < ac.size(); ++d) {
    double value;
    if (arank[d] == BicmModel::free_rank) {
      value = std::exp(phi[fa++]);
    } else {
      value = afull[d] ? inf : 0.0;
    }
    for (node_index a : ac[d].members) {
      model.y_[a] = value;
      model.url_rank_[a] = arank[d];
    }
  }
  model.iterations_ = iterations;
  model.residual_ = residual;
  return model;
}

}  // namespace tropic
