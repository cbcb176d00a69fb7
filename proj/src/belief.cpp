#include "bayesroute/belief.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

namespace bayesroute {

namespace {

FactorCache::Factor factorize(const Eigen::MatrixXd& sigma, const std::vector<EdgeIndex>& used) {
  const auto m = static_cast<Eigen::Index>(used.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = sigma(used[i], used[j]);
  }
  FactorCache::Factor f;
  f.llt.compute(sub);
  if (f.llt.info() != Eigen::Success)
    throw ConfigError("covariance submatrix of the used edges is singular");
  const auto& l = f.llt.matrixLLT();
  for (Eigen::Index i = 0; i < m; ++i) f.log_det += 2.0 * std::log(l(i, i));
  return f;
}

void check_observation(const CostModel& model, const Observation& obs) {
  if (obs.used.empty()) throw std::invalid_argument("observation has no used edges");
  if (obs.costs.size() != obs.used.size())
    throw std::invalid_argument("observation costs are not indexed by the used edges");
  if (obs.loads.loads.size() != model.num_edges())
    throw std::invalid_argument("observation loads do not cover every edge");
}

double log_density_with(const CostModel& model, StateIndex s, const Observation& obs,
                        const FactorCache::Factor& factor) {
  const auto m = static_cast<Eigen::Index>(obs.used.size());
  Eigen::VectorXd residual(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    EdgeIndex e = obs.used[i];
    residual[i] = obs.costs[i] - model.edge_cost(e, s, obs.loads.loads[e]);
  }
  // L z = r gives r' Sigma^-1 r = |z|^2.
  Eigen::VectorXd z = factor.llt.matrixL().solve(residual);
  return -0.5 * z.squaredNorm() - 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi) -
         0.5 * factor.log_det;
}

}  // namespace

const FactorCache::Factor& FactorCache::get(const Eigen::MatrixXd& sigma,
                                            const std::vector<EdgeIndex>& used) {
  auto it = factors_.find(used);
  if (it == factors_.end()) it = factors_.emplace(used, factorize(sigma, used)).first;
  return it->second;
}

double log_gaussian_density(const CostModel& model, StateIndex s, const Observation& obs,
                            FactorCache* cache) {
  check_observation(model, obs);
  if (cache) return log_density_with(model, s, obs, cache->get(model.sigma(), obs.used));
  return log_density_with(model, s, obs, factorize(model.sigma(), obs.used));
}

std::vector<double> log_likelihood_table(const CostModel& model, const Observation& obs,
                                         FactorCache* cache) {
  check_observation(model, obs);
  FactorCache::Factor local;
  const FactorCache::Factor* factor = nullptr;
  if (cache) {
    factor = &cache->get(model.sigma(), obs.used);
  } else {
    local = factorize(model.sigma(), obs.used);
    factor = &local;
  }
  std::vector<double> table(model.states().size());
  for (StateIndex s = 0; s < table.size(); ++s) table[s] = log_density_with(model, s, obs, *factor);
  return table;
}

double log_sum_exp(const std::vector<double>& x) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (x.empty()) return neg_inf;
  const double top = *std::max_element(x.begin(), x.end());
  if (top == neg_inf) return neg_inf;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - top);
  return top + std::log(sum);
}

Belief posterior_from_log_likelihood(const Belief& prior, const std::vector<double>& log_lik) {
  if (log_lik.size() != prior.size())
    throw std::invalid_argument("likelihood table size does not match the belief");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_joint(prior.size(), neg_inf);
  for (StateIndex s = 0; s < prior.size(); ++s) {
    if (prior[s] > 0.0) log_joint[s] = std::log(prior[s]) + log_lik[s];
  }
  const double norm = log_sum_exp(log_joint);
  // Finite log-likelihoods and a nonempty prior support cannot lose all mass.
  assert(std::isfinite(norm));
  if (!std::isfinite(norm)) throw std::runtime_error("posterior mass vanished");

  std::vector<double> post(prior.size(), 0.0);
  double total = 0.0;
  for (StateIndex s = 0; s < prior.size(); ++s) {
    post[s] = std::exp(log_joint[s] - norm);
    total += post[s];
  }
  for (double& p : post) p /= total;
  return Belief(std::move(post));
}

Belief bayes_update(const Belief& theta, const CostModel& model, const Observation& obs,
                    FactorCache* cache) {
  return posterior_from_log_likelihood(theta, log_likelihood_table(model, obs, cache));
}

Belief replay_posterior(const Belief& theta0, const CostModel& model,
                        const std::vector<Observation>& history) {
  if (history.empty()) return theta0;
  FactorCache cache;
  std::vector<double> total(model.states().size(), 0.0);
  for (const auto& obs : history) {
    auto table = log_likelihood_table(model, obs, &cache);
    for (StateIndex s = 0; s < total.size(); ++s) total[s] += table[s];
  }
  return posterior_from_log_likelihood(theta0, total);
}

}  // namespace bayesroute
