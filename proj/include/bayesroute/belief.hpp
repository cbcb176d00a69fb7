#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "bayesroute/costs.hpp"
#include "bayesroute/graph.hpp"

namespace bayesroute {

// Loads and realized costs of one stage as seen by the information system.
// costs[i] belongs to edge used[i]; unused edges are never observed.
struct Observation {
  std::vector<EdgeIndex> used;
  EdgeLoad loads;
  std::vector<double> costs;
};

// Cholesky factors of covariance submatrices, keyed by the used-edge set.
// Not synchronised: keep one per trajectory or per thread.
class FactorCache {
 public:
  struct Factor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
  };

  const Factor& get(const Eigen::MatrixXd& sigma, const std::vector<EdgeIndex>& used);
  std::size_t size() const { return factors_.size(); }

 private:
  std::map<std::vector<EdgeIndex>, Factor> factors_;
};

// Log of the Gaussian density of obs.costs under state s, with mean
// l_e^s(w_e) over the used edges and the matching submatrix of Sigma.
double log_gaussian_density(const CostModel& model, StateIndex s, const Observation& obs,
                            FactorCache* cache = nullptr);

std::vector<double> log_likelihood_table(const CostModel& model, const Observation& obs,
                                         FactorCache* cache = nullptr);

// Normalises prior(s) * exp(log_lik(s)) in log space. States with zero prior
// stay at zero.
Belief posterior_from_log_likelihood(const Belief& prior, const std::vector<double>& log_lik);

Belief bayes_update(const Belief& theta, const CostModel& model, const Observation& obs,
                    FactorCache* cache = nullptr);

// Posterior after a whole history, from the summed per-stage log-likelihoods.
Belief replay_posterior(const Belief& theta0, const CostModel& model,
                        const std::vector<Observation>& history);

// log(sum(exp(x))) with the max subtracted first; -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& x);

}  // namespace bayesroute
