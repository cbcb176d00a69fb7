#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bayesroute/analysis.hpp"
#include "bayesroute/belief.hpp"
#include "bayesroute/costs.hpp"
#include "bayesroute/dynamics.hpp"
#include "bayesroute/equilibrium.hpp"
#include "bayesroute/graph.hpp"
#include "bayesroute/scenario.hpp"

namespace fixtures {

using namespace bayesroute;

inline constexpr StateIndex kE1 = 0, kE2 = 1, kE3 = 2, kNone = 3;

inline Scenario three_edge() { return builtin_scenario("three-edge"); }

inline Belief belief(std::vector<double> p) { return Belief(std::move(p)); }

inline Network wheatstone() {
  // s-u (a), s-v (b), u-v (c), u-t (d), v-t (e)
  return Network({"a", "b", "c", "d", "e"}, {{"a", "d"}, {"b", "e"}, {"a", "c", "e"}});
}

// Every edge gets the same function in every state, one state.
inline CostModel single_state_model(const std::vector<CostFunction>& per_edge) {
  std::vector<std::vector<CostFunction>> table;
  for (const auto& f : per_edge) table.push_back({f});
  const auto n = static_cast<Eigen::Index>(per_edge.size());
  return CostModel(StateSpace({"only"}, "only"), table, Eigen::MatrixXd::Identity(n, n));
}

inline Scenario make_scenario(std::string id, Network net, CostModel model, double demand,
                              Belief prior, bool full_support = true) {
  return Scenario{std::move(id), "", "", std::move(net), std::move(model), demand,
                  std::move(prior), full_support, 1e-9, SolverOptions{}, ConvergenceRule{}};
}

inline Belief random_belief(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& x : p) sum += (x = ex(rng));
  for (auto& x : p) x /= sum;
  // Renormalise once more so the sum is within Belief's tolerance.
  sum = 0.0;
  for (double x : p) sum += x;
  for (auto& x : p) x /= sum;
  return Belief(p);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fixtures
