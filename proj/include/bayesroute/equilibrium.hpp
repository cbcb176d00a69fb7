#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bayesroute/costs.hpp"
#include "bayesroute/graph.hpp"

namespace bayesroute {

struct SolverOptions {
  // Relative duality gap (and relative Wardrop spread) at which iteration stops.
  double tol = 1e-8;
  std::size_t max_iterations = 100000;
  // Start from all demand on this route instead of the free-flow cheapest one.
  std::optional<RouteIndex> initial_route;
  // Keep the Beckmann potential of every iterate in the result.
  bool record_potential = false;
  // Finish with Newton iterations on the face spanned by the used routes.
  bool polish = true;
};

struct EquilibriumResult {
  RouteFlow q_star;  // one representative; only Delta * q_star is unique
  EdgeLoad w_star;
  double gap = 0.0;  // relative duality gap at w_star
  std::vector<double> route_costs;
  double potential = 0.0;
  std::size_t iterations = 0;
  std::vector<double> potential_trace;
};

class A1Error : public ConfigError {
 public:
  explicit A1Error(A1Report report);
  const A1Report& report() const { return report_; }

 private:
  A1Report report_;
};

class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(EquilibriumResult best);
  const EquilibriumResult& best() const { return best_; }

 private:
  EquilibriumResult best_;
};

// Wardrop equilibrium for the belief-averaged costs, found by minimising the
// Beckmann potential with away-step Frank-Wolfe over route flows.
EquilibriumResult solve_wardrop(const Network& network, const CostModel& model,
                                const Belief& theta, double demand,
                                const SolverOptions& options = {});

EquilibriumResult complete_info_equilibrium(const Network& network, const CostModel& model,
                                            StateIndex s, double demand,
                                            const SolverOptions& options = {});

struct EquilibriumCertificate {
  bool passed = false;
  // max over used routes of (expected cost - cheapest expected cost)
  double worst_violation = 0.0;
  std::optional<RouteIndex> worst_route;
  std::vector<double> route_costs;
};

// Re-evaluates route costs at result.w_star and checks the Wardrop condition
// for every route carrying more than flow_tol.
EquilibriumCertificate verify_equilibrium(const Network& network, const CostModel& model,
                                          const Belief& theta, const EquilibriumResult& result,
                                          double tol, double flow_tol = 1e-9);

}  // namespace bayesroute
