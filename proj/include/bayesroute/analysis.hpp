#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bayesroute/costs.hpp"
#include "bayesroute/equilibrium.hpp"
#include "bayesroute/graph.hpp"

namespace bayesroute {

// States whose cost differs from the true state's by more than cost_tol on
// some edge loaded above load_tol.
std::vector<StateIndex> distinguishable_states(const CostModel& model, StateIndex s_true,
                                               const EdgeLoad& w, double cost_tol = 1e-9,
                                               double load_tol = 0.0);

// Sum over edges of w_e * l_e^s(w_e).
double average_cost(const CostModel& model, StateIndex s, const EdgeLoad& w);

struct RestPointTolerances {
  double load = 1e-6;   // max-norm gap between w_bar and the equilibrium at theta_bar
  double gap = 1e-6;    // relative Wardrop gap of w_bar under theta_bar
  double mass = 1e-9;   // belief mass allowed on distinguishable states
  double cost = 1e-6;   // used-edge expected cost vs true cost
  double distinguish = 1e-9;  // cost difference that counts as distinguishable
  double used_edge_rel = 1e-9;
  SolverOptions solver;

  static RestPointTolerances uniform(double tol) {
    RestPointTolerances t;
    t.load = t.gap = t.mass = t.cost = tol;
    return t;
  }
};

enum class RestPointClause { None, Equilibrium, Distinguishable, Consistency };

const char* to_string(RestPointClause clause);

struct RestPointCheck {
  bool passed = false;
  RestPointClause failed = RestPointClause::None;  // first failing clause
  double load_discrepancy = 0.0;     // clause (i), against a fresh solve
  double equilibrium_gap = 0.0;      // clause (i), (sum w c - D min_r c_r) / sum w c at w_bar
  double distinguishable_mass = 0.0; // clause (ii)
  double consistency_error = 0.0;    // max over used edges
  std::vector<EdgeIndex> used;
  std::vector<StateIndex> distinguishable;
  EdgeLoad equilibrium_load;  // solve_wardrop at theta_bar
};

// (i) w_bar is the equilibrium at theta_bar: a fresh solve reproduces it and
// its relative gap is small, (ii) theta_bar puts no
// mass on states distinguishable at w_bar, and the used edges' expected costs
// under theta_bar match the true costs.
RestPointCheck check_rest_point(const Network& network, const CostModel& model,
                                StateIndex s_true, const Belief& theta_bar, const EdgeLoad& w_bar,
                                double demand, const RestPointTolerances& tol = {});

// Passing simplex nodes that share a used-edge set.
struct RestPointFamily {
  std::vector<EdgeIndex> used;
  std::vector<StateIndex> support;  // states with positive mass in some member
  EdgeLoad load;                    // load at the first member found
  double load_spread = 0.0;         // max-norm deviation of member loads from `load`
  std::vector<double> min_mass;     // per state, over members and refined boundary points
  std::vector<double> max_mass;
  std::size_t grid_nodes = 0;
  double average_cost = 0.0;        // under the true state
  bool complete_information = false;  // contains the point mass on the true state
  std::vector<Belief> boundary;     // refined boundary beliefs
};

struct EnumerationOptions {
  std::size_t grid_n = 100;
  RestPointTolerances tol;
  double boundary_tol = 1e-6;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Grids the belief simplex at resolution 1/grid_n, checks every node, and
// clusters the passing ones. Family boundaries between states of the same
// family are refined by bisection.
std::vector<RestPointFamily> enumerate_rest_points(const Network& network, const CostModel& model,
                                                   StateIndex s_true, double demand,
                                                   const EnumerationOptions& options = {});

struct Prop1Entry {
  EdgeLoad load;
  double cost = 0.0;
  bool holds = false;
};

struct Prop1Report {
  bool applicable = false;  // the network is series-parallel
  bool holds = true;
  double complete_info_cost = 0.0;
  EdgeLoad complete_info_load;
  std::vector<Prop1Entry> entries;
};

// Compares C(w_bar) with C(w^{s*}) for each rest-point load. Not applicable
// on networks that are not series-parallel.
Prop1Report check_prop1(const Network& network, const CostModel& model, StateIndex s_true,
                        double demand, const std::vector<EdgeLoad>& rest_loads,
                        double tol = 1e-9, const SolverOptions& solver = {});

struct ConditionWitness {
  std::optional<StateIndex> state;
  std::optional<EdgeIndex> edge;
  std::optional<RouteIndex> route;
  std::string detail;
};

struct ConditionResult {
  bool holds = false;
  ConditionWitness witness;  // a violation when !holds, supporting data otherwise
};

struct ConditionReport {
  ConditionResult fully_distinguishable;   // (1)
  ConditionResult free_flow_independent;   // (2)
  ConditionResult all_edges_utilized;      // (3)

  bool any() const {
    return fully_distinguishable.holds || free_flow_independent.holds || all_edges_utilized.holds;
  }
};

// Sufficient conditions for complete learning. Function identity is decided
// by coefficients. Condition (1) is read route-wise: every route has an edge
// whose cost function differs from the truth, so any feasible load (which
// uses a whole route) tells the state apart. Functions that differ but cross
// at the realised load are not caught by this check.
ConditionReport check_complete_learning_conditions(const Network& network, const CostModel& model,
                                                   double demand, double tol = 1e-9,
                                                   const SolverOptions& solver = {});

}  // namespace bayesroute
