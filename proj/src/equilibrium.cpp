#include "bayesroute/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>

namespace bayesroute {

A1Error::A1Error(A1Report report)
    : ConfigError("cost functions violate the A1 slope bound (" +
                  std::to_string(report.violations.size()) + " offending entries)"),
      report_(std::move(report)) {}

namespace {

std::string cap_message(const EquilibriumResult& best) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "Wardrop solver hit its iteration cap at relative gap %.3g",
                best.gap);
  return buf;
}

}  // namespace

ConvergenceError::ConvergenceError(EquilibriumResult best)
    : std::runtime_error(cap_message(best)), best_(std::move(best)) {}

namespace {

// Belief-averaged edge costs together with the iterate they are evaluated at.
class FlowState {
 public:
  FlowState(const Network& network, const CostModel& model, const Belief& theta, double demand)
      : network_(network), demand_(demand) {
    coeffs_.reserve(network.num_edges());
    affine_ = true;
    for (EdgeIndex e = 0; e < network.num_edges(); ++e) {
      coeffs_.push_back(model.mixed_coefficients(e, theta));
      if (coeffs_.back().size() > 2) affine_ = false;
    }
    q_.assign(network.num_routes(), 0.0);
    w_.assign(network.num_edges(), 0.0);
    edge_cost_.assign(network.num_edges(), 0.0);
    route_cost_.assign(network.num_routes(), 0.0);
  }

  bool affine() const { return affine_; }
  double demand() const { return demand_; }
  std::vector<double>& q() { return q_; }
  const std::vector<double>& w() const { return w_; }
  const std::vector<double>& route_cost() const { return route_cost_; }
  const std::vector<double>& coeffs(EdgeIndex e) const { return coeffs_[e]; }

  double cost(EdgeIndex e, double load) const { return polynomial_value(coeffs_[e], load); }
  double derivative(EdgeIndex e, double load) const {
    return polynomial_derivative(coeffs_[e], load);
  }

  void refresh() {
    std::fill(w_.begin(), w_.end(), 0.0);
    for (RouteIndex r = 0; r < q_.size(); ++r) {
      if (q_[r] == 0.0) continue;
      for (EdgeIndex e : network_.route(r)) w_[e] += q_[r];
    }
    for (EdgeIndex e = 0; e < w_.size(); ++e) edge_cost_[e] = cost(e, w_[e]);
    for (RouteIndex r = 0; r < q_.size(); ++r) {
      double c = 0.0;
      for (EdgeIndex e : network_.route(r)) c += edge_cost_[e];
      route_cost_[r] = c;
    }
  }

  double potential() const {
    double phi = 0.0;
    for (EdgeIndex e = 0; e < w_.size(); ++e) phi += polynomial_integral(coeffs_[e], w_[e]);
    return phi;
  }

  RouteIndex cheapest_route() const {
    return static_cast<RouteIndex>(std::min_element(route_cost_.begin(), route_cost_.end()) -
                                   route_cost_.begin());
  }

  // Total cost minus the all-or-nothing lower bound, i.e. the FW duality gap.
  double duality_gap() const {
    double total = 0.0;
    for (RouteIndex r = 0; r < q_.size(); ++r) total += q_[r] * route_cost_[r];
    return std::max(0.0, total - demand_ * route_cost_[cheapest_route()]);
  }

  const Network& network() const { return network_; }

 private:
  const Network& network_;
  double demand_;
  bool affine_;
  std::vector<std::vector<double>> coeffs_;
  std::vector<double> q_, w_, edge_cost_, route_cost_;
};

// Minimises the potential along w + gamma * dw for gamma in [0, gamma_max].
double line_search(const FlowState& state, const std::vector<double>& dw, double gamma_max) {
  const auto& w = state.w();
  auto slope_at = [&](double gamma) {
    double g = 0.0;
    for (EdgeIndex e = 0; e < dw.size(); ++e) {
      if (dw[e] != 0.0) g += dw[e] * state.cost(e, w[e] + gamma * dw[e]);
    }
    return g;
  };

  if (state.affine()) {
    double g0 = 0.0;
    double curvature = 0.0;
    for (EdgeIndex e = 0; e < dw.size(); ++e) {
      if (dw[e] == 0.0) continue;
      const auto& c = state.coeffs(e);
      g0 += dw[e] * (c[0] + c[1] * w[e]);
      curvature += c[1] * dw[e] * dw[e];
    }
    if (g0 >= 0.0) return 0.0;
    if (curvature <= 0.0) return gamma_max;
    return std::clamp(-g0 / curvature, 0.0, gamma_max);
  }

  if (slope_at(0.0) >= 0.0) return 0.0;
  if (slope_at(gamma_max) <= 0.0) return gamma_max;
  double lo = 0.0;
  double hi = gamma_max;
  for (int i = 0; i < 200 && hi - lo > 1e-17 * gamma_max; ++i) {
    double mid = 0.5 * (lo + hi);
    if (slope_at(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Newton iterations on the equal-cost system restricted to `active` routes.
// Returns false if the iteration leaves the feasible set.
bool newton_on_face(FlowState& state, std::vector<RouteIndex>& active) {
  const Network& network = state.network();
  const double demand = state.demand();
  auto& q = state.q();
  const auto n = static_cast<Eigen::Index>(active.size());

  for (int iter = 0; iter < 50; ++iter) {
    state.refresh();
    double lambda = 0.0;
    for (RouteIndex r : active) lambda += state.route_cost()[r];
    lambda /= static_cast<double>(n);

    Eigen::VectorXd residual(n + 1);
    Eigen::MatrixXd jacobian = Eigen::MatrixXd::Zero(n + 1, n + 1);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      residual[i] = state.route_cost()[active[i]] - lambda;
      sum += q[active[i]];
      for (Eigen::Index j = 0; j < n; ++j) {
        double h = 0.0;
        for (EdgeIndex e : network.route(active[i])) {
          if (network.incidence(e, active[j])) h += state.derivative(e, state.w()[e]);
        }
        jacobian(i, j) = h;
      }
      jacobian(i, n) = -1.0;
      jacobian(n, i) = 1.0;
    }
    residual[n] = sum - demand;

    Eigen::VectorXd step = jacobian.completeOrthogonalDecomposition().solve(-residual);
    if (!step.allFinite()) return false;
    double step_norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      q[active[i]] += step[i];
      step_norm = std::max(step_norm, std::abs(step[i]));
    }
    if (step_norm <= 1e-15 * demand) break;
  }

  for (RouteIndex r : active) {
    if (q[r] < -1e-13 * demand) return false;
    q[r] = std::max(q[r], 0.0);
  }
  state.refresh();
  return true;
}

// Active-set refinement of a converged FW iterate. Keeps the FW point if the
// refined one does not certify at least as well.
void polish(FlowState& state) {
  const std::vector<double> fw_q = state.q();
  state.refresh();
  const double fw_gap = state.duality_gap();

  std::vector<RouteIndex> active;
  for (RouteIndex r = 0; r < fw_q.size(); ++r) {
    if (fw_q[r] > 0.0) active.push_back(r);
  }

  while (!active.empty()) {
    auto& q = state.q();
    q.assign(fw_q.size(), 0.0);
    for (RouteIndex r : active) q[r] = fw_q[r];
    std::vector<RouteIndex> face = active;
    bool feasible = newton_on_face(state, face);
    if (feasible) {
      double sum = std::accumulate(q.begin(), q.end(), 0.0);
      for (double& x : q) x *= state.demand() / sum;
      state.refresh();
      if (state.duality_gap() <= fw_gap) return;
      break;
    }
    // Drop the route Newton drove most negative and retry on the smaller face.
    auto worst = std::min_element(active.begin(), active.end(),
                                  [&](RouteIndex a, RouteIndex b) { return q[a] < q[b]; });
    active.erase(worst);
  }

  state.q() = fw_q;
  state.refresh();
}

EquilibriumResult make_result(FlowState& state, std::size_t iterations,
                              std::vector<double> trace) {
  state.refresh();
  EquilibriumResult result;
  result.q_star.flows = state.q();
  result.w_star.loads = state.w();
  result.route_costs = state.route_cost();
  result.potential = state.potential();
  const double scale = std::abs(result.potential);
  result.gap = scale > 0.0 ? state.duality_gap() / scale : state.duality_gap();
  result.iterations = iterations;
  result.potential_trace = std::move(trace);
  return result;
}

}  // namespace

EquilibriumResult solve_wardrop(const Network& network, const CostModel& model,
                                const Belief& theta, double demand,
                                const SolverOptions& options) {
  if (!(demand > 0.0)) throw std::invalid_argument("demand must be positive");
  if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (theta.size() != model.states().size())
    throw std::invalid_argument("belief size does not match the state space");
  if (model.num_edges() != network.num_edges())
    throw std::invalid_argument("cost model and network disagree on the edge count");
  if (auto a1 = validate_a1(model, model.alpha()); !a1.ok) throw A1Error(std::move(a1));

  FlowState state(network, model, theta, demand);
  RouteIndex start = 0;
  if (options.initial_route) {
    start = *options.initial_route;
    if (start >= network.num_routes()) throw std::out_of_range("initial route out of range");
  } else {
    state.refresh();  // zero flow: free-flow route costs
    start = state.cheapest_route();
  }
  auto& q = state.q();
  q[start] = demand;

  const std::size_t num_routes = network.num_routes();
  std::vector<double> trace;
  std::vector<double> direction(num_routes);
  std::vector<double> dw(network.num_edges());
  double lower_bound = -std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iter = 0;

  // The test runs once more after the last permitted step.
  for (;; ++iter) {
    state.refresh();
    const auto& cost = state.route_cost();
    const RouteIndex cheapest = state.cheapest_route();
    const double c_min = cost[cheapest];
    const double gap = state.duality_gap();
    const double phi = state.potential();
    if (options.record_potential) trace.push_back(phi);

    lower_bound = std::max(lower_bound, phi - gap);
    const double relative_gap = phi > 0.0 ? (phi - lower_bound) / phi : gap;
    double spread = 0.0;
    RouteIndex costliest = cheapest;
    for (RouteIndex r = 0; r < num_routes; ++r) {
      if (q[r] <= 0.0) continue;
      spread = std::max(spread, cost[r] - c_min);
      if (cost[r] > cost[costliest] || q[costliest] <= 0.0) costliest = r;
    }
    if (relative_gap < options.tol ||
        spread <= options.tol * std::max(std::abs(c_min), std::numeric_limits<double>::min())) {
      converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    double total = 0.0;
    for (RouteIndex r = 0; r < num_routes; ++r) total += q[r] * cost[r];
    const double away_gain = demand * cost[costliest] - total;

    double gamma_max = 1.0;
    bool away = false;
    if (gap >= away_gain || q[costliest] >= demand) {
      for (RouteIndex r = 0; r < num_routes; ++r) direction[r] = -q[r];
      direction[cheapest] += demand;
    } else {
      away = true;
      for (RouteIndex r = 0; r < num_routes; ++r) direction[r] = q[r];
      direction[costliest] -= demand;
      gamma_max = q[costliest] / (demand - q[costliest]);
    }

    std::fill(dw.begin(), dw.end(), 0.0);
    for (RouteIndex r = 0; r < num_routes; ++r) {
      if (direction[r] == 0.0) continue;
      for (EdgeIndex e : network.route(r)) dw[e] += direction[r];
    }
    const double gamma = line_search(state, dw, gamma_max);
    if (gamma <= 0.0) {
      // No descent left at double precision.
      converged = true;
      break;
    }
    for (RouteIndex r = 0; r < num_routes; ++r) q[r] = std::max(0.0, q[r] + gamma * direction[r]);
    if (away && gamma >= gamma_max) q[costliest] = 0.0;
  }

  if (!converged) throw ConvergenceError(make_result(state, iter, std::move(trace)));
  if (options.polish) polish(state);
  return make_result(state, iter, std::move(trace));
}

EquilibriumResult complete_info_equilibrium(const Network& network, const CostModel& model,
                                            StateIndex s, double demand,
                                            const SolverOptions& options) {
  return solve_wardrop(network, model, Belief::point_mass(model.states().size(), s), demand,
                       options);
}

EquilibriumCertificate verify_equilibrium(const Network& network, const CostModel& model,
                                          const Belief& theta, const EquilibriumResult& result,
                                          double tol, double flow_tol) {
  EquilibriumCertificate cert;
  cert.route_costs.resize(network.num_routes());
  for (RouteIndex r = 0; r < network.num_routes(); ++r)
    cert.route_costs[r] = model.expected_route_cost(network, r, theta, result.w_star);
  const double c_min = *std::min_element(cert.route_costs.begin(), cert.route_costs.end());
  for (RouteIndex r = 0; r < network.num_routes(); ++r) {
    if (result.q_star.flows.at(r) <= flow_tol) continue;
    double violation = cert.route_costs[r] - c_min;
    if (!cert.worst_route || violation > cert.worst_violation) {
      cert.worst_violation = violation;
      cert.worst_route = r;
    }
  }
  cert.passed = cert.worst_violation <= tol;
  return cert;
}

}  // namespace bayesroute
