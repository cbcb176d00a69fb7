#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesroute/graph.hpp"

namespace bayesroute {

using StateIndex = std::size_t;

// Finite set of network states plus the true one. The true state is only
// read by the simulator and the rest-point analysis, never by belief updates.
class StateSpace {
 public:
  StateSpace(std::vector<std::string> labels, const std::string& true_state);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(StateIndex s) const { return labels_.at(s); }
  StateIndex index(const std::string& label) const;
  StateIndex true_state() const { return true_state_; }

 private:
  std::vector<std::string> labels_;
  StateIndex true_state_;
};

// Edge cost as a polynomial in the edge load with nonnegative coefficients,
// lowest degree first. Affine functions are the degree-1 case.
class CostFunction {
 public:
  enum class Form { Affine, Polynomial };

  static CostFunction affine(double slope, double intercept);
  static CostFunction polynomial(std::vector<double> coefficients);

  Form form() const { return form_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double slope() const { return coeffs_.size() > 1 ? coeffs_[1] : 0.0; }
  double intercept() const { return coeffs_[0]; }

  double operator()(double w) const;
  double derivative(double w) const;
  // Integral from 0 to w.
  double integral(double w) const;

  // Coefficient-wise identity, which decides l == l' exactly.
  bool identical_to(const CostFunction& other) const;

 private:
  CostFunction(Form form, std::vector<double> coeffs);

  Form form_;
  std::vector<double> coeffs_;
};

// Probability vector over the state space.
class Belief {
 public:
  explicit Belief(std::vector<double> probs);

  static Belief point_mass(std::size_t num_states, StateIndex s);
  static Belief uniform(std::size_t num_states);

  std::size_t size() const { return probs_.size(); }
  double operator[](StateIndex s) const { return probs_[s]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Per-(edge, state) cost functions with the noise covariance.
class CostModel {
 public:
  // table[e][s] is the cost of edge e in state s.
  CostModel(StateSpace states, std::vector<std::vector<CostFunction>> table,
            Eigen::MatrixXd sigma, double alpha = 1e-3);

  std::size_t num_edges() const { return table_.size(); }
  const StateSpace& states() const { return states_; }
  const CostFunction& function(EdgeIndex e, StateIndex s) const { return table_.at(e).at(s); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  double alpha() const { return alpha_; }

  double edge_cost(EdgeIndex e, StateIndex s, double w) const;
  double expected_edge_cost(EdgeIndex e, const Belief& theta, double w) const;
  double expected_route_cost(const Network& network, RouteIndex r, const Belief& theta,
                             const EdgeLoad& w) const;
  double beckmann_integral(EdgeIndex e, const Belief& theta, double w) const;

  // Belief-weighted polynomial for edge e, i.e. the coefficients of E_theta[l_e^s].
  std::vector<double> mixed_coefficients(EdgeIndex e, const Belief& theta) const;

 private:
  StateSpace states_;
  std::vector<std::vector<CostFunction>> table_;
  Eigen::MatrixXd sigma_;
  double alpha_;
};

struct A1Violation {
  EdgeIndex edge;
  StateIndex state;
  double min_derivative;
};

struct A1Report {
  bool ok = true;
  std::vector<A1Violation> violations;
};

// Checks l' >= alpha on (0, demand] for every (edge, state). Coefficients are
// nonnegative so the derivative is nondecreasing and its infimum is the
// linear coefficient.
A1Report validate_a1(const CostModel& model, double alpha);

// Horner evaluation helpers shared with the equilibrium solver.
double polynomial_value(const std::vector<double>& c, double w);
double polynomial_derivative(const std::vector<double>& c, double w);
double polynomial_integral(const std::vector<double>& c, double w);

}  // namespace bayesroute
