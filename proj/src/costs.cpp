#include "bayesroute/costs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace bayesroute {

StateSpace::StateSpace(std::vector<std::string> labels, const std::string& true_state)
    : labels_(std::move(labels)) {
  if (labels_.empty()) throw ConfigError("state space is empty");
  std::set<std::string> distinct(labels_.begin(), labels_.end());
  if (distinct.size() != labels_.size()) throw ConfigError("state labels are not distinct");
  true_state_ = index(true_state);
}

StateIndex StateSpace::index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ConfigError("unknown state '" + label + "'");
  return static_cast<StateIndex>(it - labels_.begin());
}

double polynomial_value(const std::vector<double>& c, double w) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * w + *it;
  return v;
}

double polynomial_derivative(const std::vector<double>& c, double w) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) v = v * w + static_cast<double>(k) * c[k];
  return v;
}

double polynomial_integral(const std::vector<double>& c, double w) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * w + c[k] / static_cast<double>(k + 1);
  return v * w;
}

CostFunction::CostFunction(Form form, std::vector<double> coeffs)
    : form_(form), coeffs_(std::move(coeffs)) {
  for (double c : coeffs_) {
    if (!std::isfinite(c) || c < 0.0)
      throw ConfigError("cost coefficients must be finite and nonnegative");
  }
}

CostFunction CostFunction::affine(double slope, double intercept) {
  return CostFunction(Form::Affine, {intercept, slope});
}

CostFunction CostFunction::polynomial(std::vector<double> coefficients) {
  if (coefficients.size() < 2) throw ConfigError("polynomial cost needs degree >= 1");
  return CostFunction(Form::Polynomial, std::move(coefficients));
}

double CostFunction::operator()(double w) const { return polynomial_value(coeffs_, w); }

double CostFunction::derivative(double w) const { return polynomial_derivative(coeffs_, w); }

double CostFunction::integral(double w) const { return polynomial_integral(coeffs_, w); }

bool CostFunction::identical_to(const CostFunction& other) const {
  const std::size_t n = std::max(coeffs_.size(), other.coeffs_.size());
  for (std::size_t k = 0; k < n; ++k) {
    double a = k < coeffs_.size() ? coeffs_[k] : 0.0;
    double b = k < other.coeffs_.size() ? other.coeffs_[k] : 0.0;
    if (a != b) return false;
  }
  return true;
}

Belief::Belief(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("belief over an empty state set");
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0)
      throw std::invalid_argument("belief entries must be finite and nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("belief does not sum to one (sum = " + std::to_string(total) + ")");
}

Belief Belief::point_mass(std::size_t num_states, StateIndex s) {
  std::vector<double> p(num_states, 0.0);
  p.at(s) = 1.0;
  return Belief(std::move(p));
}

Belief Belief::uniform(std::size_t num_states) {
  return Belief(std::vector<double>(num_states, 1.0 / static_cast<double>(num_states)));
}

CostModel::CostModel(StateSpace states, std::vector<std::vector<CostFunction>> table,
                     Eigen::MatrixXd sigma, double alpha)
    : states_(std::move(states)), table_(std::move(table)), sigma_(std::move(sigma)), alpha_(alpha) {
  if (table_.empty()) throw ConfigError("cost table has no edges");
  for (std::size_t e = 0; e < table_.size(); ++e) {
    if (table_[e].size() != states_.size())
      throw ConfigError("cost table row " + std::to_string(e) + " does not cover every state");
  }
  const auto m = static_cast<Eigen::Index>(table_.size());
  if (sigma_.rows() != m || sigma_.cols() != m)
    throw ConfigError("noise covariance must be " + std::to_string(m) + "x" + std::to_string(m));
  if (!sigma_.allFinite() || sigma_ != sigma_.transpose())
    throw ConfigError("noise covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) throw ConfigError("noise covariance is not positive definite");
  if (!(alpha_ > 0.0)) throw ConfigError("alpha must be positive");
}

double CostModel::edge_cost(EdgeIndex e, StateIndex s, double w) const {
  return function(e, s)(w);
}

double CostModel::expected_edge_cost(EdgeIndex e, const Belief& theta, double w) const {
  const auto& row = table_.at(e);
  double total = 0.0;
  for (StateIndex s = 0; s < row.size(); ++s) {
    if (theta[s] != 0.0) total += theta[s] * row[s](w);
  }
  return total;
}

double CostModel::expected_route_cost(const Network& network, RouteIndex r, const Belief& theta,
                                      const EdgeLoad& w) const {
  double total = 0.0;
  for (EdgeIndex e : network.route(r)) total += expected_edge_cost(e, theta, w.loads.at(e));
  return total;
}

double CostModel::beckmann_integral(EdgeIndex e, const Belief& theta, double w) const {
  return polynomial_integral(mixed_coefficients(e, theta), w);
}

std::vector<double> CostModel::mixed_coefficients(EdgeIndex e, const Belief& theta) const {
  const auto& row = table_.at(e);
  std::vector<double> mixed;
  for (StateIndex s = 0; s < row.size(); ++s) {
    if (theta[s] == 0.0) continue;
    const auto& c = row[s].coefficients();
    if (mixed.size() < c.size()) mixed.resize(c.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) mixed[k] += theta[s] * c[k];
  }
  if (mixed.size() < 2) mixed.resize(2, 0.0);
  return mixed;
}

A1Report validate_a1(const CostModel& model, double alpha) {
  A1Report report;
  for (EdgeIndex e = 0; e < model.num_edges(); ++e) {
    for (StateIndex s = 0; s < model.states().size(); ++s) {
      double inf_derivative = model.function(e, s).slope();
      if (inf_derivative < alpha) {
        report.ok = false;
        report.violations.push_back({e, s, inf_derivative});
      }
    }
  }
  return report;
}

}  // namespace bayesroute
