#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "bayesroute/costs.hpp"
#include "bayesroute/equilibrium.hpp"
#include "bayesroute/graph.hpp"

namespace bayesroute {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kScenarioSchemaVersion = 1;

// Stopping rule for a simulated trajectory: converged once the belief moved
// less than delta and the load less than delta * demand in each of the last
// `window` stages.
struct ConvergenceRule {
  std::size_t window = 50;
  double delta = 1e-3;
  std::size_t max_stages = 5000;
};

struct Scenario {
  std::string id;
  std::string description;
  std::string comment;
  Network network;
  CostModel model;
  double demand;
  Belief initial_belief;
  // The prior is required to put positive mass on every state.
  bool full_support_prior = true;
  // Edges with load <= used_edge_rel * demand count as unused.
  double used_edge_rel = 1e-9;
  SolverOptions solver;
  ConvergenceRule convergence;

  double used_edge_tol() const { return used_edge_rel * demand; }
};

// Schema violation, reported with the JSON path of the offending field.
class ScenarioError : public ConfigError {
 public:
  ScenarioError(const std::string& path, const std::string& message)
      : ConfigError(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Full validation: schema, Sigma positive definite, A1 against alpha, prior on
// the simplex (with full support when declared), demand > 0.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

// A builtin name ("three-edge", "three-edge-cond2", "three-edge-accurate-prior")
// or a path to a scenario JSON file.
Scenario load_scenario(const std::string& name_or_path);
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

}  // namespace bayesroute
