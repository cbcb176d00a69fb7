#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesroute/belief.hpp"
#include "bayesroute/equilibrium.hpp"
#include "bayesroute/scenario.hpp"

namespace bayesroute {

// Draws eps ~ N(0, Sigma) over every edge from a seeded 64-bit Mersenne
// Twister. The stream is a pure function of the seed.
class NoiseSampler {
 public:
  NoiseSampler(const Eigen::MatrixXd& sigma, std::uint64_t seed);
  std::vector<double> sample();

 private:
  Eigen::MatrixXd lower_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  Eigen::VectorXd z_;
};

// c_e = l_e^{s_true}(w_e) + eps_e, kept only for the used edges.
Observation realize_costs(const CostModel& model, StateIndex s_true, const EdgeLoad& w,
                          const std::vector<EdgeIndex>& used, const std::vector<double>& noise);

struct StageRecord {
  std::size_t stage = 0;  // 1-based
  Belief prior;           // belief the travelers played against
  EquilibriumResult equilibrium;
  Observation observation;
  Belief posterior;
};

// Mutable state of one trajectory: current belief, noise stream and the
// likelihood factor cache.
struct SimulationState {
  SimulationState(const Scenario& scenario, std::uint64_t seed);
  SimulationState(const Scenario& scenario, Belief belief, std::uint64_t seed);

  Belief belief;
  NoiseSampler sampler;
  FactorCache cache;
  std::size_t stage = 0;
};

// One stage: equilibrium at the current belief, noise draw, realized costs on
// the used edges, Bayes update. Advances `state` in place.
StageRecord step(SimulationState& state, const Scenario& scenario);

enum class RunStatus { Converged, MaxStages };

const char* to_string(RunStatus status);

struct Trajectory {
  std::string scenario_id;
  std::uint64_t seed = 0;
  Belief initial_belief;
  ConvergenceRule rule;
  std::vector<StageRecord> stages;
  RunStatus status = RunStatus::MaxStages;

  const StageRecord& last() const { return stages.back(); }
};

Trajectory run(const Scenario& scenario, std::uint64_t seed,
               std::optional<ConvergenceRule> rule = std::nullopt);

// Terminal state of one trajectory, enough to re-check it as a rest point.
struct TrajectorySummary {
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::MaxStages;
  std::size_t stages = 0;
  Belief final_belief;
  EdgeLoad final_load;
  RouteFlow final_flow;
  std::vector<EdgeIndex> used;
};

TrajectorySummary summarize(const Trajectory& trajectory, double used_edge_tol);

// Terminal points grouped by the terminal used-edge set.
struct TerminalCluster {
  std::vector<EdgeIndex> used;
  std::size_t count = 0;
  std::vector<double> mean_belief;
  std::vector<double> min_belief;
  std::vector<double> max_belief;
  std::vector<double> mean_load;
  double max_load_spread = 0.0;  // max-norm distance of any member load from the mean
};

struct BatchSummary {
  std::string scenario_id;
  ConvergenceRule rule;
  std::vector<TrajectorySummary> runs;  // in seed-list order
  std::size_t converged = 0;
  double convergence_rate = 0.0;
  double mean_stages_to_convergence = 0.0;
  std::vector<TerminalCluster> clusters;
};

struct BatchOptions {
  std::optional<ConvergenceRule> rule;
  std::size_t threads = 0;  // 0: hardware concurrency
  // Called once per finished trajectory, possibly from a worker thread.
  std::function<void(const Trajectory&)> on_trajectory;
};

// Independent trajectories, one per seed. Results do not depend on the
// thread count.
BatchSummary monte_carlo(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                         const BatchOptions& options = {});

}  // namespace bayesroute
