#include "bayesroute/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace bayesroute {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x62617972u};
  return std::mt19937_64(seq);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

NoiseSampler::NoiseSampler(const Eigen::MatrixXd& sigma, std::uint64_t seed)
    : rng_(seeded_engine(seed)), z_(sigma.rows()) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw ConfigError("noise covariance is not positive definite");
  lower_ = llt.matrixL();
}

std::vector<double> NoiseSampler::sample() {
  for (Eigen::Index i = 0; i < z_.size(); ++i) z_[i] = normal_(rng_);
  Eigen::VectorXd eps = lower_.triangularView<Eigen::Lower>() * z_;
  return {eps.data(), eps.data() + eps.size()};
}

Observation realize_costs(const CostModel& model, StateIndex s_true, const EdgeLoad& w,
                          const std::vector<EdgeIndex>& used, const std::vector<double>& noise) {
  if (noise.size() != model.num_edges())
    throw std::invalid_argument("noise must be drawn over every edge");
  Observation obs{used, w, {}};
  obs.costs.reserve(used.size());
  for (EdgeIndex e : used) obs.costs.push_back(model.edge_cost(e, s_true, w.loads.at(e)) + noise[e]);
  return obs;
}

SimulationState::SimulationState(const Scenario& scenario, std::uint64_t seed)
    : SimulationState(scenario, scenario.initial_belief, seed) {}

SimulationState::SimulationState(const Scenario& scenario, Belief b, std::uint64_t seed)
    : belief(std::move(b)), sampler(scenario.model.sigma(), seed) {}

StageRecord step(SimulationState& state, const Scenario& scenario) {
  const auto& model = scenario.model;
  EquilibriumResult eq =
      solve_wardrop(scenario.network, model, state.belief, scenario.demand, scenario.solver);
  // Noise is drawn for every edge so the stream does not depend on the used set.
  std::vector<double> noise = state.sampler.sample();
  auto used = used_edges(eq.w_star, scenario.used_edge_tol());
  Observation obs = realize_costs(model, model.states().true_state(), eq.w_star, used, noise);
  Belief posterior = bayes_update(state.belief, model, obs, &state.cache);

  ++state.stage;
  StageRecord record{state.stage, state.belief, std::move(eq), std::move(obs), posterior};
  state.belief = std::move(posterior);
  return record;
}

const char* to_string(RunStatus status) {
  return status == RunStatus::Converged ? "Converged" : "MaxStages";
}

Trajectory run(const Scenario& scenario, std::uint64_t seed, std::optional<ConvergenceRule> rule) {
  const ConvergenceRule r = rule.value_or(scenario.convergence);
  if (r.window < 1 || r.max_stages < r.window || !(r.delta > 0.0))
    throw std::invalid_argument("convergence rule needs max_stages >= window >= 1 and delta > 0");

  Trajectory traj{scenario.id, seed, scenario.initial_belief, r, {}, RunStatus::MaxStages};
  traj.stages.reserve(std::min<std::size_t>(r.max_stages, 1024));
  SimulationState state(scenario, seed);

  std::size_t quiet = 0;
  for (std::size_t k = 1; k <= r.max_stages; ++k) {
    traj.stages.push_back(step(state, scenario));
    const StageRecord& rec = traj.stages.back();
    if (k == 1) continue;  // no previous load to compare against
    const auto& prev_load = traj.stages[traj.stages.size() - 2].equilibrium.w_star.loads;
    const bool belief_still = max_abs_diff(rec.posterior.probs(), rec.prior.probs()) < r.delta;
    const bool load_still =
        max_abs_diff(rec.equilibrium.w_star.loads, prev_load) < r.delta * scenario.demand;
    quiet = (belief_still && load_still) ? quiet + 1 : 0;
    if (quiet >= r.window) {
      traj.status = RunStatus::Converged;
      break;
    }
  }
  return traj;
}

TrajectorySummary summarize(const Trajectory& trajectory, double used_edge_tol) {
  const StageRecord& last = trajectory.last();
  return TrajectorySummary{trajectory.seed,
                           trajectory.status,
                           trajectory.stages.size(),
                           last.posterior,
                           last.equilibrium.w_star,
                           last.equilibrium.q_star,
                           used_edges(last.equilibrium.w_star, used_edge_tol)};
}

BatchSummary monte_carlo(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                         const BatchOptions& options) {
  {
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("batch seeds must be distinct");
  }
  const ConvergenceRule rule = options.rule.value_or(scenario.convergence);

  std::vector<std::optional<TrajectorySummary>> slots(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        Trajectory traj = run(scenario, seeds[i], rule);
        if (options.on_trajectory) options.on_trajectory(traj);
        slots[i] = summarize(traj, scenario.used_edge_tol());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::size_t threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(seeds.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  BatchSummary summary{scenario.id, rule, {}, 0, 0.0, 0.0, {}};
  std::size_t stage_total = 0;
  std::map<std::vector<EdgeIndex>, std::vector<const TrajectorySummary*>> groups;
  for (auto& slot : slots) summary.runs.push_back(std::move(*slot));
  for (const auto& run_summary : summary.runs) {
    if (run_summary.status == RunStatus::Converged) {
      ++summary.converged;
      stage_total += run_summary.stages;
    }
    groups[run_summary.used].push_back(&run_summary);
  }
  if (!summary.runs.empty())
    summary.convergence_rate =
        static_cast<double>(summary.converged) / static_cast<double>(summary.runs.size());
  if (summary.converged)
    summary.mean_stages_to_convergence =
        static_cast<double>(stage_total) / static_cast<double>(summary.converged);

  const std::size_t num_states = scenario.model.states().size();
  const std::size_t num_edges = scenario.network.num_edges();
  for (const auto& [used, members] : groups) {
    TerminalCluster c;
    c.used = used;
    c.count = members.size();
    c.mean_belief.assign(num_states, 0.0);
    c.min_belief.assign(num_states, 1.0);
    c.max_belief.assign(num_states, 0.0);
    c.mean_load.assign(num_edges, 0.0);
    for (const auto* m : members) {
      for (StateIndex s = 0; s < num_states; ++s) {
        double p = m->final_belief[s];
        c.mean_belief[s] += p / static_cast<double>(c.count);
        c.min_belief[s] = std::min(c.min_belief[s], p);
        c.max_belief[s] = std::max(c.max_belief[s], p);
      }
      for (EdgeIndex e = 0; e < num_edges; ++e)
        c.mean_load[e] += m->final_load.loads[e] / static_cast<double>(c.count);
    }
    for (const auto* m : members)
      c.max_load_spread = std::max(c.max_load_spread, max_abs_diff(m->final_load.loads, c.mean_load));
    summary.clusters.push_back(std::move(c));
  }
  return summary;
}

}  // namespace bayesroute
