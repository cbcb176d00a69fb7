#include "bayesroute/report.hpp"

#include <cstdio>

namespace bayesroute {

using nlohmann::json;

namespace {

std::string full_precision(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json edge_names(const Scenario& sc, const std::vector<EdgeIndex>& edges) {
  json out = json::array();
  for (EdgeIndex e : edges) out.push_back(sc.network.edge_id(e));
  return out;
}

json state_names(const Scenario& sc, const std::vector<StateIndex>& states) {
  json out = json::array();
  for (StateIndex s : states) out.push_back(sc.model.states().label(s));
  return out;
}

json keyed(const std::vector<std::string>& keys, const std::vector<double>& values) {
  json out = json::object();
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = values[i];
  return out;
}

json witness_json(const Scenario& sc, const ConditionWitness& w) {
  json out{{"detail", w.detail}};
  if (w.state) out["state"] = sc.model.states().label(*w.state);
  if (w.edge) out["edge"] = sc.network.edge_id(*w.edge);
  if (w.route) out["route"] = *w.route;
  return out;
}

}  // namespace

json run_metadata(const Scenario& sc, const ConvergenceRule& rule) {
  return {
      {"tool", "bayesroute"},
      {"version", kVersion},
      {"scenario", sc.id},
      {"tolerances",
       {{"solver_tol", sc.solver.tol},
        {"max_iterations", sc.solver.max_iterations},
        {"used_edge_rel", sc.used_edge_rel}}},
      {"convergence",
       {{"window", rule.window}, {"delta", rule.delta}, {"max_stages", rule.max_stages},
        {"stopping_rule",
         "converged when every one of the last `window` stages moved the belief by < delta "
         "and the load by < delta * demand (max norm)"}}},
  };
}

void write_trajectory_csv(std::ostream& out, const Scenario& sc, const Trajectory& traj) {
  const auto& states = sc.model.states().labels();
  const auto& edges = sc.network.edge_ids();
  out << "stage";
  for (const auto& s : states) out << ",theta_" << s;
  for (const auto& e : edges) out << ",w_" << e;
  for (const auto& e : edges) out << ",used_" << e;
  for (const auto& e : edges) out << ",c_" << e;
  out << '\n';

  for (const auto& rec : traj.stages) {
    out << rec.stage;
    for (double p : rec.posterior.probs()) out << ',' << full_precision(p);
    for (double w : rec.equilibrium.w_star.loads) out << ',' << full_precision(w);
    std::vector<int> used(edges.size(), 0);
    std::vector<std::string> cost(edges.size());
    const auto& obs = rec.observation;
    for (std::size_t i = 0; i < obs.used.size(); ++i) {
      used[obs.used[i]] = 1;
      cost[obs.used[i]] = full_precision(obs.costs[i]);
    }
    for (int u : used) out << ',' << u;
    for (const auto& c : cost) out << ',' << c;
    out << '\n';
  }
}

json trajectory_summary_json(const Scenario& sc, const Trajectory& traj) {
  const auto& last = traj.last();
  const auto used = used_edges(last.equilibrium.w_star, sc.used_edge_tol());
  return {
      {"metadata", run_metadata(sc, traj.rule)},
      {"seed", traj.seed},
      {"status", to_string(traj.status)},
      {"stages", traj.stages.size()},
      {"initial_belief", keyed(sc.model.states().labels(), traj.initial_belief.probs())},
      {"final_belief", keyed(sc.model.states().labels(), last.posterior.probs())},
      {"final_load", keyed(sc.network.edge_ids(), last.equilibrium.w_star.loads)},
      {"final_used_edges", edge_names(sc, used)},
      {"final_equilibrium_gap", last.equilibrium.gap},
      {"average_cost", average_cost(sc.model, sc.model.states().true_state(),
                                    last.equilibrium.w_star)},
  };
}

json batch_summary_json(const Scenario& sc, const BatchSummary& batch) {
  json runs = json::array();
  for (const auto& r : batch.runs) {
    runs.push_back({{"seed", r.seed},
                    {"status", to_string(r.status)},
                    {"stages", r.stages},
                    {"final_belief", r.final_belief.probs()},
                    {"final_load", r.final_load.loads},
                    {"final_used_edges", edge_names(sc, r.used)}});
  }
  json clusters = json::array();
  for (const auto& c : batch.clusters) {
    clusters.push_back({{"used_edges", edge_names(sc, c.used)},
                        {"count", c.count},
                        {"fraction", static_cast<double>(c.count) /
                                         static_cast<double>(batch.runs.size())},
                        {"mean_belief", keyed(sc.model.states().labels(), c.mean_belief)},
                        {"min_belief", keyed(sc.model.states().labels(), c.min_belief)},
                        {"max_belief", keyed(sc.model.states().labels(), c.max_belief)},
                        {"mean_load", keyed(sc.network.edge_ids(), c.mean_load)},
                        {"max_load_spread", c.max_load_spread},
                        {"average_cost", average_cost(sc.model, sc.model.states().true_state(),
                                                      EdgeLoad{c.mean_load})}});
  }
  return {
      {"metadata", run_metadata(sc, batch.rule)},
      {"trajectories", batch.runs.size()},
      {"converged", batch.converged},
      {"convergence_rate", batch.convergence_rate},
      {"mean_stages_to_convergence", batch.mean_stages_to_convergence},
      {"clusters", clusters},
      {"runs", runs},
  };
}

json prop1_json(const Scenario& sc, const Prop1Report& report) {
  json entries = json::array();
  for (const auto& e : report.entries)
    entries.push_back({{"load", keyed(sc.network.edge_ids(), e.load.loads)},
                       {"average_cost", e.cost},
                       {"holds", e.holds}});
  return {{"applicable", report.applicable},
          {"holds", report.applicable ? json(report.holds) : json("not applicable")},
          {"complete_information_load", keyed(sc.network.edge_ids(), report.complete_info_load.loads)},
          {"complete_information_cost", report.complete_info_cost},
          {"rest_points", entries}};
}

json rest_point_report_json(const Scenario& sc, const std::vector<RestPointFamily>& families,
                            const Prop1Report& prop1, std::size_t grid_n) {
  const auto& labels = sc.model.states().labels();
  const StateIndex truth = sc.model.states().true_state();
  json fams = json::array();
  for (const auto& f : families) {
    json thresholds = json::array();
    for (StateIndex s : f.support) {
      if (s == truth) continue;
      thresholds.push_back({{"state", labels[s]},
                            {"min_mass", f.min_mass[s]},
                            {"max_mass", f.max_mass[s]}});
    }
    json boundary = json::array();
    for (const auto& b : f.boundary) boundary.push_back(b.probs());
    fams.push_back({{"used_edges", edge_names(sc, f.used)},
                    {"support", state_names(sc, f.support)},
                    {"load", keyed(sc.network.edge_ids(), f.load.loads)},
                    {"load_spread", f.load_spread},
                    {"grid_nodes", f.grid_nodes},
                    {"complete_information", f.complete_information},
                    {"mass_min", keyed(labels, f.min_mass)},
                    {"mass_max", keyed(labels, f.max_mass)},
                    {"thresholds", thresholds},
                    {"average_cost", f.average_cost},
                    {"boundary", boundary}});
  }
  json meta = run_metadata(sc, sc.convergence);
  meta["grid_n"] = grid_n;
  return {{"metadata", meta},
          {"true_state", labels[truth]},
          {"families", fams},
          {"prop1", prop1_json(sc, prop1)}};
}

json condition_report_json(const Scenario& sc, const ConditionReport& report) {
  auto one = [&](const ConditionResult& c) {
    return json{{"holds", c.holds}, {"witness", witness_json(sc, c.witness)}};
  };
  return {{"fully_distinguishable_states", one(report.fully_distinguishable)},
          {"state_independent_free_flow", one(report.free_flow_independent)},
          {"all_edges_utilized", one(report.all_edges_utilized)},
          {"complete_learning_guaranteed", report.any()}};
}

}  // namespace bayesroute
