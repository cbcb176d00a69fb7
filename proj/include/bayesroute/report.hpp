#pragma once

#include <ostream>
#include <vector>

#include <json.hpp>

#include "bayesroute/analysis.hpp"
#include "bayesroute/dynamics.hpp"
#include "bayesroute/scenario.hpp"

namespace bayesroute {

// Tool version, tolerances and convergence rule, embedded in every output.
nlohmann::json run_metadata(const Scenario& scenario, const ConvergenceRule& rule);

// One row per stage: stage, theta_<state> (posterior), w_<edge>, used_<edge>,
// c_<edge> (empty when unused). Numbers carry 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Scenario& scenario, const Trajectory& traj);

nlohmann::json trajectory_summary_json(const Scenario& scenario, const Trajectory& traj);
nlohmann::json batch_summary_json(const Scenario& scenario, const BatchSummary& batch);
nlohmann::json rest_point_report_json(const Scenario& scenario,
                                      const std::vector<RestPointFamily>& families,
                                      const Prop1Report& prop1, std::size_t grid_n);
nlohmann::json condition_report_json(const Scenario& scenario, const ConditionReport& report);
nlohmann::json prop1_json(const Scenario& scenario, const Prop1Report& report);

}  // namespace bayesroute
