#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bayesroute/report.hpp"
#include "fixtures.hpp"

using namespace bayesroute;
using namespace fixtures;
using nlohmann::json;

TEST_CASE("builtin scenarios") {
  const auto sc = load_scenario("three-edge");
  CHECK(sc.demand == 1.0);
  CHECK(sc.model.sigma() == Eigen::MatrixXd::Identity(3, 3));
  CHECK(sc.model.states().labels() == std::vector<std::string>{"e1", "e2", "e3", "none"});
  CHECK(sc.model.states().true_state() == kNone);
  CHECK(sc.initial_belief.probs() == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(sc.network.num_routes() == 2);

  const auto c2 = load_scenario("three-edge-cond2");
  CHECK(c2.model.function(1, kE2).identical_to(CostFunction::affine(2, 5)));
  CHECK(c2.model.function(0, kE1).identical_to(sc.model.function(0, kE1)));

  const auto acc = load_scenario("three-edge-accurate-prior");
  CHECK(acc.initial_belief.probs() == std::vector<double>{0, 0.1, 0, 0.9});
  CHECK_FALSE(acc.full_support_prior);

  CHECK_THROWS_AS(builtin_scenario("nope"), ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("scenario JSON round trip") {
  for (const auto& name : builtin_scenario_names()) {
    const auto sc = builtin_scenario(name);
    const json doc = scenario_to_json(sc);
    const auto again = scenario_from_json(json::parse(doc.dump()));
    CHECK(scenario_to_json(again) == doc);
  }
}

namespace {

std::string error_path(const json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const ScenarioError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("schema violations name the offending field") {
  const json base = scenario_to_json(three_edge());
  auto with = [&](auto mutate) {
    json d = base;
    mutate(d);
    return error_path(d);
  };
  CHECK(with([](json& d) { d.erase("edges"); }) == "$.edges");
  CHECK(with([](json& d) { d["demand"] = 0; }) == "$.demand");
  CHECK(with([](json& d) { d["demand"] = "one"; }) == "$.demand");
  CHECK(with([](json& d) { d["schema_version"] = 99; }) == "$.schema_version");
  CHECK(with([](json& d) { d["routes"][0][0] = "zz"; }) == "$.routes");
  CHECK(with([](json& d) { d["costs"][0]["form"] = "cubic"; }) == "$.costs[0].form");
  CHECK(with([](json& d) { d["costs"][0]["params"]["slope"] = -1; }) == "$.costs[0].params");
  CHECK(with([](json& d) { d["costs"][0]["params"]["slope"] = 0; }) == "$.costs");
  CHECK(with([](json& d) { d["costs"].erase(0); }) == "$.costs");
  CHECK(with([](json& d) { d["sigma"][0][1] = 5; d["sigma"][1][0] = 5; }) == "$.sigma");
  CHECK(with([](json& d) { d["sigma"][0] = json::array({1, 0}); }) == "$.sigma[0]");
  CHECK(with([](json& d) { d["initial_belief"] = {0.5, 0.5, 0.0, 0.0}; }) == "$.initial_belief[2]");
  CHECK(with([](json& d) { d["initial_belief"] = {0.5, 0.6, 0.0, 0.0}; }) == "$.initial_belief");
  CHECK(with([](json& d) { d["true_state"] = "x"; }) == "$.states");
  CHECK(with([](json& d) { d["convergence"]["window"] = 0; }) == "$.convergence.window");
  CHECK(with([](json& d) { d["tolerances"]["solver_tol"] = -1; }) == "$.tolerances.solver_tol");
  CHECK(error_path(json::array()) == "$");
}

TEST_CASE("trajectory CSV layout") {
  const auto sc = three_edge();
  const auto t = run(sc, 7);
  std::ostringstream out;
  write_trajectory_csv(out, sc, t);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "stage,theta_e1,theta_e2,theta_e3,theta_none,w_e1,w_e2,w_e3,used_e1,used_e2,used_e3,"
        "c_e1,c_e2,c_e3");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 13);
  }
  CHECK(rows == t.stages.size());
  // Unused edges leave their cost cell empty.
  const bool has_empty = out.str().find(",,") != std::string::npos;
  const bool all_used = t.last().observation.used.size() == 3;
  CHECK((has_empty || all_used));
}

TEST_CASE("an emitted scenario reproduces the same CSV") {
  const auto sc = three_edge();
  std::ostringstream first;
  write_trajectory_csv(first, sc, run(sc, 21));
  const std::string path = "roundtrip_scenario.json";
  {
    std::ofstream f(path);
    f << scenario_to_json(sc).dump(2);
  }
  const auto reloaded = load_scenario(path);
  std::ostringstream second;
  write_trajectory_csv(second, reloaded, run(reloaded, 21));
  CHECK(first.str() == second.str());
  std::remove(path.c_str());
}

TEST_CASE("reports embed version, tolerances and the convergence rule") {
  const auto sc = three_edge();
  const auto t = run(sc, 3);
  const json s = trajectory_summary_json(sc, t);
  CHECK(s["metadata"]["version"] == kVersion);
  CHECK(s["metadata"]["tolerances"]["solver_tol"] == sc.solver.tol);
  CHECK(s["metadata"]["convergence"]["window"] == sc.convergence.window);
  CHECK(s["status"] == "Converged");
  CHECK(s["final_belief"].size() == 4);

  const auto batch = monte_carlo(sc, {1, 2, 3});
  const json b = batch_summary_json(sc, batch);
  CHECK(b["metadata"]["convergence"]["delta"] == sc.convergence.delta);
  CHECK(b["runs"].size() == 3);

  const auto cond = check_complete_learning_conditions(sc.network, sc.model, sc.demand);
  const json c = condition_report_json(sc, cond);
  CHECK(c["complete_learning_guaranteed"] == false);
  CHECK(c["state_independent_free_flow"]["witness"]["edge"] == "e2");
}
