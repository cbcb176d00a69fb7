#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bayesroute/analysis.hpp"
#include "bayesroute/dynamics.hpp"
#include "bayesroute/report.hpp"
#include "bayesroute/scenario.hpp"

namespace py = pybind11;
using namespace bayesroute;

namespace {

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

StateIndex state_of(const Scenario& sc, const std::optional<std::string>& label) {
  return label ? sc.model.states().index(*label) : sc.model.states().true_state();
}

py::dict equilibrium_dict(const Scenario& sc, const EquilibriumResult& r) {
  py::dict d;
  d["w_star"] = r.w_star.loads;
  d["q_star"] = r.q_star.flows;
  d["route_costs"] = r.route_costs;
  d["gap"] = r.gap;
  d["potential"] = r.potential;
  d["iterations"] = r.iterations;
  d["used_edges"] = [&] {
    std::vector<std::string> ids;
    for (EdgeIndex e : used_edges(r.w_star, sc.used_edge_tol())) ids.push_back(sc.network.edge_id(e));
    return ids;
  }();
  return d;
}

Scenario with_rule(Scenario sc, std::optional<std::size_t> max_stages, std::optional<std::size_t> window,
                   std::optional<double> delta) {
  if (max_stages) sc.convergence.max_stages = *max_stages;
  if (window) sc.convergence.window = *window;
  if (delta) sc.convergence.delta = *delta;
  return sc;
}

}  // namespace

PYBIND11_MODULE(_bayesroute, m) {
  m.doc() = "Repeated routing games with public Bayesian learning";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("id", &Scenario::id)
      .def_readonly("description", &Scenario::description)
      .def_readonly("demand", &Scenario::demand)
      .def_property_readonly("edges", [](const Scenario& s) { return s.network.edge_ids(); })
      .def_property_readonly("routes",
                             [](const Scenario& s) {
                               std::vector<std::vector<std::string>> out;
                               for (const auto& r : s.network.routes()) {
                                 out.emplace_back();
                                 for (EdgeIndex e : r) out.back().push_back(s.network.edge_id(e));
                               }
                               return out;
                             })
      .def_property_readonly("states", [](const Scenario& s) { return s.model.states().labels(); })
      .def_property_readonly("true_state",
                             [](const Scenario& s) { return s.model.states().label(s.model.states().true_state()); })
      .def_property_readonly("initial_belief", [](const Scenario& s) { return s.initial_belief.probs(); })
      .def("to_dict", [](const Scenario& s) { return to_python(scenario_to_json(s)); })
      .def("__repr__", [](const Scenario& s) { return "<Scenario '" + s.id + "'>"; });

  m.def("builtin_scenario_names", &builtin_scenario_names);
  m.def("load_scenario", &load_scenario, py::arg("name_or_path"),
        "Load a builtin scenario by name or a scenario JSON file.");
  m.def("scenario_from_dict", [](const py::object& doc) { return scenario_from_json(from_python(doc)); },
        py::arg("doc"));

  m.def(
      "solve_wardrop",
      [](const Scenario& sc, const std::vector<double>& theta, std::optional<double> tol) {
        SolverOptions opt = sc.solver;
        if (tol) opt.tol = *tol;
        return equilibrium_dict(sc, solve_wardrop(sc.network, sc.model, Belief(theta), sc.demand, opt));
      },
      py::arg("scenario"), py::arg("theta"), py::arg("tol") = py::none());
  m.def(
      "complete_info_equilibrium",
      [](const Scenario& sc, std::optional<std::string> state) {
        return equilibrium_dict(sc, complete_info_equilibrium(sc.network, sc.model, state_of(sc, state),
                                                              sc.demand, sc.solver));
      },
      py::arg("scenario"), py::arg("state") = py::none());

  m.def(
      "average_cost",
      [](const Scenario& sc, const std::vector<double>& w, std::optional<std::string> state) {
        return average_cost(sc.model, state_of(sc, state), EdgeLoad{w});
      },
      py::arg("scenario"), py::arg("w"), py::arg("state") = py::none());
  m.def(
      "distinguishable_states",
      [](const Scenario& sc, const std::vector<double>& w, double tol) {
        std::vector<std::string> out;
        for (StateIndex s : distinguishable_states(sc.model, sc.model.states().true_state(), EdgeLoad{w}, tol))
          out.push_back(sc.model.states().label(s));
        return out;
      },
      py::arg("scenario"), py::arg("w"), py::arg("tol") = 1e-9);
  m.def("is_series_parallel", [](const Scenario& sc) { return is_series_parallel(sc.network); },
        py::arg("scenario"));

  m.def(
      "bayes_update",
      [](const Scenario& sc, const std::vector<double>& theta, const std::vector<std::string>& used,
         const std::vector<double>& w, const std::vector<double>& costs) {
        Observation obs;
        for (const auto& id : used) obs.used.push_back(sc.network.edge_index(id));
        obs.loads = EdgeLoad{w};
        obs.costs = costs;
        return bayes_update(Belief(theta), sc.model, obs).probs();
      },
      py::arg("scenario"), py::arg("theta"), py::arg("used"), py::arg("w"), py::arg("costs"));

  m.def(
      "run",
      [](const Scenario& base, std::uint64_t seed, std::optional<std::size_t> max_stages,
         std::optional<std::size_t> window, std::optional<double> delta) {
        const Scenario sc = with_rule(base, max_stages, window, delta);
        std::ostringstream csv;
        const Trajectory traj = [&] {
          py::gil_scoped_release release;
          Trajectory t = run(sc, seed);
          write_trajectory_csv(csv, sc, t);
          return t;
        }();
        py::dict d = to_python(trajectory_summary_json(sc, traj));
        std::vector<std::vector<double>> beliefs, loads;
        for (const auto& rec : traj.stages) {
          beliefs.push_back(rec.posterior.probs());
          loads.push_back(rec.equilibrium.w_star.loads);
        }
        d["beliefs"] = beliefs;
        d["loads"] = loads;
        d["csv"] = csv.str();
        return d;
      },
      py::arg("scenario"), py::arg("seed"), py::arg("max_stages") = py::none(),
      py::arg("window") = py::none(), py::arg("delta") = py::none(),
      "Simulate one trajectory; returns the summary plus per-stage beliefs, loads and CSV text.");

  m.def(
      "monte_carlo",
      [](const Scenario& base, const std::vector<std::uint64_t>& seeds, std::size_t threads,
         std::optional<std::size_t> max_stages, std::optional<std::size_t> window,
         std::optional<double> delta) {
        const Scenario sc = with_rule(base, max_stages, window, delta);
        BatchOptions opt;
        opt.threads = threads;
        const BatchSummary batch = [&] {
          py::gil_scoped_release release;
          return monte_carlo(sc, seeds, opt);
        }();
        return to_python(batch_summary_json(sc, batch));
      },
      py::arg("scenario"), py::arg("seeds"), py::arg("threads") = 0, py::arg("max_stages") = py::none(),
      py::arg("window") = py::none(), py::arg("delta") = py::none());

  m.def(
      "check_rest_point",
      [](const Scenario& sc, const std::vector<double>& theta, const std::vector<double>& w, double tol) {
        RestPointCheck c = check_rest_point(sc.network, sc.model, sc.model.states().true_state(),
                                            Belief(theta), EdgeLoad{w}, sc.demand,
                                            RestPointTolerances::uniform(tol));
        py::dict d;
        d["passed"] = c.passed;
        d["failed_clause"] = to_string(c.failed);
        d["load_discrepancy"] = c.load_discrepancy;
        d["equilibrium_gap"] = c.equilibrium_gap;
        d["distinguishable_mass"] = c.distinguishable_mass;
        d["consistency_error"] = c.consistency_error;
        d["equilibrium_load"] = c.equilibrium_load.loads;
        return d;
      },
      py::arg("scenario"), py::arg("theta"), py::arg("w"), py::arg("tol") = 1e-6);

  m.def(
      "enumerate_rest_points",
      [](const Scenario& sc, std::size_t grid_n, std::size_t threads) {
        EnumerationOptions opt;
        opt.grid_n = grid_n;
        opt.threads = threads;
        opt.tol.solver = sc.solver;
        std::vector<RestPointFamily> families;
        Prop1Report prop1;
        {
          py::gil_scoped_release release;
          const StateIndex truth = sc.model.states().true_state();
          families = enumerate_rest_points(sc.network, sc.model, truth, sc.demand, opt);
          std::vector<EdgeLoad> loads;
          for (const auto& f : families) loads.push_back(f.load);
          prop1 = check_prop1(sc.network, sc.model, truth, sc.demand, loads, 1e-9, sc.solver);
        }
        return to_python(rest_point_report_json(sc, families, prop1, grid_n));
      },
      py::arg("scenario"), py::arg("grid_n") = 100, py::arg("threads") = 0);

  m.def(
      "check_complete_learning_conditions",
      [](const Scenario& sc) {
        return to_python(condition_report_json(
            sc, check_complete_learning_conditions(sc.network, sc.model, sc.demand, 1e-9, sc.solver)));
      },
      py::arg("scenario"));
}
