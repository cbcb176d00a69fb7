#include "bayesroute/scenario.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>

namespace bayesroute {

using nlohmann::json;

namespace {

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ScenarioError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(path + "." + key, "missing required field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ScenarioError(path, "expected a number");
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ScenarioError(path, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ScenarioError(path, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> strings(const json& v, const std::string& path) {
  if (!v.is_array()) throw ScenarioError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(text(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ScenarioError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

CostFunction parse_cost(const json& entry, const std::string& path) {
  const std::string form = text(field(entry, "form", path), path + ".form");
  const json& params = field(entry, "params", path);
  const std::string ppath = path + ".params";
  try {
    if (form == "affine") {
      return CostFunction::affine(number(field(params, "slope", ppath), ppath + ".slope"),
                                  number(field(params, "intercept", ppath), ppath + ".intercept"));
    }
    if (form == "polynomial") {
      return CostFunction::polynomial(
          numbers(field(params, "coefficients", ppath), ppath + ".coefficients"));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ScenarioError(ppath, e.what());
  }
  throw ScenarioError(path + ".form", "unknown cost form '" + form + "'");
}

json cost_to_json(const CostFunction& f) {
  if (f.form() == CostFunction::Form::Affine)
    return {{"form", "affine"}, {"params", {{"slope", f.slope()}, {"intercept", f.intercept()}}}};
  return {{"form", "polynomial"}, {"params", {{"coefficients", f.coefficients()}}}};
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  const std::string root = "$";
  if (!doc.is_object()) throw ScenarioError(root, "scenario must be a JSON object");
  if (auto it = doc.find("schema_version"); it != doc.end()) {
    if (count(*it, "$.schema_version") != static_cast<std::size_t>(kScenarioSchemaVersion))
      throw ScenarioError("$.schema_version", "unsupported schema version");
  }

  const std::string id = doc.contains("id") ? text(doc["id"], "$.id") : std::string("custom");
  const auto edges = strings(field(doc, "edges", root), "$.edges");
  const json& routes_json = field(doc, "routes", root);
  if (!routes_json.is_array()) throw ScenarioError("$.routes", "expected an array of routes");
  std::vector<std::vector<std::string>> routes;
  for (std::size_t r = 0; r < routes_json.size(); ++r)
    routes.push_back(strings(routes_json[r], "$.routes[" + std::to_string(r) + "]"));

  std::optional<Network> network;
  try {
    network.emplace(edges, routes);
  } catch (const ConfigError& e) {
    throw ScenarioError("$.routes", e.what());
  }

  const auto labels = strings(field(doc, "states", root), "$.states");
  const std::string truth = text(field(doc, "true_state", root), "$.true_state");
  std::optional<StateSpace> states;
  try {
    states.emplace(labels, truth);
  } catch (const ConfigError& e) {
    throw ScenarioError("$.states", e.what());
  }

  // Entries with state "*" provide a per-edge default that specific entries override.
  const json& costs = field(doc, "costs", root);
  if (!costs.is_array()) throw ScenarioError("$.costs", "expected an array");
  std::vector<std::vector<std::optional<CostFunction>>> table(
      edges.size(), std::vector<std::optional<CostFunction>>(labels.size()));
  std::vector<std::optional<CostFunction>> defaults(edges.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const std::string path = "$.costs[" + std::to_string(i) + "]";
    const std::string edge = text(field(costs[i], "edge", path), path + ".edge");
    const std::string state = text(field(costs[i], "state", path), path + ".state");
    EdgeIndex e = 0;
    try {
      e = network->edge_index(edge);
    } catch (const ConfigError& err) {
      throw ScenarioError(path + ".edge", err.what());
    }
    CostFunction f = parse_cost(costs[i], path);
    if (state == "*") {
      if (defaults[e]) throw ScenarioError(path, "second default for edge '" + edge + "'");
      defaults[e] = f;
      continue;
    }
    StateIndex s = 0;
    try {
      s = states->index(state);
    } catch (const ConfigError& err) {
      throw ScenarioError(path + ".state", err.what());
    }
    if (!seen.emplace(e, s).second)
      throw ScenarioError(path, "duplicate cost entry for (" + edge + ", " + state + ")");
    table[e][s] = f;
  }
  std::vector<std::vector<CostFunction>> full(edges.size());
  for (EdgeIndex e = 0; e < edges.size(); ++e) {
    for (StateIndex s = 0; s < labels.size(); ++s) {
      auto f = table[e][s] ? table[e][s] : defaults[e];
      if (!f) throw ScenarioError("$.costs", "no cost for (" + edges[e] + ", " + labels[s] + ")");
      full[e].push_back(*f);
    }
  }

  const json& sigma_json = field(doc, "sigma", root);
  if (!sigma_json.is_array() || sigma_json.size() != edges.size())
    throw ScenarioError("$.sigma", "expected a " + std::to_string(edges.size()) + "x" +
                                       std::to_string(edges.size()) + " matrix");
  Eigen::MatrixXd sigma(edges.size(), edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto row = numbers(sigma_json[i], "$.sigma[" + std::to_string(i) + "]");
    if (row.size() != edges.size())
      throw ScenarioError("$.sigma[" + std::to_string(i) + "]", "wrong row length");
    for (std::size_t j = 0; j < edges.size(); ++j) sigma(i, j) = row[j];
  }

  const double alpha = doc.contains("alpha") ? number(doc["alpha"], "$.alpha") : 1e-3;
  std::optional<CostModel> model;
  try {
    model.emplace(*states, std::move(full), sigma, alpha);
  } catch (const ConfigError& e) {
    throw ScenarioError("$.sigma", e.what());
  }
  if (auto a1 = validate_a1(*model, alpha); !a1.ok) {
    const auto& v = a1.violations.front();
    throw ScenarioError("$.costs", "A1 violated for (" + edges[v.edge] + ", " + labels[v.state] +
                                       "): slope " + std::to_string(v.min_derivative) +
                                       " < alpha " + std::to_string(alpha));
  }

  const double demand = number(field(doc, "demand", root), "$.demand");
  if (!(demand > 0.0)) throw ScenarioError("$.demand", "demand must be positive");

  std::vector<double> prior = doc.contains("initial_belief")
                                  ? numbers(doc["initial_belief"], "$.initial_belief")
                                  : std::vector<double>(labels.size(), 1.0 / static_cast<double>(labels.size()));
  if (prior.size() != labels.size())
    throw ScenarioError("$.initial_belief", "length does not match the state list");
  std::optional<Belief> theta0;
  try {
    theta0.emplace(prior);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("$.initial_belief", e.what());
  }
  bool full_support = true;
  if (auto it = doc.find("full_support_prior"); it != doc.end()) {
    if (!it->is_boolean()) throw ScenarioError("$.full_support_prior", "expected a boolean");
    full_support = it->get<bool>();
  }
  if (full_support) {
    for (StateIndex s = 0; s < prior.size(); ++s) {
      if (!(prior[s] > 0.0))
        throw ScenarioError("$.initial_belief[" + std::to_string(s) + "]",
                            "prior excludes a state but full_support_prior is set");
    }
  }

  Scenario scenario{id,
                    doc.contains("description") ? text(doc["description"], "$.description") : "",
                    doc.contains("comment") ? text(doc["comment"], "$.comment") : "",
                    std::move(*network),
                    std::move(*model),
                    demand,
                    std::move(*theta0),
                    full_support,
                    1e-9,
                    SolverOptions{},
                    ConvergenceRule{}};

  if (auto it = doc.find("tolerances"); it != doc.end()) {
    const std::string path = "$.tolerances";
    if (it->contains("solver_tol")) scenario.solver.tol = number((*it)["solver_tol"], path + ".solver_tol");
    if (it->contains("max_iterations"))
      scenario.solver.max_iterations = count((*it)["max_iterations"], path + ".max_iterations");
    if (it->contains("used_edge_rel"))
      scenario.used_edge_rel = number((*it)["used_edge_rel"], path + ".used_edge_rel");
    if (!(scenario.solver.tol > 0.0)) throw ScenarioError(path + ".solver_tol", "must be positive");
    if (scenario.used_edge_rel < 0.0) throw ScenarioError(path + ".used_edge_rel", "must be >= 0");
  }
  if (auto it = doc.find("convergence"); it != doc.end()) {
    const std::string path = "$.convergence";
    auto& rule = scenario.convergence;
    if (it->contains("window")) rule.window = count((*it)["window"], path + ".window");
    if (it->contains("delta")) rule.delta = number((*it)["delta"], path + ".delta");
    if (it->contains("max_stages")) rule.max_stages = count((*it)["max_stages"], path + ".max_stages");
    if (rule.window < 1) throw ScenarioError(path + ".window", "must be >= 1");
    if (rule.max_stages < rule.window) throw ScenarioError(path + ".max_stages", "must be >= window");
    if (!(rule.delta > 0.0)) throw ScenarioError(path + ".delta", "must be positive");
  }
  return scenario;
}

json scenario_to_json(const Scenario& sc) {
  const auto& net = sc.network;
  const auto& states = sc.model.states();
  json routes = json::array();
  for (const auto& route : net.routes()) {
    json r = json::array();
    for (EdgeIndex e : route) r.push_back(net.edge_id(e));
    routes.push_back(r);
  }
  json costs = json::array();
  for (EdgeIndex e = 0; e < net.num_edges(); ++e) {
    for (StateIndex s = 0; s < states.size(); ++s) {
      json entry = cost_to_json(sc.model.function(e, s));
      entry["edge"] = net.edge_id(e);
      entry["state"] = states.label(s);
      costs.push_back(entry);
    }
  }
  json sigma = json::array();
  for (Eigen::Index i = 0; i < sc.model.sigma().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < sc.model.sigma().cols(); ++j) row.push_back(sc.model.sigma()(i, j));
    sigma.push_back(row);
  }
  return {
      {"schema_version", kScenarioSchemaVersion},
      {"id", sc.id},
      {"description", sc.description},
      {"comment", sc.comment},
      {"units", {{"cost", "time"}, {"load", "demand"}}},
      {"edges", net.edge_ids()},
      {"routes", routes},
      {"states", states.labels()},
      {"true_state", states.label(states.true_state())},
      {"costs", costs},
      {"sigma", sigma},
      {"alpha", sc.model.alpha()},
      {"demand", sc.demand},
      {"initial_belief", sc.initial_belief.probs()},
      {"full_support_prior", sc.full_support_prior},
      {"tolerances",
       {{"solver_tol", sc.solver.tol},
        {"max_iterations", sc.solver.max_iterations},
        {"used_edge_rel", sc.used_edge_rel}}},
      {"convergence",
       {{"window", sc.convergence.window},
        {"delta", sc.convergence.delta},
        {"max_stages", sc.convergence.max_stages}}},
  };
}

namespace {

// Three-edge network: parallel edges e2, e3 into e1. States name the
// compromised edge, "none" means no edge is compromised.
json three_edge_base() {
  auto affine = [](const char* edge, const char* state, double slope, double intercept) {
    return json{{"edge", edge}, {"state", state}, {"form", "affine"},
                {"params", {{"slope", slope}, {"intercept", intercept}}}};
  };
  return {
      {"schema_version", kScenarioSchemaVersion},
      {"id", "three-edge"},
      {"description", "Three-edge series-parallel network, true state none, uniform prior"},
      {"comment",
       "Reconstructed costs: normal l_e(w) = w + 5 on every edge; compromised l_1 = 2w + 5, "
       "l_2 = w + 10, l_3 = 2w + 5. Checks: complete-information load (1, 0.5, 0.5) with "
       "average cost 11.5; load (1, 0, 1) with average cost 12; e2 stays unused iff "
       "5 + 5x >= 6, i.e. x >= 0.2."},
      {"units", {{"cost", "time"}, {"load", "demand"}}},
      {"edges", {"e1", "e2", "e3"}},
      {"routes", json::array({json::array({"e2", "e1"}), json::array({"e3", "e1"})})},
      {"states", {"e1", "e2", "e3", "none"}},
      {"true_state", "none"},
      {"costs",
       json::array({affine("e1", "*", 1, 5), affine("e2", "*", 1, 5), affine("e3", "*", 1, 5),
        affine("e1", "e1", 2, 5), affine("e2", "e2", 1, 10), affine("e3", "e3", 2, 5)})},
      {"sigma", json::array({json::array({1, 0, 0}), json::array({0, 1, 0}), json::array({0, 0, 1})})},
      {"alpha", 1e-3},
      {"demand", 1},
      {"initial_belief", {0.25, 0.25, 0.25, 0.25}},
      {"full_support_prior", true},
  };
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"three-edge", "three-edge-cond2", "three-edge-accurate-prior"};
}

Scenario builtin_scenario(const std::string& name) {
  json doc = three_edge_base();
  if (name == "three-edge") return scenario_from_json(doc);
  if (name == "three-edge-cond2") {
    doc["id"] = name;
    doc["description"] = "Three-edge network with compromised e2 cost 2w + 5 (equal free-flow times)";
    for (auto& entry : doc["costs"]) {
      if (entry["edge"] == "e2" && entry["state"] == "e2")
        entry["params"] = {{"slope", 2}, {"intercept", 5}};
    }
    return scenario_from_json(doc);
  }
  if (name == "three-edge-accurate-prior") {
    doc["id"] = name;
    doc["description"] = "Three-edge network started from the prior (0, 0.1, 0, 0.9)";
    doc["initial_belief"] = {0.0, 0.1, 0.0, 0.9};
    doc["full_support_prior"] = false;
    return scenario_from_json(doc);
  }
  throw ConfigError("unknown builtin scenario '" + name + "'");
}

Scenario load_scenario(const std::string& name_or_path) {
  for (const auto& name : builtin_scenario_names()) {
    if (name == name_or_path) return builtin_scenario(name);
  }
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot open scenario '" + name_or_path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace bayesroute
