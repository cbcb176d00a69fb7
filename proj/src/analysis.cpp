#include "bayesroute/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <unordered_map>

namespace bayesroute {

std::vector<StateIndex> distinguishable_states(const CostModel& model, StateIndex s_true,
                                               const EdgeLoad& w, double cost_tol,
                                               double load_tol) {
  std::vector<StateIndex> out;
  for (StateIndex s = 0; s < model.states().size(); ++s) {
    if (s == s_true) continue;
    for (EdgeIndex e = 0; e < model.num_edges(); ++e) {
      const double load = w.loads.at(e);
      if (load <= load_tol) continue;
      if (std::abs(model.edge_cost(e, s, load) - model.edge_cost(e, s_true, load)) > cost_tol) {
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

double average_cost(const CostModel& model, StateIndex s, const EdgeLoad& w) {
  double total = 0.0;
  for (EdgeIndex e = 0; e < model.num_edges(); ++e) {
    const double load = w.loads.at(e);
    if (load != 0.0) total += load * model.edge_cost(e, s, load);
  }
  return total;
}

const char* to_string(RestPointClause clause) {
  switch (clause) {
    case RestPointClause::None: return "none";
    case RestPointClause::Equilibrium: return "equilibrium";
    case RestPointClause::Distinguishable: return "distinguishable-mass";
    case RestPointClause::Consistency: return "consistency";
  }
  return "unknown";
}

namespace {

// Clauses (ii) and consistency for a given load; clause (i) is left to the caller.
void certify_at_load(const CostModel& model, StateIndex s_true, const Belief& theta,
                     const EdgeLoad& w, double demand, const RestPointTolerances& tol,
                     RestPointCheck& check) {
  const double load_tol = tol.used_edge_rel * demand;
  check.used = used_edges(w, load_tol);
  check.distinguishable = distinguishable_states(model, s_true, w, tol.distinguish, load_tol);
  check.distinguishable_mass = 0.0;
  for (StateIndex s : check.distinguishable) check.distinguishable_mass += theta[s];
  check.consistency_error = 0.0;
  for (EdgeIndex e : check.used) {
    const double load = w.loads[e];
    check.consistency_error =
        std::max(check.consistency_error, std::abs(model.expected_edge_cost(e, theta, load) -
                                                   model.edge_cost(e, s_true, load)));
  }
}

void decide(RestPointCheck& check, const RestPointTolerances& tol, double demand) {
  check.failed = RestPointClause::None;
  if (check.load_discrepancy > tol.load * demand || check.equilibrium_gap > tol.gap) {
    check.failed = RestPointClause::Equilibrium;
  } else if (check.distinguishable_mass > tol.mass) {
    check.failed = RestPointClause::Distinguishable;
  } else if (check.consistency_error > tol.cost) {
    check.failed = RestPointClause::Consistency;
  }
  check.passed = check.failed == RestPointClause::None;
}

}  // namespace

RestPointCheck check_rest_point(const Network& network, const CostModel& model,
                                StateIndex s_true, const Belief& theta_bar, const EdgeLoad& w_bar,
                                double demand, const RestPointTolerances& tol) {
  if (w_bar.loads.size() != network.num_edges())
    throw std::invalid_argument("rest-point load does not cover every edge");
  RestPointCheck check;
  auto eq = solve_wardrop(network, model, theta_bar, demand, tol.solver);
  check.equilibrium_load = eq.w_star;
  for (EdgeIndex e = 0; e < network.num_edges(); ++e)
    check.load_discrepancy =
        std::max(check.load_discrepancy, std::abs(eq.w_star.loads[e] - w_bar.loads[e]));

  double total = 0.0;
  for (EdgeIndex e = 0; e < network.num_edges(); ++e)
    total += w_bar.loads[e] * model.expected_edge_cost(e, theta_bar, w_bar.loads[e]);
  double cheapest = std::numeric_limits<double>::infinity();
  for (RouteIndex r = 0; r < network.num_routes(); ++r)
    cheapest = std::min(cheapest, model.expected_route_cost(network, r, theta_bar, w_bar));
  check.equilibrium_gap = total > 0.0 ? (total - demand * cheapest) / total : 0.0;

  certify_at_load(model, s_true, theta_bar, w_bar, demand, tol, check);
  decide(check, tol, demand);
  return check;
}

namespace {

using Composition = std::vector<std::size_t>;

void compositions(std::size_t total, std::size_t parts, Composition& current,
                  std::vector<Composition>& out) {
  if (parts == 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= total; ++k) {
    current.push_back(k);
    compositions(total - k, parts - 1, current, out);
    current.pop_back();
  }
}

std::uint64_t encode(const Composition& c, std::size_t n) {
  std::uint64_t key = 0;
  for (std::size_t k : c) key = key * (n + 1) + k;
  return key;
}

Belief belief_of(const Composition& c, std::size_t n) {
  std::vector<double> p(c.size());
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    p[i] = static_cast<double>(c[i]) / static_cast<double>(n);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return Belief(std::move(p));
}

struct NodeResult {
  bool passed = false;
  std::vector<EdgeIndex> used;
  EdgeLoad load;
};

NodeResult evaluate(const Network& network, const CostModel& model, StateIndex s_true,
                    double demand, const RestPointTolerances& tol, const Belief& theta) {
  auto eq = solve_wardrop(network, model, theta, demand, tol.solver);
  RestPointCheck check;
  certify_at_load(model, s_true, theta, eq.w_star, demand, tol, check);
  decide(check, tol, demand);
  return {check.passed, std::move(check.used), std::move(eq.w_star)};
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

std::vector<RestPointFamily> enumerate_rest_points(const Network& network, const CostModel& model,
                                                   StateIndex s_true, double demand,
                                                   const EnumerationOptions& options) {
  const std::size_t num_states = model.states().size();
  const std::size_t n = options.grid_n;
  if (num_states > 6) throw std::invalid_argument("rest-point enumeration supports at most 6 states");
  if (n < 1) throw std::invalid_argument("grid_n must be >= 1");

  std::vector<Composition> nodes;
  Composition scratch;
  compositions(n, num_states, scratch, nodes);

  std::vector<NodeResult> results(nodes.size());
  parallel_for(nodes.size(), options.threads, [&](std::size_t i) {
    results[i] = evaluate(network, model, s_true, demand, options.tol, belief_of(nodes[i], n));
  });

  std::unordered_map<std::uint64_t, std::size_t> index;
  index.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(encode(nodes[i], n), i);

  std::map<std::vector<EdgeIndex>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (results[i].passed) groups[results[i].used].push_back(i);
  }

  std::vector<RestPointFamily> families;
  for (const auto& [used, members] : groups) {
    RestPointFamily fam;
    fam.used = used;
    fam.grid_nodes = members.size();
    fam.load = results[members.front()].load;
    fam.min_mass.assign(num_states, 1.0);
    fam.max_mass.assign(num_states, 0.0);
    std::vector<bool> in_support(num_states, false);
    for (std::size_t i : members) {
      Belief theta = belief_of(nodes[i], n);
      for (StateIndex s = 0; s < num_states; ++s) {
        fam.min_mass[s] = std::min(fam.min_mass[s], theta[s]);
        fam.max_mass[s] = std::max(fam.max_mass[s], theta[s]);
        if (theta[s] > 0.0) in_support[s] = true;
      }
      if (nodes[i][s_true] == n) fam.complete_information = true;
      for (EdgeIndex e = 0; e < network.num_edges(); ++e)
        fam.load_spread =
            std::max(fam.load_spread, std::abs(results[i].load.loads[e] - fam.load.loads[e]));
    }
    for (StateIndex s = 0; s < num_states; ++s) {
      if (in_support[s]) fam.support.push_back(s);
    }

    // Bisect towards neighbours, within the family's support, that leave the family.
    auto inside = [&](const Belief& theta) {
      NodeResult r = evaluate(network, model, s_true, demand, options.tol, theta);
      return r.passed && r.used == used;
    };
    for (std::size_t i : members) {
      for (StateIndex from : fam.support) {
        if (nodes[i][from] == 0) continue;
        for (StateIndex to : fam.support) {
          if (to == from) continue;
          Composition nb = nodes[i];
          --nb[from];
          ++nb[to];
          const auto& nb_result = results[index.at(encode(nb, n))];
          if (nb_result.passed && nb_result.used == used) continue;

          const Belief a = belief_of(nodes[i], n);
          const Belief b = belief_of(nb, n);
          auto point = [&](double t) {
            std::vector<double> p(num_states);
            double total = 0.0;
            for (StateIndex s = 0; s < num_states; ++s) {
              p[s] = std::max(0.0, a[s] + t * (b[s] - a[s]));
              total += p[s];
            }
            for (double& x : p) x /= total;
            return Belief(std::move(p));
          };
          double lo = 0.0;  // inside
          double hi = 1.0;  // outside
          const double step = 1.0 / static_cast<double>(n);
          while ((hi - lo) * step > options.boundary_tol) {
            double mid = 0.5 * (lo + hi);
            if (inside(point(mid))) {
              lo = mid;
            } else {
              hi = mid;
            }
          }
          Belief edge_point = point(lo);
          for (StateIndex s = 0; s < num_states; ++s) {
            fam.min_mass[s] = std::min(fam.min_mass[s], edge_point[s]);
            fam.max_mass[s] = std::max(fam.max_mass[s], edge_point[s]);
          }
          fam.boundary.push_back(std::move(edge_point));
        }
      }
    }
    fam.average_cost = average_cost(model, s_true, fam.load);
    families.push_back(std::move(fam));
  }
  return families;
}

Prop1Report check_prop1(const Network& network, const CostModel& model, StateIndex s_true,
                        double demand, const std::vector<EdgeLoad>& rest_loads, double tol,
                        const SolverOptions& solver) {
  Prop1Report report;
  report.applicable = is_series_parallel(network);
  auto eq = complete_info_equilibrium(network, model, s_true, demand, solver);
  report.complete_info_load = eq.w_star;
  report.complete_info_cost = average_cost(model, s_true, eq.w_star);
  for (const auto& w : rest_loads) {
    Prop1Entry entry{w, average_cost(model, s_true, w), false};
    entry.holds = entry.cost >= report.complete_info_cost - tol;
    if (!entry.holds) report.holds = false;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

ConditionReport check_complete_learning_conditions(const Network& network, const CostModel& model,
                                                   double demand, double tol,
                                                   const SolverOptions& solver) {
  const auto& states = model.states();
  const StateIndex truth = states.true_state();
  ConditionReport report;

  auto& c1 = report.fully_distinguishable;
  c1.holds = true;
  for (StateIndex s = 0; s < states.size() && c1.holds; ++s) {
    if (s == truth) continue;
    for (RouteIndex r = 0; r < network.num_routes(); ++r) {
      bool differs = false;
      for (EdgeIndex e : network.route(r)) {
        if (!model.function(e, s).identical_to(model.function(e, truth))) {
          differs = true;
          break;
        }
      }
      if (!differs) {
        c1.holds = false;
        c1.witness = {s, std::nullopt, r,
                      "state " + states.label(s) + " matches the true costs on every edge of route " +
                          std::to_string(r)};
        break;
      }
    }
  }
  if (c1.holds) c1.witness.detail = "every route has an edge separating each state from the truth";

  auto& c2 = report.free_flow_independent;
  c2.holds = true;
  for (EdgeIndex e = 0; e < network.num_edges() && c2.holds; ++e) {
    const double reference = model.function(e, 0).intercept();
    for (StateIndex s = 1; s < states.size(); ++s) {
      if (model.function(e, s).intercept() != reference) {
        c2.holds = false;
        c2.witness = {s, e, std::nullopt,
                      "free-flow cost of " + network.edge_id(e) + " is " +
                          std::to_string(model.function(e, s).intercept()) + " in state " +
                          states.label(s) + " but " + std::to_string(reference) + " in state " +
                          states.label(0)};
        break;
      }
    }
  }
  if (c2.holds) c2.witness.detail = "l_e^s(0) is the same in every state for every edge";

  auto& c3 = report.all_edges_utilized;
  c3.holds = true;
  for (StateIndex s = 0; s < states.size() && c3.holds; ++s) {
    auto eq = complete_info_equilibrium(network, model, s, demand, solver);
    for (EdgeIndex e = 0; e < network.num_edges(); ++e) {
      if (!(eq.w_star.loads[e] > tol * demand)) {
        c3.holds = false;
        c3.witness = {s, e, std::nullopt,
                      "edge " + network.edge_id(e) + " carries " +
                          std::to_string(eq.w_star.loads[e]) +
                          " in the complete-information equilibrium of state " + states.label(s)};
        break;
      }
    }
  }
  if (c3.holds) c3.witness.detail = "every complete-information equilibrium loads every edge";
  return report;
}

}  // namespace bayesroute
