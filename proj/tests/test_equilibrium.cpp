#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bayesroute;
using namespace fixtures;

TEST_CASE("three-edge equilibria") {
  const auto sc = three_edge();
  auto w = [&](std::vector<double> th) {
    return solve_wardrop(sc.network, sc.model, Belief(th), 1.0).w_star.loads;
  };
  CHECK(max_abs_diff(w({0, 0, 0, 1}), {1, 0.5, 0.5}) < 1e-9);
  CHECK(max_abs_diff(w({0, 0.5, 0, 0.5}), {1, 0, 1}) < 1e-9);
  // Expected costs w2 + 5.5 and w3 + 5 balance at w2 = 0.25.
  CHECK(max_abs_diff(w({0, 0.1, 0, 0.9}), {1, 0.25, 0.75}) < 1e-9);

  const auto r = solve_wardrop(sc.network, sc.model, Belief::point_mass(4, kNone), 1.0);
  CHECK(r.route_costs[0] == doctest::Approx(11.5).epsilon(1e-12));
  CHECK(r.route_costs[1] == doctest::Approx(11.5).epsilon(1e-12));
  CHECK(r.gap <= 1e-8);
}

TEST_CASE("complete-information equilibria per state") {
  const auto sc = three_edge();
  auto ci = [&](StateIndex s) { return complete_info_equilibrium(sc.network, sc.model, s, 1.0).w_star.loads; };
  CHECK(max_abs_diff(ci(kNone), {1, 0.5, 0.5}) < 1e-9);
  // e2 compromised: w2 + 10 against w3 + 5 never balances inside [0, 1].
  CHECK(max_abs_diff(ci(kE2), {1, 0, 1}) < 1e-9);
  // e3 compromised at 2 w3 + 5: w2 + 5 = 2 (1 - w2) + 5 gives w2 = 2/3.
  CHECK(max_abs_diff(ci(kE3), {1, 2.0 / 3.0, 1.0 / 3.0}) < 1e-9);
}

TEST_CASE("identical parallel edges split evenly") {
  const Network net({"a", "b"}, {{"a"}, {"b"}});
  const auto m = single_state_model({CostFunction::affine(2, 1), CostFunction::affine(2, 1)});
  for (double D : {0.1, 1.0, 7.0}) {
    const auto r = solve_wardrop(net, m, Belief({1.0}), D);
    CHECK(r.w_star.loads[0] == doctest::Approx(D / 2).epsilon(1e-10));
    CHECK(r.w_star.loads[1] == doctest::Approx(D / 2).epsilon(1e-10));
  }
}

TEST_CASE("verify_equilibrium") {
  const auto sc = three_edge();
  const auto truth = Belief::point_mass(4, kNone);
  const auto r = solve_wardrop(sc.network, sc.model, truth, 1.0);
  CHECK(verify_equilibrium(sc.network, sc.model, truth, r, 1e-6 * 11.5).passed);

  EquilibriumResult bad;
  bad.q_star = RouteFlow{{1, 0}};
  bad.w_star = edge_loads(sc.network, bad.q_star);
  const auto cert = verify_equilibrium(sc.network, sc.model, truth, bad, 1e-6);
  CHECK_FALSE(cert.passed);
  CHECK(cert.route_costs[0] == 12.0);  // e1 at 1, e2 at 1
  CHECK(cert.route_costs[1] == 11.0);  // e1 at 1, e3 at 0
  CHECK(cert.worst_violation == doctest::Approx(1.0));
  REQUIRE(cert.worst_route.has_value());
  CHECK(*cert.worst_route == 0);
}

TEST_CASE("vanishing demand goes to the least-intercept route") {
  const Network net({"a", "b"}, {{"a"}, {"b"}});
  const auto m = single_state_model({CostFunction::affine(1, 2), CostFunction::affine(1, 3)});
  const auto r = solve_wardrop(net, m, Belief({1.0}), 1e-6);
  CHECK(r.w_star.loads[1] == 0.0);
  CHECK(verify_equilibrium(net, m, Belief({1.0}), r, 1e-9).passed);

  const auto eq = single_state_model({CostFunction::affine(1, 2), CostFunction::affine(1, 2)});
  EquilibriumResult any;
  any.q_star = RouteFlow{{3e-7, 7e-7}};
  any.w_star = edge_loads(net, any.q_star);
  CHECK(verify_equilibrium(net, eq, Belief({1.0}), any, 1e-6).passed);
}

namespace {

// Two routes of disjoint edges; each route has 1-3 edges with random affine
// costs in two states.
struct TwoRoute {
  Network net;
  CostModel model;
  std::vector<std::size_t> split;  // number of edges on route 0
};

TwoRoute random_two_route(std::mt19937_64& rng, bool polynomial) {
  std::uniform_int_distribution<int> len(1, 3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  const int n0 = len(rng), n1 = len(rng);
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> routes(2);
  for (int i = 0; i < n0 + n1; ++i) {
    ids.push_back("e" + std::to_string(i));
    routes[i < n0 ? 0 : 1].push_back(ids.back());
  }
  std::vector<std::vector<CostFunction>> t;
  for (int i = 0; i < n0 + n1; ++i) {
    std::vector<CostFunction> row;
    for (int s = 0; s < 2; ++s) {
      if (polynomial)
        row.push_back(CostFunction::polynomial({u(rng), 0.1 + u(rng), u(rng), u(rng) / 2}));
      else
        row.push_back(CostFunction::affine(0.1 + u(rng), u(rng)));
    }
    t.push_back(row);
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  CostModel m(StateSpace({"p", "q"}, "p"), t, Eigen::MatrixXd::Identity(n, n));
  return {Network(ids, routes), std::move(m), {static_cast<std::size_t>(n0)}};
}

}  // namespace

TEST_CASE("two-route affine instances match the closed form") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = random_two_route(rng, false);
    const auto th = random_belief(rng, 2);
    const double D = u(rng);
    double a[2] = {0, 0}, b[2] = {0, 0};
    for (EdgeIndex e = 0; e < inst.net.num_edges(); ++e) {
      const int r = e < inst.split[0] ? 0 : 1;
      for (StateIndex s = 0; s < 2; ++s) {
        a[r] += th[s] * inst.model.function(e, s).slope();
        b[r] += th[s] * inst.model.function(e, s).intercept();
      }
    }
    const double x = oracle::two_route_affine_split(a[0], b[0], a[1], b[1], D);
    const auto res = solve_wardrop(inst.net, inst.model, th, D);
    CHECK(res.q_star.flows[0] == doctest::Approx(x).epsilon(1e-8).scale(D));
    CHECK(std::abs(res.w_star.loads[0] - x) <= 1e-8 * std::max(1.0, D));
  }
}

TEST_CASE("two-route polynomial instances match bisection") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_two_route(rng, true);
    const auto th = random_belief(rng, 2);
    const double D = u(rng);
    auto route_cost = [&](int r) {
      return [&, r](double x) {
        double c = 0.0;
        for (EdgeIndex e = 0; e < inst.net.num_edges(); ++e) {
          if ((e < inst.split[0]) != (r == 0)) continue;
          for (StateIndex s = 0; s < 2; ++s) {
            const auto& cf = inst.model.function(e, s).coefficients();
            double v = 0.0, p = 1.0;
            for (double k : cf) {
              v += k * p;
              p *= x;
            }
            c += th[s] * v;
          }
        }
        return c;
      };
    };
    const double x = oracle::two_route_split_bisection(route_cost(0), route_cost(1), D);
    const auto res = solve_wardrop(inst.net, inst.model, th, D);
    CHECK(std::abs(res.q_star.flows[0] - x) <= 1e-7 * std::max(1.0, D));
  }
}

namespace {

// Two parallel pairs in series plus a direct edge: five routes, route flows
// not unique, edge loads unique.
struct Grid {
  Network net;
  CostModel model;
};

Grid random_grid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  Network net({"a", "b", "c", "d", "e"},
              {{"a", "c"}, {"a", "d"}, {"b", "c"}, {"b", "d"}, {"e"}});
  std::vector<std::vector<CostFunction>> t;
  for (int e = 0; e < 5; ++e) {
    std::vector<CostFunction> row;
    for (int s = 0; s < 3; ++s)
      row.push_back(s == 2 ? CostFunction::polynomial({u(rng), 0.2 + u(rng), u(rng)})
                           : CostFunction::affine(0.2 + u(rng), u(rng)));
    t.push_back(row);
  }
  return {std::move(net), CostModel(StateSpace({"x", "y", "z"}, "x"), t, Eigen::MatrixXd::Identity(5, 5))};
}

}  // namespace

TEST_CASE("potential descends and loads are unique") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_grid(rng);
    const auto th = random_belief(rng, 3);
    SolverOptions opt;
    opt.record_potential = true;
    opt.polish = false;
    const auto base = solve_wardrop(g.net, g.model, th, 2.0, opt);
    for (std::size_t i = 1; i < base.potential_trace.size(); ++i)
      CHECK(base.potential_trace[i] <= base.potential_trace[i - 1] + 1e-12);

    for (RouteIndex r = 0; r < g.net.num_routes(); ++r) {
      SolverOptions from;
      from.initial_route = r;
      const auto other = solve_wardrop(g.net, g.model, th, 2.0, from);
      CHECK(max_abs_diff(other.w_star.loads, base.w_star.loads) < 10 * 1e-6);
      CHECK(verify_equilibrium(g.net, g.model, th, other, 1e-6).passed);
    }
  }
}

TEST_CASE("equilibrium load is continuous in the belief") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_grid(rng);
    const auto th = random_belief(rng, 3);
    const auto w0 = solve_wardrop(g.net, g.model, th, 2.0).w_star.loads;
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {1e-2, 1e-3, 1e-4}) {
      // Move delta/2 of mass from the largest state to the smallest.
      auto p = th.probs();
      auto hi = std::max_element(p.begin(), p.end()) - p.begin();
      auto lo = std::min_element(p.begin(), p.end()) - p.begin();
      p[static_cast<std::size_t>(hi)] -= delta / 2;
      p[static_cast<std::size_t>(lo)] += delta / 2;
      const auto w1 = solve_wardrop(g.net, g.model, Belief(p), 2.0).w_star.loads;
      const double d = max_abs_diff(w0, w1);
      CHECK(d <= prev + 1e-9);
      prev = d;
    }
    CHECK(prev < 1e-3);
  }
}

TEST_CASE("A1 violations are rejected by the solver") {
  const Network net({"a", "b"}, {{"a"}, {"b"}});
  const auto m = single_state_model({CostFunction::affine(0, 1), CostFunction::affine(1, 1)});
  CHECK_THROWS_AS(solve_wardrop(net, m, Belief({1.0}), 1.0), A1Error);
}

TEST_CASE("solver input validation") {
  const auto sc = three_edge();
  CHECK_THROWS(solve_wardrop(sc.network, sc.model, Belief::uniform(3), 1.0));
  CHECK_THROWS(solve_wardrop(sc.network, sc.model, Belief::uniform(4), -1.0));
}
