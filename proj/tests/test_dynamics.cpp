#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "bayesroute/report.hpp"
#include "fixtures.hpp"

using namespace bayesroute;
using namespace fixtures;

TEST_CASE("realize_costs") {
  const auto sc = three_edge();
  const EdgeLoad w{{1, 0.5, 0.5}};
  const auto o = realize_costs(sc.model, kNone, w, {0, 1, 2}, {0, 0, 0});
  CHECK(o.costs == std::vector<double>{6, 5.5, 5.5});
  const auto two = realize_costs(sc.model, kNone, EdgeLoad{{1, 0, 1}}, {0, 2}, {0.5, 9.0, -0.25});
  CHECK(two.costs == std::vector<double>{6.5, 5.75});
  CHECK_THROWS(realize_costs(sc.model, kNone, w, {0}, {0.0}));
}

TEST_CASE("noise sampler reproduces its covariance") {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 1.0, 0.3, 0.0, 0.3, 0.8, -0.2, 0.0, -0.2, 0.5;
  NoiseSampler sampler(sigma, 123);
  const std::size_t N = 1000000;
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < N; ++i) {
    const auto x = sampler.sample();
    Eigen::Vector3d v(x[0], x[1], x[2]);
    mean += v;
    acc += v * v.transpose();
  }
  mean /= double(N);
  const Eigen::Matrix3d cov = acc / double(N) - mean * mean.transpose();
  const double bound = 3.0 / std::sqrt(double(N));
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(mean[i]) <= bound * std::sqrt(sigma(i, i)));
    for (int j = 0; j < 3; ++j) {
      // Standard error of a sample covariance entry.
      const double se_scale = std::sqrt(sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j));
      CHECK(std::abs(cov(i, j) - sigma(i, j)) <= bound * se_scale);
    }
  }
}

TEST_CASE("noise streams are a pure function of the seed") {
  NoiseSampler a(Eigen::MatrixXd::Identity(3, 3), 5), b(Eigen::MatrixXd::Identity(3, 3), 5),
      c(Eigen::MatrixXd::Identity(3, 3), 6);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.sample();
    CHECK(x == b.sample());
    CHECK(x != c.sample());
  }
}

TEST_CASE("a rest-point belief is a fixed point of the stage map") {
  const auto sc = three_edge();
  const Belief bar({0, 0.5, 0, 0.5});
  const auto w = solve_wardrop(sc.network, sc.model, bar, 1.0).w_star;
  const auto used = used_edges(w, sc.used_edge_tol());
  const auto obs = realize_costs(sc.model, kNone, w, used, {0, 0, 0});
  CHECK(max_abs_diff(bayes_update(bar, sc.model, obs).probs(), bar.probs()) <= 1e-15);

  // The same holds for any noise: the supported states agree on e1 and e3.
  SimulationState state(sc, bar, 77);
  for (int k = 0; k < 20; ++k) {
    const auto rec = step(state, sc);
    CHECK(max_abs_diff(rec.posterior.probs(), bar.probs()) <= 1e-15);
    CHECK(max_abs_diff(rec.equilibrium.w_star.loads, {1, 0, 1}) <= 1e-9);
  }
}

TEST_CASE("a point mass on the truth never moves") {
  const auto sc = three_edge();
  SimulationState state(sc, Belief::point_mass(4, kNone), 3);
  for (int k = 0; k < 20; ++k) CHECK(step(state, sc).posterior.probs() == Belief::point_mass(4, kNone).probs());
}

TEST_CASE("runs are bit-identical for the same seed") {
  const auto sc = three_edge();
  const auto a = run(sc, 7), b = run(sc, 7);
  REQUIRE(a.stages.size() == b.stages.size());
  for (std::size_t k = 0; k < a.stages.size(); ++k) {
    CHECK(a.stages[k].posterior.probs() == b.stages[k].posterior.probs());
    CHECK(a.stages[k].equilibrium.w_star.loads == b.stages[k].equilibrium.w_star.loads);
    CHECK(a.stages[k].observation.costs == b.stages[k].observation.costs);
  }
  std::ostringstream ca, cb;
  write_trajectory_csv(ca, sc, a);
  write_trajectory_csv(cb, sc, b);
  CHECK(ca.str() == cb.str());
  CHECK(a.status == RunStatus::Converged);
}

TEST_CASE("the final belief is the replayed posterior") {
  const auto sc = three_edge();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = run(sc, seed);
    std::vector<Observation> h;
    for (const auto& rec : t.stages) h.push_back(rec.observation);
    CHECK(max_abs_diff(replay_posterior(sc.initial_belief, sc.model, h).probs(),
                       t.last().posterior.probs()) <= 1e-9);
  }
}

TEST_CASE("converged terminals are consistent rest points") {
  const auto sc = three_edge();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto t = run(sc, seed);
    REQUIRE(t.status == RunStatus::Converged);
    const auto& last = t.last();
    const auto& th = last.posterior;
    const auto& w = last.equilibrium.w_star;
    double mass = 0.0;
    for (StateIndex s : distinguishable_states(sc.model, kNone, w)) mass += th[s];
    CHECK(mass < 1e-3);
    const auto eq = solve_wardrop(sc.network, sc.model, th, sc.demand);
    CHECK(verify_equilibrium(sc.network, sc.model, th, eq, 1e-6).passed);
    const auto check = check_rest_point(sc.network, sc.model, kNone, th, w, sc.demand,
                                        RestPointTolerances::uniform(1e-2));
    CHECK(check.passed);
  }
}

TEST_CASE("learning outcomes on the three-edge scenarios") {
  const auto sc = three_edge();
  std::vector<std::uint64_t> seeds(40);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto batch = monte_carlo(sc, seeds);
  CHECK(batch.convergence_rate == 1.0);
  bool complete = false, incomplete = false;
  for (const auto& r : batch.runs) {
    if (max_abs_diff(r.final_load.loads, {1, 0.5, 0.5}) < 1e-2) complete = true;
    if (max_abs_diff(r.final_load.loads, {1, 0, 1}) < 1e-2) {
      incomplete = true;
      CHECK(r.final_belief[kE1] + r.final_belief[kE3] < 1e-3);
    }
  }
  CHECK(complete);
  CHECK(incomplete);

  const auto cond2 = monte_carlo(builtin_scenario("three-edge-cond2"), seeds);
  for (const auto& r : cond2.runs) CHECK(max_abs_diff(r.final_load.loads, {1, 0.5, 0.5}) < 1e-2);
}

TEST_CASE("batch results do not depend on the thread count") {
  const auto sc = three_edge();
  std::vector<std::uint64_t> seeds{9, 3, 14, 1, 27, 8};
  BatchOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = monte_carlo(sc, seeds, one), b = monte_carlo(sc, seeds, many);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].seed == seeds[i]);
    CHECK(a.runs[i].seed == b.runs[i].seed);
    CHECK(a.runs[i].stages == b.runs[i].stages);
    CHECK(a.runs[i].final_belief.probs() == b.runs[i].final_belief.probs());
    CHECK(a.runs[i].final_load.loads == b.runs[i].final_load.loads);
  }
  CHECK(batch_summary_json(sc, a).dump() == batch_summary_json(sc, b).dump());
}

TEST_CASE("a single-seed batch summarises that trajectory") {
  const auto sc = three_edge();
  const auto t = run(sc, 11);
  const auto s = summarize(t, sc.used_edge_tol());
  const auto b = monte_carlo(sc, {11});
  REQUIRE(b.runs.size() == 1);
  CHECK(b.runs[0].stages == s.stages);
  CHECK(b.runs[0].final_belief.probs() == s.final_belief.probs());
  CHECK(b.clusters.size() == 1);
  CHECK(b.clusters[0].mean_load == s.final_load.loads);
  CHECK(b.mean_stages_to_convergence == double(t.stages.size()));
  CHECK_THROWS(monte_carlo(sc, {1, 1}));
}

TEST_CASE("the convergence rule is validated and honoured") {
  const auto sc = three_edge();
  CHECK_THROWS(run(sc, 1, ConvergenceRule{0, 1e-3, 10}));
  CHECK_THROWS(run(sc, 1, ConvergenceRule{10, 1e-3, 5}));
  CHECK_THROWS(run(sc, 1, ConvergenceRule{5, 0.0, 10}));
  const auto capped = run(sc, 1, ConvergenceRule{10, 1e-3, 10});  // stage 1 never counts as quiet
  CHECK(capped.status == RunStatus::MaxStages);
  CHECK(capped.stages.size() == 10);
}
