// bayesroute: run, batch, enumerate and check scenarios from the command line.
//
// Exit codes: 0 success, 1 I/O or unexpected error, 2 validation failure,
// 3 solver failure.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bayesroute/analysis.hpp"
#include "bayesroute/dynamics.hpp"
#include "bayesroute/report.hpp"
#include "bayesroute/scenario.hpp"

namespace fs = std::filesystem;
using namespace bayesroute;
using nlohmann::json;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct Common {
  std::string scenario;
  std::string out_dir = ".";
  std::optional<std::size_t> max_stages;
  std::optional<std::size_t> window;
  std::optional<double> delta;
  std::optional<double> tol;
  std::size_t threads = 0;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--scenario", c.scenario, "Builtin scenario name or path to a scenario JSON file")
      ->required();
  cmd.add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
  cmd.add_option("--max-stages", c.max_stages, "Stage cap per trajectory");
  cmd.add_option("--window", c.window, "Quiet stages required for convergence");
  cmd.add_option("--delta", c.delta, "Belief/load change threshold for a quiet stage");
  cmd.add_option("--tol", c.tol, "Relative equilibrium gap for the solver");
  cmd.add_option("--threads", c.threads, "Worker threads (0: hardware concurrency)");
}

// Overrides go into the scenario itself so the emitted copy reproduces the run.
Scenario prepare(const Common& c) {
  Scenario sc = load_scenario(c.scenario);
  if (c.max_stages) sc.convergence.max_stages = *c.max_stages;
  if (c.window) sc.convergence.window = *c.window;
  if (c.delta) sc.convergence.delta = *c.delta;
  if (c.tol) sc.solver.tol = *c.tol;
  const auto& r = sc.convergence;
  if (r.window < 1 || r.max_stages < r.window || !(r.delta > 0.0))
    throw ConfigError("convergence rule needs max_stages >= window >= 1 and delta > 0");
  if (!(sc.solver.tol > 0.0)) throw ConfigError("--tol must be positive");
  return sc;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << content;
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

fs::path output_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("invalid seed '" + s + "'");
  return v;
}

// "0..99", "1,5,9" or a mix such as "0..9,20".
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string part = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (part.empty()) throw ConfigError("empty entry in seed list '" + spec + "'");
    if (const auto dots = part.find(".."); dots != std::string::npos) {
      const auto lo = parse_u64(part.substr(0, dots)), hi = parse_u64(part.substr(dots + 2));
      if (hi < lo) throw ConfigError("seed range '" + part + "' is reversed");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_u64(part));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

int cmd_run(const Common& c, std::uint64_t seed) {
  const Scenario sc = prepare(c);
  const auto dir = output_dir(c.out_dir);
  const Trajectory traj = run(sc, seed);
  write_json(dir / "scenario.json", scenario_to_json(sc));
  {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    if (!csv) throw std::ios_base::failure("cannot write trajectory.csv");
    write_trajectory_csv(csv, sc, traj);
  }
  const json summary = trajectory_summary_json(sc, traj);
  write_json(dir / "summary.json", summary);
  std::printf("%s after %zu stages; final load %s\n", to_string(traj.status), traj.stages.size(),
              summary["final_load"].dump().c_str());
  return 0;
}

int cmd_batch(const Common& c, const std::string& seed_spec) {
  const Scenario sc = prepare(c);
  const auto seeds = parse_seeds(seed_spec);
  const auto dir = output_dir(c.out_dir);
  const auto runs_dir = output_dir((dir / "runs").string());
  write_json(dir / "scenario.json", scenario_to_json(sc));

  BatchOptions opt;
  opt.threads = c.threads;
  // Each trajectory owns its files, so workers never share an output stream.
  opt.on_trajectory = [&](const Trajectory& traj) {
    const std::string stem = "seed_" + std::to_string(traj.seed);
    write_json(runs_dir / (stem + ".json"), trajectory_summary_json(sc, traj));
    std::ofstream csv(runs_dir / (stem + ".csv"), std::ios::binary);
    write_trajectory_csv(csv, sc, traj);
  };
  const BatchSummary batch = monte_carlo(sc, seeds, opt);
  write_json(dir / "aggregate.json", batch_summary_json(sc, batch));

  std::printf("%zu/%zu converged\n", batch.converged, batch.runs.size());
  for (const auto& cl : batch.clusters) {
    std::string used;
    for (EdgeIndex e : cl.used) used += (used.empty() ? "" : ",") + sc.network.edge_id(e);
    std::printf("  used {%s}: %zu runs\n", used.c_str(), cl.count);
  }
  return 0;
}

std::vector<RestPointFamily> enumerate_for(const Scenario& sc, std::size_t grid_n, std::size_t threads) {
  EnumerationOptions opt;
  opt.grid_n = grid_n;
  opt.threads = threads;
  opt.tol.solver = sc.solver;
  opt.tol.used_edge_rel = sc.used_edge_rel;
  return enumerate_rest_points(sc.network, sc.model, sc.model.states().true_state(), sc.demand, opt);
}

Prop1Report prop1_for(const Scenario& sc, const std::vector<RestPointFamily>& families) {
  std::vector<EdgeLoad> loads;
  for (const auto& f : families) loads.push_back(f.load);
  return check_prop1(sc.network, sc.model, sc.model.states().true_state(), sc.demand, loads, 1e-9,
                     sc.solver);
}

int cmd_enumerate(const Common& c, std::size_t grid_n) {
  const Scenario sc = prepare(c);
  if (grid_n < 1) throw ConfigError("--grid-n must be at least 1");
  const auto dir = output_dir(c.out_dir);
  const auto families = enumerate_for(sc, grid_n, c.threads);
  const auto prop1 = prop1_for(sc, families);
  write_json(dir / "rest_points.json", rest_point_report_json(sc, families, prop1, grid_n));

  const auto& labels = sc.model.states().labels();
  const StateIndex truth = sc.model.states().true_state();
  std::printf("%zu rest-point families\n", families.size());
  for (const auto& f : families) {
    std::printf("  load %s, average cost %.12g%s\n", json(f.load.loads).dump().c_str(), f.average_cost,
                f.complete_information ? " (complete information)" : "");
    for (StateIndex s : f.support) {
      if (s != truth)
        std::printf("    mass on %s in [%.7f, %.7f]\n", labels[s].c_str(), f.min_mass[s], f.max_mass[s]);
    }
  }
  return 0;
}

int cmd_check(const Common& c, std::size_t grid_n) {
  const Scenario sc = prepare(c);
  const auto dir = output_dir(c.out_dir);
  const bool sp = is_series_parallel(sc.network);
  const auto conditions = check_complete_learning_conditions(sc.network, sc.model, sc.demand, 1e-9, sc.solver);
  json report{{"metadata", run_metadata(sc, sc.convergence)},
              {"series_parallel", sp},
              {"conditions", condition_report_json(sc, conditions)}};
  if (sp) {
    report["prop1"] = prop1_json(sc, prop1_for(sc, enumerate_for(sc, grid_n, c.threads)));
    report["metadata"]["grid_n"] = grid_n;
  } else {
    report["prop1"] = {{"applicable", false}, {"holds", "not applicable"}};
  }
  write_json(dir / "check.json", report);

  std::printf("series-parallel: %s\n", sp ? "yes" : "no");
  std::printf("condition (1) fully distinguishable: %s\n", conditions.fully_distinguishable.holds ? "holds" : "fails");
  std::printf("condition (2) state-independent free flow: %s\n", conditions.free_flow_independent.holds ? "holds" : "fails");
  std::printf("condition (3) all edges utilized: %s\n", conditions.all_edges_utilized.holds ? "holds" : "fails");
  std::printf("average-cost bound: %s\n", report["prop1"]["holds"].dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeated routing games with public Bayesian learning"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common run_opts, batch_opts, enum_opts, check_opts;
  std::uint64_t seed = 0;
  std::string seeds = "0..99";
  std::size_t enum_grid = 100, check_grid = 100;

  auto* run_cmd = app.add_subcommand("run", "Simulate one trajectory");
  add_common(*run_cmd, run_opts);
  run_cmd->add_option("--seed", seed, "Noise seed")->capture_default_str();

  auto* batch_cmd = app.add_subcommand("batch", "Simulate one trajectory per seed");
  add_common(*batch_cmd, batch_opts);
  batch_cmd->add_option("--seeds", seeds, "Seeds, e.g. 0..99 or 1,4,9")->capture_default_str();

  auto* enum_cmd = app.add_subcommand("enumerate", "Grid the belief simplex for rest points");
  add_common(*enum_cmd, enum_opts);
  enum_cmd->add_option("--grid-n", enum_grid, "Simplex grid resolution")->capture_default_str();

  auto* check_cmd = app.add_subcommand("check", "Learning conditions and the average-cost bound");
  add_common(*check_cmd, check_opts);
  check_cmd->add_option("--grid-n", check_grid, "Grid resolution for the rest points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, seed);
    if (*batch_cmd) return cmd_batch(batch_opts, seeds);
    if (*enum_cmd) return cmd_enumerate(enum_opts, enum_grid);
    if (*check_cmd) return cmd_check(check_opts, check_grid);
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error at %s\n", e.what());
    return kExitValidation;
  } catch (const A1Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    for (const auto& v : e.report().violations)
      std::fprintf(stderr, "  edge %zu state %zu: min derivative %g\n", v.edge, v.state, v.min_derivative);
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "solver failure: %s (best gap %g after %zu iterations)\n", e.what(),
                 e.best().gap, e.best().iterations);
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return 0;
}
