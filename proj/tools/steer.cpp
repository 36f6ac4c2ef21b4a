// steer: steerability of two-qubit states from the command line.
//
//   steer analyze  SPEC [--tol T] [--grid N --iters K --seed S]
//   steer radius   SPEC [--ansatz jevtic|uniform|grid:N|file:PATH] [--grid N] [--directions D]
//   steer optimize SPEC [--grid N] [--iters K] [--seed S] [--out measure.txt]
//   steer simulate SPEC [--ansatz A] [--measurements random:K|PATH] [--shots N] [--seed S]
//   steer scan     SPEC --param NAME --start A --stop B --step H [--out scan.csv]
//
// SPEC is an inline family (werner:p=0.3, bell:index=3, tstate:t1=..,t2=..,t3=..),
// literal JSON, or the path of a JSON state file.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "steer/steer.hpp"

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 unsteerable (analyze) or success, 1 steerable, 2 inconclusive/marginal,\n"
    "3 input or physicality error, 4 steering outcome outside the hidden-state box.\n"
    "STEER_THREADS caps the number of worker threads.";

void emit(const steer::CommandOutput& out, const std::string& out_path, bool json_to_file) {
  const std::string body = out.report.dump(2) + "\n";
  if (json_to_file && !out_path.empty())
    steer::write_file(out_path, body);
  std::cout << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steerability of two-qubit states under projective measurements"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  std::string spec_text;
  double tol = 1e-8;
  int grid = 0, iters = 200, directions = steer::kDefaultDirections;
  std::uint64_t seed = 1;
  std::int64_t shots = 1000000;
  std::string ansatz = "jevtic", measurements = "random:20", out_path;

  auto* analyze = app.add_subcommand("analyze", "Critical radius and steerability verdict");
  auto* radius = app.add_subcommand("radius", "Principal radius of one ansatz");
  auto* optimize = app.add_subcommand("optimize", "Ascend the principal radius over grid weights");
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo local hidden state simulation");
  auto* scan = app.add_subcommand(
      "scan",
      "Critical radius over a family parameter. CSV columns: <param>,radius,error_estimate,"
      "method,verdict (radius 'inf' for separable states)");

  for (auto* sub : {analyze, radius, optimize, simulate, scan}) {
    sub->add_option("spec", spec_text, "State: family string, JSON literal or JSON file")->required();
    sub->add_option("--tol", tol, "Tolerance on |a|, |b| for treating a state as a T-state");
    sub->add_option("--out", out_path, "Output file (JSON report, measure file for optimize, CSV for scan)");
  }
  for (auto* sub : {analyze, optimize, scan}) {
    sub->add_option("--iters", iters, "Ascent iterations for non-T states");
    sub->add_option("--seed", seed, "Random seed");
  }
  analyze->add_option("--grid", grid, "Grid size for the non-T lower bound (default 1024)");
  scan->add_option("--grid", grid, "Grid size for the non-T lower bound (default 1024)");
  optimize->add_option("--grid", grid, "Grid size (default 1024)");
  optimize->add_option("--directions", directions, "Directions for the final radius");
  for (auto* sub : {radius, simulate}) {
    sub->add_option("--ansatz", ansatz, "jevtic | uniform | grid:N | file:PATH");
    sub->add_option("--grid", grid, "Atoms for jevtic/uniform ansatz (default 4096)");
  }
  radius->add_option("--directions", directions, "Sampled directions before local polish");
  simulate->add_option("--measurements", measurements, "random:K or file of 'x y z' lines");
  simulate->add_option("--shots", shots, "Number of simulated rounds");
  simulate->add_option("--seed", seed, "Random seed");

  std::string param;
  double start = 0.0, stop = 0.0, step = 0.0;
  scan->add_option("--param", param, "Family parameter to sweep")->required();
  scan->add_option("--start", start)->required();
  scan->add_option("--stop", stop)->required();
  scan->add_option("--step", step)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : steer::kExitError;
  }

  try {
    const steer::StateSpec spec = steer::parse_state_spec(spec_text);
    steer::OptimizerBudget budget;
    budget.tstate_tol = tol;
    budget.optimizer.grid = grid > 0 ? grid : 1024;
    budget.optimizer.iters = iters;
    budget.optimizer.seed = seed;

    steer::CommandOutput out;
    if (analyze->parsed()) {
      out = steer::cmd_analyze(spec, {budget});
      emit(out, out_path, true);
    } else if (radius->parsed()) {
      steer::RadiusFlags f;
      f.ansatz = ansatz;
      f.grid = grid > 0 ? grid : 4096;
      f.directions = directions;
      f.tstate_tol = tol;
      out = steer::cmd_radius(spec, f);
      emit(out, out_path, true);
    } else if (optimize->parsed()) {
      steer::OptimizeFlags f;
      f.optimizer = budget.optimizer;
      f.optimizer.final_directions = directions;
      if (!out_path.empty()) f.measure_out = out_path;
      out = steer::cmd_optimize(spec, f);
      emit(out, out_path, false);
    } else if (simulate->parsed()) {
      steer::SimulateFlags f;
      f.ansatz = ansatz;
      f.grid = grid > 0 ? grid : 4096;
      f.measurements = measurements;
      f.shots = shots;
      f.seed = seed;
      f.tstate_tol = tol;
      out = steer::cmd_simulate(spec, f);
      emit(out, out_path, true);
    } else {
      const auto* family = std::get_if<steer::FamilySpec>(&spec.value);
      if (!family) throw steer::Error(steer::ErrorKind::InvalidArgument, "scan needs a family spec");
      steer::ScanSpec s{*family, param, start, stop, step, {}};
      if (!out_path.empty()) s.output = out_path;
      out = steer::cmd_scan(s, budget);
      std::cout << out.text;
    }
    return out.exit_code;
  } catch (const steer::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return steer::kExitError;
  }
}
