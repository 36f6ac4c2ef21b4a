#pragma once

// The analyze / radius / optimize / simulate / scan commands as in-process
// functions. Each returns the report and the process exit code:
//   0  unsteerable certified (analyze), or success (other commands)
//   1  steerable certified (analyze)
//   2  inconclusive or marginal (analyze)
//   3  input, parse or physicality error
//   4  a steering outcome fell outside the hidden-state box (simulate)

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "steer/io.hpp"
#include "steer/lhs_sim.hpp"
#include "steer/radius.hpp"

namespace steer {

enum ExitCode : int {
  kExitUnsteerable = 0,
  kExitOk = 0,
  kExitSteerable = 1,
  kExitInconclusive = 2,
  kExitError = 3,
  kExitOutsideBox = 4,
};

struct CommandOutput {
  json report;
  int exit_code = kExitOk;
  /// Non-JSON payload (scan CSV).
  std::string text;
};

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json mat_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const RadiusResult& r) {
  return {{"value", finite_or_null(r.value)},
          {"method", std::string(to_string(r.method))},
          {"error_estimate", r.error_estimate},
          {"verdict", std::string(to_string(r.verdict))},
          {"direction", r.direction ? vec_json(*r.direction) : json(nullptr)},
          {"ansatz", r.ansatz}};
}

inline int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::unsteerable: return kExitUnsteerable;
    case Verdict::steerable: return kExitSteerable;
    default: return kExitInconclusive;
  }
}

struct AnalyzeFlags {
  OptimizerBudget budget;
};

inline CommandOutput cmd_analyze(const StateSpec& spec, const AnalyzeFlags& flags = {}) {
  const TwoQubitState state = realize(spec);
  const EprMap map = epr_map(state);
  CommandOutput out;
  json& j = out.report;
  j["format"] = kFormatVersion;
  j["command"] = "analyze";
  j["theta"] = mat_json(state.theta());
  j["alice_bloch"] = vec_json(map.alice_bloch);
  j["bob_bloch"] = vec_json(map.bob_bloch);
  j["degenerate"] = map.degenerate;
  j["tstate"] = nullptr;
  if (!map.degenerate && map.is_tstate(flags.budget.tstate_tol)) {
    const TStateForm form = canonicalize_tstate(map, flags.budget.tstate_tol);
    j["tstate"] = {{"t_diag", vec_json(form.t_diag)},
                   {"alice_rotation", mat_json(form.alice_rotation)},
                   {"bob_rotation", mat_json(form.bob_rotation)}};
  }
  const RadiusResult r = critical_radius(state, flags.budget);
  j["result"] = to_json(r);
  out.exit_code = exit_code_for(r.verdict);
  return out;
}

/// Ansatz selector: "jevtic" (T-states only), "uniform", "grid:N" (uniform
/// antipodal grid of N atoms), "file:PATH" or a bare path.
inline SphereMeasure make_ansatz(const std::string& which, const EprMap& map, int grid,
                                 double tstate_tol = 1e-8) {
  SphereMeasure m;
  if (which == "jevtic") {
    m = jevtic_measure(canonicalize_tstate(map, tstate_tol), grid);
  } else if (which == "uniform") {
    m = fibonacci_grid(grid);
  } else if (which.rfind("grid:", 0) == 0) {
    int n = 0;
    const std::string num = which.substr(5);
    const auto res = std::from_chars(num.data(), num.data() + num.size(), n);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size())
      throw Error(ErrorKind::Parse, "ansatz '" + which + "': expected grid:N");
    m = fibonacci_grid(n);
  } else {
    return load_measure(which.rfind("file:", 0) == 0 ? which.substr(5) : which);
  }
  m.barycenter_target = map.bob_bloch;
  return m;
}

struct RadiusFlags {
  std::string ansatz = "jevtic";
  int grid = 4096;
  int directions = kDefaultDirections;
  double tstate_tol = 1e-8;
};

inline CommandOutput cmd_radius(const StateSpec& spec, const RadiusFlags& flags = {}) {
  const EprMap map = epr_map(realize(spec));
  const SphereMeasure m = make_ansatz(flags.ansatz, map, flags.grid, flags.tstate_tol);
  RadiusResult r = principal_radius(m, map, flags.directions);
  r.ansatz = flags.ansatz + ":" + std::to_string(m.size());
  CommandOutput out;
  out.report = {{"format", kFormatVersion},
                {"command", "radius"},
                {"atoms", m.size()},
                {"directions", flags.directions},
                {"result", to_json(r)}};
  return out;
}

struct OptimizeFlags {
  OptimizerOptions optimizer;
  std::optional<std::string> measure_out;
};

inline CommandOutput cmd_optimize(const StateSpec& spec, const OptimizeFlags& flags = {}) {
  const EprMap map = epr_map(realize(spec));
  const OptimizeResult res = optimize_ansatz(map, flags.optimizer);
  if (flags.measure_out) save_measure(res.measure, *flags.measure_out);
  CommandOutput out;
  out.report = {{"format", kFormatVersion},
                {"command", "optimize"},
                {"grid", flags.optimizer.grid},
                {"iters", flags.optimizer.iters},
                {"seed", flags.optimizer.seed},
                {"initial_radius", res.initial},
                {"ascended", res.ascended},
                {"measure_file", flags.measure_out ? json(*flags.measure_out) : json(nullptr)},
                {"result", to_json(res.radius)}};
  return out;
}

struct SimulateFlags {
  std::string ansatz = "jevtic";
  int grid = 4096;
  /// "random:K" or the path of a file with one "x y z" axis per line.
  std::string measurements = "random:20";
  std::int64_t shots = 1000000;
  std::uint64_t seed = 1;
  double tstate_tol = 1e-8;
};

inline std::vector<Vec3> parse_measurements(const std::string& which, std::uint64_t seed) {
  std::vector<Vec3> axes;
  if (which.rfind("random:", 0) == 0) {
    int k = 0;
    const std::string num = which.substr(7);
    const auto res = std::from_chars(num.data(), num.data() + num.size(), k);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size() || k < 0)
      throw Error(ErrorKind::Parse, "measurements '" + which + "': expected random:K");
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    for (int i = 0; i < k; ++i) axes.push_back(random_unit(rng));
    return axes;
  }
  // Same line format as measure files without the weight column.
  const std::string text = read_file(which);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x)) continue;
    if (!(ls >> y >> z)) {
      std::ostringstream os;
      os << which << ":" << lineno << ": expected 'x y z'";
      throw Error(ErrorKind::Parse, os.str());
    }
    Vec3 v(x, y, z);
    if (std::abs(v.norm() - 1.0) > 1e-6) {
      std::ostringstream os;
      os << which << ":" << lineno << ": axis norm " << v.norm() << " is not 1";
      throw Error(ErrorKind::Parse, os.str());
    }
    axes.push_back(v.normalized());
  }
  return axes;
}

inline json to_json(const SimulationReport& rep) {
  json ms = json::array();
  for (const auto& m : rep.measurements) {
    json outcomes = json::array();
    for (const auto& o : m.outcome) {
      outcomes.push_back({{"predicted_probability", o.predicted_probability},
                          {"simulated_probability", o.simulated_probability},
                          {"z_probability", finite_or_null(o.z_probability)},
                          {"predicted_bloch", vec_json(o.predicted_bloch)},
                          {"simulated_bloch", vec_json(o.simulated_bloch)},
                          {"z_bloch", {finite_or_null(o.z_bloch.x()), finite_or_null(o.z_bloch.y()),
                                       finite_or_null(o.z_bloch.z())}},
                          {"count", o.count}});
    }
    ms.push_back({{"axis", vec_json(m.axis)}, {"outcomes", outcomes}});
  }
  json j = {{"shots", rep.shots}, {"seed", rep.seed}, {"measurements", ms}};
  if (rep.shots > 0 && !rep.measurements.empty()) {
    j["max_abs_z"] = finite_or_null(rep.max_abs_z);
    j["max_probability_deviation"] = rep.max_probability_deviation;
    j["max_bloch_deviation"] = rep.max_bloch_deviation;
  }
  return j;
}

inline CommandOutput cmd_simulate(const StateSpec& spec, const SimulateFlags& flags = {}) {
  const EprMap map = epr_map(realize(spec));
  CommandOutput out;
  out.report = {{"format", kFormatVersion}, {"command", "simulate"}};
  if (flags.shots <= 0) {
    out.report["report"] = to_json(SimulationReport{});
    return out;
  }
  const SphereMeasure m = make_ansatz(flags.ansatz, map, flags.grid, flags.tstate_tol);
  const auto axes = parse_measurements(flags.measurements, flags.seed);
  std::vector<ResponseModel> models;
  double worst = 0.0;
  try {
    for (const auto& x : axes) {
      models.push_back(build_response(m, map, x));
      worst = std::max(worst, verify_response(models.back(), map, x).max());
    }
  } catch (const OutcomeOutsideBox& e) {
    out.report["error"] = {{"kind", "OutcomeOutsideBox"},
                           {"message", e.what()},
                           {"best_residual", e.residual()},
                           {"separation_gap", e.gap()}};
    out.exit_code = kExitOutsideBox;
    return out;
  }
  out.report["max_decomposition_residual"] = worst;
  out.report["report"] = to_json(simulate(models, map, flags.shots, flags.seed));
  return out;
}

struct ScanSpec {
  FamilySpec base;
  std::string parameter;
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
  std::optional<std::string> output;

  void validate() const {
    if (parameter.empty()) throw Error(ErrorKind::InvalidArgument, "scan parameter name is empty");
    if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "scan step must be positive");
    if (!(start <= stop)) throw Error(ErrorKind::InvalidArgument, "scan range is empty (start > stop)");
  }

  /// start + i * step for i = 0 .. floor((stop - start) / step).
  std::vector<double> values() const {
    validate();
    const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> v;
    for (std::int64_t i = 0; i < count; ++i) v.push_back(start + static_cast<double>(i) * step);
    return v;
  }
};

/// CSV columns: <parameter>, radius, error_estimate, method, verdict.
/// radius is "inf" on the degenerate (separable) branch.
inline CommandOutput cmd_scan(const ScanSpec& scan, const OptimizerBudget& budget = {}) {
  const auto values = scan.values();
  std::string csv = "# steer scan format 1\n" + scan.parameter + ",radius,error_estimate,method,verdict\n";
  json rows = json::array();
  for (double v : values) {
    FamilySpec f = scan.base;
    f.params[scan.parameter] = v;
    const RadiusResult r = critical_radius(realize(StateSpec{f}), budget);
    csv += format_double(v) + ',' + (std::isfinite(r.value) ? format_double(r.value) : "inf") + ',' +
           format_double(r.error_estimate) + ',' + std::string(to_string(r.method)) + ',' +
           std::string(to_string(r.verdict)) + '\n';
    rows.push_back({{scan.parameter, v}, {"result", to_json(r)}});
  }
  if (scan.output) write_file(*scan.output, csv);
  CommandOutput out;
  out.text = csv;
  out.report = {{"format", kFormatVersion}, {"command", "scan"}, {"rows", rows}};
  return out;
}

}  // namespace steer
