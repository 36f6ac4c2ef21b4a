#pragma once

// Principal radius of an ansatz, critical radius of local models and the
// steerability verdict. A state is unsteerable from Alice's side exactly when
// its critical radius is at least one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "steer/ansatz.hpp"
#include "steer/geometry.hpp"
#include "steer/parallel.hpp"
#include "steer/qstate.hpp"
#include "steer/sphere.hpp"

namespace steer {

enum class Method { tstate_closed_form, discrete_ansatz, optimized_lower_bound, degenerate_separable };
enum class Verdict { steerable, unsteerable, marginal, inconclusive };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::tstate_closed_form: return "tstate_closed_form";
    case Method::discrete_ansatz: return "discrete_ansatz";
    case Method::optimized_lower_bound: return "optimized_lower_bound";
    case Method::degenerate_separable: return "degenerate_separable";
  }
  return "unknown";
}

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::steerable: return "steerable";
    case Verdict::unsteerable: return "unsteerable";
    case Verdict::marginal: return "marginal";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct RadiusResult {
  double value = 0.0;
  Method method = Method::discrete_ansatz;
  double error_estimate = 0.0;
  Verdict verdict = Verdict::inconclusive;
  /// Direction (pulled-back frame) attaining the minimum, when one was searched.
  std::optional<Vec3> direction;
  std::string ansatz;
};

/// Only the closed form is exact; everything else is a lower bound on the
/// critical radius and can certify unsteerability but never steerability.
inline Verdict classify(double value, double error_estimate, Method method) {
  switch (method) {
    case Method::degenerate_separable:
      return Verdict::unsteerable;
    case Method::tstate_closed_form:
      if (value - error_estimate >= 1.0) return Verdict::unsteerable;
      if (value + error_estimate < 1.0) return Verdict::steerable;
      return Verdict::marginal;
    case Method::discrete_ansatz:
    case Method::optimized_lower_bound:
      return value - error_estimate >= 1.0 ? Verdict::unsteerable : Verdict::inconclusive;
  }
  return Verdict::inconclusive;
}

inline constexpr int kDefaultDirections = 8192;
inline constexpr int kPolishCandidates = 10;

struct SupportMinimum {
  double value = 0.0;
  Vec3 direction = Vec3::UnitZ();
  /// Minimum over the sampled directions before local polishing.
  double coarse = 0.0;
};

/// min over unit d of the section support: quasi-uniform sampling, then
/// Nelder-Mead from the best few samples.
inline SupportMinimum minimize_support(const PulledBackSection& section,
                                       int directions = kDefaultDirections,
                                       int polish = kPolishCandidates,
                                       const Mat3& rotation = Mat3::Identity()) {
  auto dirs = fibonacci_points(directions);
  for (auto& d : dirs) d = rotation * d;
  std::vector<double> vals(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t k) {
    vals[k] = solve_section_support(section, dirs[k]).value;
  });
  std::vector<std::size_t> order(dirs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(polish, 0)),
                                                 order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return vals[a] < vals[b] || (vals[a] == vals[b] && a < b);
                    });
  SupportMinimum best;
  best.coarse = vals[order[0]];
  best.value = best.coarse;
  best.direction = dirs[order[0]];

  const double step = 0.5 * std::sqrt(4.0 * kPi / directions);
  std::vector<SphereMinimum> polished(keep);
  parallel_for(keep, [&](std::size_t k) {
    polished[k] = minimize_on_sphere(
        [&](const Vec3& d) { return solve_section_support(section, d).value; }, dirs[order[k]],
        step);
  });
  for (const auto& p : polished) {
    if (p.value < best.value) {
      best.value = p.value;
      best.direction = p.direction;
    }
  }
  return best;
}

/// The measure with weights moved onto sum w = 1 and sum w n = b, if needed.
inline SphereMeasure conform_to_map(const SphereMeasure& measure, const EprMap& map) {
  measure.validate(1e-8);
  const bool exact = std::abs(measure.total_weight() - 1.0) <= 1e-12 &&
                     (measure.barycenter() - map.bob_bloch).norm() <= 1e-12;
  SphereMeasure m = measure;
  m.barycenter_target = map.bob_bloch;
  return exact ? m : projected(std::move(m));
}

/// Largest scaling of the steering ellipsoid about its center that stays in
/// the box section: the minimum over directions of the pulled-back support.
inline RadiusResult principal_radius(const SphereMeasure& measure, const EprMap& map,
                                     int directions = kDefaultDirections) {
  if (map.degenerate) map.inverse();  // throws DegenerateMap
  const SphereMeasure m = conform_to_map(measure, map);
  const PulledBackSection section = pull_back(build_box(m), map);
  const SupportMinimum min = minimize_support(section, directions);
  RadiusResult r;
  r.value = std::max(0.0, min.value);
  r.method = Method::discrete_ansatz;
  r.error_estimate = std::max(0.0, min.coarse - min.value);
  r.verdict = classify(r.value, r.error_estimate, r.method);
  r.direction = min.direction;
  std::ostringstream os;
  os << "discrete:" << m.size();
  r.ansatz = os.str();
  return r;
}

/// Critical radius of a T-state, 2 pi N_T |t1 t2 t3|, attained by the Jevtic ansatz.
inline RadiusResult tstate_critical_radius(const TStateForm& form, double rel_tol = 1e-8) {
  const JevticDensity density = normalize_jevtic(form.t_diag, rel_tol);
  RadiusResult r;
  r.value = 2.0 * kPi * density.n_t * std::abs(form.t_diag.prod());
  r.method = Method::tstate_closed_form;
  r.error_estimate = r.value * std::max(rel_tol, density.rel_error);
  r.verdict = classify(r.value, r.error_estimate, r.method);
  r.ansatz = "jevtic";
  return r;
}

struct OptimizerOptions {
  int grid = 1024;
  int iters = 200;
  std::uint64_t seed = 1;
  /// Directions per ascent step; the set is randomly rotated every step.
  int step_directions = 2048;
  int final_directions = kDefaultDirections;
  double step = 0.5;
  /// Soft-min temperature relative to the current radius.
  double softness = 0.01;
};

struct OptimizeResult {
  SphereMeasure measure;
  RadiusResult radius;
  /// Sampled radius of the starting (uniform) measure.
  double initial = 0.0;
  bool ascended = false;
  std::vector<double> history;
};

/// Heuristic ascent of the principal radius over atom weights on a fixed
/// antipodal grid. Each step takes a soft-min average of the support
/// subgradients (c_i - mu t_i)^+ over randomly rotated directions, then
/// projects onto sum w = 1, sum w n = b, w >= 0. Deterministic for a seed.
inline OptimizeResult optimize_ansatz(const EprMap& map, const OptimizerOptions& opt = {}) {
  const Mat4 inv = map.inverse();
  SphereMeasure m = fibonacci_grid(opt.grid, std::nullopt, true);
  m.barycenter_target = map.bob_bloch;
  m = conform_to_map(m, map);

  const std::size_t n = m.size();
  const std::size_t half = n / 2;
  const bool symmetric_problem =
      map.alice_bloch.norm() == 0.0 && map.bob_bloch.norm() == 0.0 && m.has_antipodal_pairs();

  std::vector<double> unit_t(n);
  Eigen::Matrix3Xd unit_v(3, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec4 u = inv * lift(1.0, m.atoms[i].n);
    unit_t[i] = u[0];
    unit_v.col(static_cast<Eigen::Index>(i)) = u.tail<3>();
  }

  auto section_for = [&](const std::vector<Atom>& atoms) {
    PulledBackSection s;
    s.gen_t.resize(n);
    s.gen_v.resize(3, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double w = atoms[i].weight;
      s.gen_t[i] = w * unit_t[i];
      s.gen_v.col(static_cast<Eigen::Index>(i)) = w * unit_v.col(static_cast<Eigen::Index>(i));
      if (!(s.gen_t[i] > 0.0)) s.all_positive = false;
    }
    return s;
  };

  std::mt19937_64 rng(opt.seed);
  const auto base_dirs = fibonacci_points(opt.step_directions);
  std::vector<Vec3> dirs(base_dirs.size());
  std::vector<double> vals(dirs.size()), mults(dirs.size());

  OptimizeResult out;
  std::vector<Atom> best_atoms = m.atoms;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad(static_cast<Eigen::Index>(n));

  for (int it = 0; it < opt.iters; ++it) {
    const Mat3 rot = random_rotation(rng);
    for (std::size_t k = 0; k < dirs.size(); ++k) dirs[k] = rot * base_dirs[k];
    const PulledBackSection s = section_for(m.atoms);
    parallel_for(dirs.size(), [&](std::size_t k) {
      const auto sol = solve_section_support(s, dirs[k]);
      vals[k] = sol.value;
      mults[k] = sol.multiplier;
    });
    const double r = *std::min_element(vals.begin(), vals.end());
    out.history.push_back(r);
    if (r > best) {
      best = r;
      best_atoms = m.atoms;
    }

    const double tau = opt.softness * std::max(std::abs(r), 1e-12);
    double z = 0.0;
    grad.setZero();
    std::vector<std::pair<std::size_t, double>> active;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const double p = std::exp(-(vals[k] - r) / tau);
      if (p > 1e-10) active.emplace_back(k, p);
      z += p;
    }
    for (const auto& [k, p] : active) {
      const Eigen::VectorXd chat = unit_v.transpose() * dirs[k];
      const double mu = mults[k];
      for (std::size_t i = 0; i < n; ++i) {
        const double g = chat[static_cast<Eigen::Index>(i)] - mu * unit_t[i];
        if (g > 0.0) grad[static_cast<Eigen::Index>(i)] += (p / z) * g;
      }
    }
    if (symmetric_problem) {
      for (std::size_t i = 0; i < half; ++i) {
        const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(i + half);
        grad[a] = grad[b] = 0.5 * (grad[a] + grad[b]);
      }
    }
    grad.array() -= grad.mean();
    const double gmax = grad.cwiseAbs().maxCoeff();
    if (!(gmax > 0.0)) break;

    const double eta = opt.step / std::sqrt(1.0 + it) / static_cast<double>(n) / gmax;
    std::vector<Atom> next = m.atoms;
    for (std::size_t i = 0; i < n; ++i)
      next[i].weight += eta * grad[static_cast<Eigen::Index>(i)];
    if (!project_weights(next, map.bob_bloch)) continue;
    if (symmetric_problem) {
      for (std::size_t i = 0; i < half; ++i)
        next[i].weight = next[i + half].weight = 0.5 * (next[i].weight + next[i + half].weight);
    }
    m.atoms = std::move(next);
  }

  out.initial = out.history.empty() ? 0.0 : out.history.front();
  out.ascended = !out.history.empty() && best > out.initial + 1e-12;
  out.measure = m;
  out.measure.atoms = best_atoms;
  out.measure.symmetric = out.measure.has_antipodal_pairs();
  out.radius = principal_radius(out.measure, map, opt.final_directions);
  out.radius.method = Method::optimized_lower_bound;
  out.radius.verdict = classify(out.radius.value, out.radius.error_estimate, out.radius.method);
  std::ostringstream os;
  os << "optimized:grid=" << opt.grid << ",iters=" << opt.iters << ",seed=" << opt.seed;
  out.radius.ansatz = os.str();
  return out;
}

struct OptimizerBudget {
  OptimizerOptions optimizer;
  /// |a|, |b| below which a state is treated as a T-state.
  double tstate_tol = 1e-8;
  double quadrature_tol = 1e-8;
};

/// Degenerate map: separable, hence unsteerable. T-state: exact closed form.
/// Anything else: optimized lower bound, which never certifies steerability.
inline RadiusResult critical_radius(const TwoQubitState& state, const OptimizerBudget& budget = {}) {
  const EprMap map = epr_map(state);
  if (map.degenerate) {
    RadiusResult r;
    r.value = std::numeric_limits<double>::infinity();
    r.method = Method::degenerate_separable;
    r.verdict = Verdict::unsteerable;
    r.ansatz = "none";
    return r;
  }
  if (map.is_tstate(budget.tstate_tol))
    return tstate_critical_radius(canonicalize_tstate(map, budget.tstate_tol),
                                  budget.quadrature_tol);
  return optimize_ansatz(map, budget.optimizer).radius;
}

/// Principal radius of weights + perturbation. The perturbation must be
/// centrally symmetric, sum to zero, and keep every weight nonnegative.
inline RadiusResult perturbed_radius(const SphereMeasure& base, const std::vector<double>& v,
                                     const EprMap& map, int directions = kDefaultDirections) {
  if (v.size() != base.size() || !base.has_antipodal_pairs())
    throw Error(ErrorKind::InvalidPerturbation,
                "perturbation needs an antipodal base measure of the same size");
  const std::size_t half = v.size() / 2;
  double sum = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    scale = std::max(scale, std::abs(v[i]));
  }
  for (std::size_t i = 0; i < half; ++i) {
    if (std::abs(v[i] - v[i + half]) > 1e-15 * std::max(scale, 1e-300)) {
      std::ostringstream os;
      os << "perturbation is not centrally symmetric at atom " << i << ": " << v[i] << " vs "
         << v[i + half];
      throw Error(ErrorKind::InvalidPerturbation, os.str());
    }
  }
  if (std::abs(sum) > 1e-12) {
    std::ostringstream os;
    os << "perturbation sums to " << sum;
    throw Error(ErrorKind::InvalidPerturbation, os.str());
  }
  SphereMeasure m = base;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m.atoms[i].weight += v[i];
    if (m.atoms[i].weight < 0.0)
      throw Error(ErrorKind::InvalidPerturbation, "perturbed weight is negative");
  }
  for (std::size_t i = 0; i < half; ++i) m.atoms[i + half].weight = m.atoms[i].weight;
  return principal_radius(m, map, directions);
}

struct PerturbationReport {
  double base_radius = 0.0;  // discretized Jevtic measure
  double closed_form = 0.0;
  double tolerance = 0.0;    // 3 x discretization error
  double max_violation = 0.0;
  int violations = 0;
  int trials = 0;
  std::vector<double> radii;
};

/// Direction count for perturbed radii. A sparser sweep can only overestimate
/// a minimum, so the check against the base radius stays conservative.
inline constexpr int kTrialDirections = 2048;

/// Random centrally symmetric zero-sum perturbations of the discretized
/// Jevtic measure must not raise the principal radius beyond the tolerance.

inline PerturbationReport perturbation_test(const TStateForm& form, int trials, std::uint64_t seed,
                                            int grid = 4096, int directions = kDefaultDirections,
                                            int trial_directions = kTrialDirections) {
  const TStateForm diag = TStateForm::diagonal(form.t_diag);
  const EprMap map = epr_map(tstate(form.t_diag));
  const SphereMeasure base = jevtic_measure(diag, grid);

  PerturbationReport rep;
  const RadiusResult rj = principal_radius(base, map, directions);
  rep.base_radius = rj.value;
  rep.closed_form = tstate_critical_radius(diag).value;
  const double discretization =
      std::max({std::abs(rep.closed_form - rep.base_radius), rj.error_estimate, 1e-9});
  rep.tolerance = 3.0 * discretization;
  rep.max_violation = -std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed);
  const std::size_t half = base.size() / 2;
  std::vector<double> v(base.size());
  for (int trial = 0; trial < trials; ++trial) {
    const double amplitude = 0.05 + 0.45 * uniform01(rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      const double xi = 2.0 * uniform01(rng) - 1.0;
      v[i] = v[i + half] = xi;
      mean += 2.0 * base.atoms[i].weight * xi;
    }
    for (std::size_t i = 0; i < base.size(); ++i)
      v[i] = amplitude * base.atoms[i].weight * (v[i] - mean);
    // Remove the rounding residue of the sum symmetrically.
    double sum = 0.0;
    for (double x : v) sum += x;
    for (std::size_t i = 0; i < base.size(); ++i) v[i] -= sum * base.atoms[i].weight;
    const double r = perturbed_radius(base, v, map, trial_directions).value;
    rep.radii.push_back(r);
    const double violation = r - rep.base_radius;
    rep.max_violation = std::max(rep.max_violation, violation);
    if (violation > rep.tolerance) ++rep.violations;
    ++rep.trials;
  }
  return rep;
}

/// min over n0 of 2 n0.b(n0) / |T n0| with b(n0) the spatial part of the
/// lambda = 0 boundary point; the tangent-normal route to the principal radius
/// of a T-state, evaluated without the pulled-back section.
inline SupportMinimum tangent_normal_radius(const SphereMeasure& measure, const Vec3& t_diag,
                                            int directions = kDefaultDirections,
                                            int polish = kPolishCandidates) {
  auto f = [&](const Vec3& n0) {
    const Vec3 b = spatial(boundary_point(measure, n0, 0.0, TieRule::all()));
    return 2.0 * n0.dot(b) / t_diag.cwiseProduct(n0).norm();
  };
  const auto pts = fibonacci_points(directions);
  std::vector<double> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) { vals[k] = f(pts[k]); });
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(polish), pts.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  SupportMinimum best{vals[order[0]], pts[order[0]], vals[order[0]]};
  const double step = 0.5 * std::sqrt(4.0 * kPi / directions);
  for (std::size_t k = 0; k < keep; ++k) {
    const auto p = minimize_on_sphere(f, pts[order[k]], step);
    if (p.value < best.value) {
      best.value = p.value;
      best.direction = p.direction;
    }
  }
  return best;
}

}  // namespace steer
