#pragma once

// Polyhedral box (zonotope) generated by a hidden-state ensemble, its section
// by Alice's Bloch hyperplane, support functions and membership.
//
// Sections are handled in the pulled-back frame: every generator is mapped
// through phi^{-1}, so the hyperplane becomes {x_0 = 1} and the steering
// ellipsoid becomes the unit ball around (1, 0, 0, 0).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "steer/ansatz.hpp"
#include "steer/qstate.hpp"

namespace steer {

struct SteeringBox {
  std::vector<Vec4> generators;  // w_i (1, n_i)
  Vec4 principal_vertex = Vec4::Zero();

  std::size_t size() const { return generators.size(); }

  /// h(y) = max over the box of y.x = sum_i max(0, y.g_i).
  double support(const Vec4& y) const {
    double s = 0.0;
    for (const auto& g : generators) s += std::max(0.0, y.dot(g));
    return s;
  }
};

inline SteeringBox build_box(const SphereMeasure& measure) {
  if (measure.atoms.empty()) throw Error(ErrorKind::EmptyMeasure, "measure has no atoms");
  SteeringBox box;
  box.generators.reserve(measure.size());
  for (const auto& a : measure.atoms) {
    box.generators.push_back(lift(a.weight, a.n));
    box.principal_vertex += box.generators.back();
  }
  return box;
}

struct PulledBackSection {
  std::vector<double> gen_t;  // 0th coordinate of phi^{-1} g_i
  Eigen::Matrix3Xd gen_v;     // spatial coordinates of phi^{-1} g_i
  double level = 1.0;
  bool all_positive = true;

  std::size_t size() const { return gen_t.size(); }

  Vec4 pulled_vertex() const {
    Vec4 s = Vec4::Zero();
    s[0] = std::accumulate(gen_t.begin(), gen_t.end(), 0.0);
    s.tail<3>() = gen_v.rowwise().sum();
    return s;
  }
};

/// Maps each generator through phi^{-1}. Throws DegenerateMap.
inline PulledBackSection pull_back(const SteeringBox& box, const EprMap& map) {
  const Mat4 inv = map.inverse();
  PulledBackSection s;
  const auto m = static_cast<Eigen::Index>(box.size());
  s.gen_t.resize(box.size());
  s.gen_v.resize(3, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec4 u = inv * box.generators[static_cast<std::size_t>(i)];
    s.gen_t[static_cast<std::size_t>(i)] = u[0];
    s.gen_v.col(i) = u.tail<3>();
    if (!(u[0] > 0.0)) s.all_positive = false;
  }
  return s;
}

struct SupportSolution {
  double value = 0.0;
  /// Optimal dual multiplier: the support equals
  /// mu * level + sum_i max(0, c_i - mu t_i).
  double multiplier = 0.0;
  std::vector<double> beta;
};

namespace detail {

struct KnapsackResult {
  double value = 0.0;
  double multiplier = 0.0;
};

struct Item {
  double ratio;
  double t;
  int index;
};

struct Scratch {
  std::vector<double> c, t2, c2, beta2;
  std::vector<int> origin;
  std::vector<Item> items;
  std::vector<double> sub_t, sub_c;
  std::vector<Item> sample;
};

inline Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

/// max sum beta_i c_i  s.t.  sum beta_i t_i = level, 0 <= beta_i <= 1, t_i > 0.
/// Greedy in decreasing c_i / t_i with one split atom; the split is located
/// by three-way partitioning, so the cost is linear on average. Equal ratios
/// are filled in increasing atom index.
inline KnapsackResult knapsack(const double* t, const double* c, int m, double level,
                               std::vector<Item>& items, double* beta);

/// Value-only knapsack for large m: a strided sample brackets the split ratio,
/// one pass sums the atoms above the bracket and keeps the ones inside it, and
/// the exact knapsack runs on the survivors. Returns nullopt if the bracket
/// misses the split.
inline std::optional<KnapsackResult> bracketed_knapsack(const double* t, const double* c, int m,
                                                         double level, Scratch& sc) {
  constexpr int kSample = 256, kMargin = 10;
  const int stride = m / kSample;
  auto& sample = sc.sample;
  sample.resize(kSample);
  for (int j = 0; j < kSample; ++j) {
    const int i = j * stride;
    sample[static_cast<std::size_t>(j)] = {c[i] / t[i], t[i], i};
  }
  std::sort(sample.begin(), sample.end(),
            [](const Item& a, const Item& b) { return a.ratio > b.ratio; });
  const double scale = static_cast<double>(m) / kSample;
  double cum = 0.0;
  int q = kSample - 1;
  for (int j = 0; j < kSample; ++j) {
    cum += sample[static_cast<std::size_t>(j)].t * scale;
    if (cum >= level) {
      q = j;
      break;
    }
  }
  const double hi = q - kMargin < 0 ? std::numeric_limits<double>::infinity()
                                    : sample[static_cast<std::size_t>(q - kMargin)].ratio;
  const double lo = q + kMargin >= kSample ? -std::numeric_limits<double>::infinity()
                                           : sample[static_cast<std::size_t>(q + kMargin)].ratio;

  sc.sub_t.resize(static_cast<std::size_t>(m));
  sc.sub_c.resize(static_cast<std::size_t>(m));
  double* st = sc.sub_t.data();
  double* scv = sc.sub_c.data();
  double ta = 0.0, ca = 0.0, tb = 0.0;
  int n = 0;
  for (int i = 0; i < m; ++i) {
    const double r = c[i] / t[i];
    const bool above = r > hi;
    const bool inside = !above && r >= lo;
    ta += above ? t[i] : 0.0;
    ca += above ? c[i] : 0.0;
    tb += inside ? t[i] : 0.0;
    st[n] = t[i];
    scv[n] = c[i];
    n += inside ? 1 : 0;
  }
  if (!(ta < level && level <= ta + tb)) return std::nullopt;
  auto r = knapsack(st, scv, n, level - ta, sc.items, nullptr);
  r.value += ca;
  return r;
}

inline KnapsackResult knapsack(const double* t, const double* c, int m, double level,
                               std::vector<Item>& items, double* beta) {
  KnapsackResult res;
  if (beta) std::fill(beta, beta + m, 0.0);
  if (m == 0) return res;
  items.resize(static_cast<std::size_t>(m));
  double max_ratio = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double r = c[i] / t[i];
    items[static_cast<std::size_t>(i)] = {r, t[i], i};
    max_ratio = std::max(max_ratio, r);
  }
  res.multiplier = max_ratio;
  if (level <= 0.0) return res;

  Item* it = items.data();
  int lo = 0, hi = m;
  double acc_t = 0.0, acc_c = 0.0;
  while (lo < hi) {
    const double a = it[lo].ratio, b = it[lo + (hi - lo) / 2].ratio, z = it[hi - 1].ratio;
    const double pivot = std::max(std::min(a, b), std::min(std::max(a, b), z));
    // [lo, gt) > pivot, [gt, lt) == pivot, [lt, hi) < pivot
    int gt = lo, i = lo, lt = hi;
    double tg = 0.0, cg = 0.0;
    while (i < lt) {
      const double v = it[i].ratio;
      if (v > pivot) {
        tg += it[i].t;
        cg += it[i].t * v;
        std::swap(it[i++], it[gt++]);
      } else if (v < pivot) {
        std::swap(it[i], it[--lt]);
      } else {
        ++i;
      }
    }
    if (gt > lo && acc_t + tg >= level) {
      hi = gt;
      continue;
    }
    acc_t += tg;
    acc_c += cg;
    if (beta)
      for (int k = lo; k < gt; ++k) beta[it[k].index] = 1.0;
    if (lt - gt > 1)
      std::sort(it + gt, it + lt, [](const Item& x, const Item& y) { return x.index < y.index; });
    res.multiplier = pivot;
    for (int k = gt; k < lt; ++k) {
      const int j = it[k].index;
      if (acc_t + t[j] >= level) {
        const double frac = std::clamp((level - acc_t) / t[j], 0.0, 1.0);
        res.value = acc_c + frac * c[j];
        if (beta) beta[j] = frac;
        return res;
      }
      acc_t += t[j];
      acc_c += c[j];
      if (beta) beta[j] = 1.0;
    }
    lo = lt;
  }
  // Level equals the total mass up to rounding: every atom is taken.
  res.value = acc_c;
  return res;
}

inline KnapsackResult solve_knapsack(const double* t, const double* c, int m, double level,
                                     Scratch& sc, double* beta) {
  if (!beta && m >= 1024 && level > 0.0)
    if (auto r = bracketed_knapsack(t, c, m, level, sc)) return *r;
  return knapsack(t, c, m, level, sc.items, beta);
}

}  // namespace detail

/// Maximizes d . sum beta_i v_i over beta in [0,1]^m with sum beta_i t_i = level.
/// Generators with t_i < 0 are handled by the substitution beta -> 1 - beta,
/// which turns the problem back into a knapsack with positive masses.
/// Throws EmptySection if no beta meets the level.
inline SupportSolution solve_section_support(const PulledBackSection& s, const Vec3& d,
                                             bool want_beta = false) {
  auto& sc = detail::scratch();
  const int m = static_cast<int>(s.size());
  sc.c.resize(static_cast<std::size_t>(m));
  Eigen::Map<Eigen::VectorXd>(sc.c.data(), m).noalias() = s.gen_v.transpose() * d;

  SupportSolution out;
  if (want_beta) out.beta.assign(static_cast<std::size_t>(m), 0.0);

  auto empty = [&](double level, double capacity) {
    std::ostringstream os;
    os << "section level " << level << " outside attainable range [0, " << capacity << "]";
    return Error(ErrorKind::EmptySection, os.str());
  };

  if (s.all_positive) {
    const double total = std::accumulate(s.gen_t.begin(), s.gen_t.end(), 0.0);
    if (s.level < 0.0 || s.level > total * (1.0 + 1e-12)) throw empty(s.level, total);
    const auto r = detail::solve_knapsack(s.gen_t.data(), sc.c.data(), m, s.level, sc,
                                          want_beta ? out.beta.data() : nullptr);
    out.value = r.value;
    out.multiplier = r.multiplier;
    return out;
  }

  double max_abs_t = 0.0;
  for (double t : s.gen_t) max_abs_t = std::max(max_abs_t, std::abs(t));
  const double zero_band = 1e-14 * max_abs_t;
  sc.t2.clear();
  sc.c2.clear();
  sc.origin.clear();
  double constant = 0.0, level = s.level, capacity = 0.0;
  for (int i = 0; i < m; ++i) {
    const double t = s.gen_t[static_cast<std::size_t>(i)];
    const double c = sc.c[static_cast<std::size_t>(i)];
    if (t > zero_band) {
      sc.t2.push_back(t);
      sc.c2.push_back(c);
      sc.origin.push_back(i);
      capacity += t;
    } else if (t < -zero_band) {
      sc.t2.push_back(-t);
      sc.c2.push_back(-c);
      sc.origin.push_back(-i - 1);
      constant += c;
      level -= t;
      capacity -= t;
    } else if (c > 0.0) {
      constant += c;
      if (want_beta) out.beta[static_cast<std::size_t>(i)] = 1.0;
    }
  }
  if (level < -1e-12 * capacity || level > capacity * (1.0 + 1e-12)) throw empty(level, capacity);
  const int k = static_cast<int>(sc.t2.size());
  sc.beta2.resize(static_cast<std::size_t>(k));
  const auto r = detail::solve_knapsack(sc.t2.data(), sc.c2.data(), k, std::max(level, 0.0), sc,
                                        want_beta ? sc.beta2.data() : nullptr);
  out.value = constant + r.value;
  out.multiplier = r.multiplier;
  if (want_beta) {
    for (int j = 0; j < k; ++j) {
      const int o = sc.origin[static_cast<std::size_t>(j)];
      const double b = sc.beta2[static_cast<std::size_t>(j)];
      if (o >= 0)
        out.beta[static_cast<std::size_t>(o)] = b;
      else
        out.beta[static_cast<std::size_t>(-o - 1)] = 1.0 - b;
    }
  }
  return out;
}

/// Support of the section, relative to the ellipsoid center, in direction d.
inline double section_support(const PulledBackSection& s, const Vec3& d) {
  require_unit(d, "support direction", 1e-9);
  return solve_section_support(s, d).value;
}

struct MembershipResult {
  bool feasible = false;
  std::vector<double> beta;
  /// |sum beta_i g_i - point| for the returned beta.
  double residual = 0.0;
  /// y with y.point > h_box(y); present when infeasibility is certified.
  std::optional<Vec4> separator;
  /// separator.point - h_box(separator): a lower bound on the distance from
  /// the point to the box. Zero without a separator.
  double gap = 0.0;
  int iterations = 0;
};

/// Decides point in box and returns the beta closest to (1/2, ..., 1/2).
/// Solves the dual of  min |beta - 1/2|^2  s.t.  G beta = point, 0 <= beta <= 1
/// by damped semismooth Newton in four variables.
inline MembershipResult box_membership(const SteeringBox& box, const Vec4& point,
                                       double tol = 1e-9, int max_iter = 200) {
  const std::size_t m = box.size();
  const Vec4 q = point - 0.5 * box.principal_vertex;
  double gram_trace = 0.0;
  for (const auto& g : box.generators) gram_trace += g.squaredNorm();
  const double ridge = 1e-13 * std::max(gram_trace, 1e-300);

  auto phi = [](double s) { return std::abs(s) <= 0.5 ? 0.5 * s * s : 0.5 * std::abs(s) - 0.125; };
  auto dual = [&](const Vec4& lam) {
    double d = lam.dot(q);
    for (const auto& g : box.generators) d -= phi(g.dot(lam));
    return d;
  };
  auto separation = [&](const Vec4& y) {
    const double n = y.norm();
    if (!(n > 0.0) || !std::isfinite(n)) return -1.0;
    const Vec4 u = y / n;
    double h = 0.0;
    for (const auto& g : box.generators) h += 0.5 * std::abs(g.dot(u));
    return u.dot(q) - h;
  };
  auto certifies = [&](const Vec4& y) { return separation(y) > 1e-12 * (1.0 + q.norm()); };

  MembershipResult res;
  res.beta.assign(m, 0.5);
  Vec4 lam = Vec4::Zero();
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<double> best_beta = res.beta;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    Vec4 grad = q;
    Mat4 hess = Mat4::Zero();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec4& g = box.generators[i];
      const double s = g.dot(lam);
      const double delta = std::clamp(s, -0.5, 0.5);
      res.beta[i] = 0.5 + delta;
      grad -= delta * g;
      if (std::abs(s) < 0.5) hess.noalias() += g * g.transpose();
    }
    const double residual = grad.norm();
    if (residual < best_residual) {
      best_residual = residual;
      best_beta = res.beta;
    }
    if (residual <= 1e-3 * tol) break;
    if (certifies(lam) || certifies(grad)) {
      res.separator = certifies(lam) ? Vec4(lam.normalized()) : Vec4(grad.normalized());
      res.gap = separation(*res.separator);
      break;
    }
    hess.diagonal().array() += ridge;
    const Vec4 step = hess.ldlt().solve(grad);
    const double base = dual(lam);
    const double slope = grad.dot(step);
    // Near the solution dual differences drop below rounding, so a step that
    // halves the residual is accepted without the ascent test.
    auto accept = [&](double alpha) {
      const Vec4 trial = lam + alpha * step;
      if (dual(trial) >= base + 1e-4 * alpha * slope) return true;
      Vec4 g = q;
      for (const auto& gen : box.generators) g -= std::clamp(gen.dot(trial), -0.5, 0.5) * gen;
      return g.norm() <= 0.5 * residual;
    };
    double alpha = 1.0;
    while (alpha > 1e-30 && !accept(alpha)) alpha *= 0.5;
    if (alpha <= 1e-30) break;
    lam += alpha * step;
  }
  res.beta = best_beta;
  res.residual = best_residual;
  res.feasible = !res.separator && best_residual <= tol;
  return res;
}

/// How atoms lying exactly on the cutting shell n0.n = lambda are weighted.
struct TieRule {
  double fraction = 1.0;
  static TieRule none() { return {0.0}; }
  static TieRule all() { return {1.0}; }
  static TieRule partial(double gamma) { return {std::clamp(gamma, 0.0, 1.0)}; }
};

/// Band around the shell inside which n0.n counts as equal to lambda.
inline constexpr double kShellTol = 1e-12;

/// sum over atoms with n0.n > lambda of w (1, n), plus the tie fraction of the
/// atoms with n0.n = lambda.
inline Vec4 boundary_point(const SphereMeasure& measure, const Vec3& n0, double lambda,
                           TieRule ties = TieRule::all()) {
  Vec4 sum = Vec4::Zero();
  for (const auto& a : measure.atoms) {
    const double d = n0.dot(a.n);
    if (d > lambda + kShellTol)
      sum += lift(a.weight, a.n);
    else if (d >= lambda - kShellTol)
      sum += lift(ties.fraction * a.weight, a.n);
  }
  return sum;
}

struct LambdaSolution {
  double lambda = 0.0;
  double gamma = 0.0;
  /// Included mass at (lambda, gamma).
  double mass = 0.0;
};

/// Finds the cut level lambda and shell fraction gamma at which the included
/// mass equals target.
inline LambdaSolution solve_lambda(const SphereMeasure& measure, const Vec3& n0, double target) {
  if (!(target >= 0.0 && target <= 1.0 + 1e-12)) {
    std::ostringstream os;
    os << "target mass " << target << " outside [0, 1]";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  if (measure.atoms.empty()) throw Error(ErrorKind::EmptyMeasure, "measure has no atoms");
  const std::size_t m = measure.size();
  std::vector<double> dot(m);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) {
    dot[i] = n0.dot(measure.atoms[i].n);
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dot[a] > dot[b]; });

  // Walk shells in decreasing n0.n until the running mass reaches the target.
  double lambda = dot[order.back()];
  double acc = 0.0;
  for (std::size_t k = 0; k < m;) {
    const double lead = dot[order[k]];
    double shell = 0.0;
    std::size_t e = k;
    while (e < m && lead - dot[order[e]] <= kShellTol) shell += measure.atoms[order[e++]].weight;
    if (acc + shell >= target) {
      lambda = lead;
      break;
    }
    acc += shell;
    k = e;
  }

  // Recount with the same band as boundary_point so the two agree exactly.
  double above = 0.0, shell = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (dot[i] > lambda + kShellTol)
      above += measure.atoms[i].weight;
    else if (dot[i] >= lambda - kShellTol)
      shell += measure.atoms[i].weight;
  }
  LambdaSolution sol;
  sol.lambda = lambda;
  sol.gamma = shell > 0.0 ? std::clamp((target - above) / shell, 0.0, 1.0) : 0.0;
  sol.mass = above + sol.gamma * shell;
  return sol;
}

}  // namespace steer
