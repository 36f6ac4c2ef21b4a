#pragma once

// Point sets, quadrature and local search on the unit sphere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "steer/types.hpp"

namespace steer {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; the library's normal_distribution is implementation-defined.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  for (;;) {
    Vec3 v(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    const double n = v.norm();
    if (n > 1e-8) return v / n;
  }
}

/// Haar-random rotation from a uniformly random unit quaternion.
inline Mat3 random_rotation(std::mt19937_64& rng) {
  Eigen::Vector4d q(standard_normal(rng), standard_normal(rng), standard_normal(rng),
                    standard_normal(rng));
  q.normalize();
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

/// Fibonacci lattice: count quasi-uniform points, z stratified in equal-area bands.
inline std::vector<Vec3> fibonacci_points(int count) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

/// count/2 Fibonacci points followed by their antipodes (count must be even),
/// so point i + count/2 is exactly -point i.
inline std::vector<Vec3> antipodal_points(int count) {
  const int half = count / 2;
  auto pts = fibonacci_points(half);
  pts.reserve(static_cast<std::size_t>(2 * half));
  for (int i = 0; i < half; ++i) pts.push_back(-pts[static_cast<std::size_t>(i)]);
  return pts;
}

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? x : p1;
      const double pn1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return rule;
}

/// Product rule: Gauss-Legendre in z = cos(theta) with `order` nodes times the
/// periodic trapezoid rule in phi with 2*order nodes. The node set is closed
/// under n -> -n.
template <class F>
double integrate_sphere(F&& f, int order) {
  const GaussRule rule = gauss_legendre(order);
  const int nphi = 2 * order;
  const double dphi = 2.0 * kPi / nphi;
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    const double z = rule.nodes[static_cast<std::size_t>(i)];
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ring = 0.0;
    for (int k = 0; k < nphi; ++k) {
      const double phi = (k + 0.5) * dphi;
      ring += f(Vec3(r * std::cos(phi), r * std::sin(phi), z));
    }
    total += rule.weights[static_cast<std::size_t>(i)] * ring * dphi;
  }
  return total;
}

/// Two unit vectors completing d to an orthonormal frame.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& d) {
  const Vec3 helper = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e1 = d.cross(helper).normalized();
  Vec3 e2 = d.cross(e1);
  return {e1, e2};
}

struct SphereMinimum {
  double value;
  Vec3 direction;
  int evaluations;
};

/// Nelder-Mead on the chart a, b -> normalize(start + a e1 + b e2).
inline SphereMinimum minimize_on_sphere(const std::function<double(const Vec3&)>& f,
                                        const Vec3& start, double step, int max_evals = 300,
                                        double ftol = 1e-13) {
  const auto [e1, e2] = tangent_frame(start);
  auto point = [&](const Eigen::Vector2d& p) -> Vec3 {
    return (start + p[0] * e1 + p[1] * e2).normalized();
  };
  std::array<Eigen::Vector2d, 3> x = {Eigen::Vector2d(0, 0), Eigen::Vector2d(step, 0),
                                      Eigen::Vector2d(0, step)};
  std::array<double, 3> fx{};
  int evals = 0;
  auto eval = [&](const Eigen::Vector2d& p) {
    ++evals;
    return f(point(p));
  };
  for (int i = 0; i < 3; ++i) fx[i] = eval(x[i]);

  while (evals < max_evals) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const int lo = order[0], mid = order[1], hi = order[2];
    if (fx[hi] - fx[lo] <= ftol && (x[hi] - x[lo]).norm() < 1e-9) break;
    if ((x[hi] - x[lo]).norm() < 1e-12 && (x[mid] - x[lo]).norm() < 1e-12) break;

    const Eigen::Vector2d centroid = 0.5 * (x[lo] + x[mid]);
    const Eigen::Vector2d xr = centroid + (centroid - x[hi]);
    const double fr = eval(xr);
    if (fr < fx[lo]) {
      const Eigen::Vector2d xe = centroid + 2.0 * (centroid - x[hi]);
      const double fe = eval(xe);
      if (fe < fr) {
        x[hi] = xe;
        fx[hi] = fe;
      } else {
        x[hi] = xr;
        fx[hi] = fr;
      }
    } else if (fr < fx[mid]) {
      x[hi] = xr;
      fx[hi] = fr;
    } else {
      const bool outside = fr < fx[hi];
      const Eigen::Vector2d xc =
          outside ? Eigen::Vector2d(centroid + 0.5 * (xr - centroid))
                  : Eigen::Vector2d(centroid + 0.5 * (x[hi] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fx[hi])) {
        x[hi] = xc;
        fx[hi] = fc;
      } else {
        for (int i : {mid, hi}) {
          x[i] = x[lo] + 0.5 * (x[i] - x[lo]);
          fx[i] = eval(x[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (fx[i] < fx[best]) best = i;
  return {fx[best], point(x[best]), evals};
}

}  // namespace steer
