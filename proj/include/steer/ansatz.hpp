#pragma once

// Measures on Bob's Bloch sphere. A measure is a list of atoms (w, n); atom i
// stands for the hidden state w (I + n.sigma) / 2.

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "steer/qstate.hpp"
#include "steer/sphere.hpp"

namespace steer {

struct Atom {
  double weight;
  Vec3 n;
};

/// Tolerance on the principal-vertex condition sum w n = b for discretized measures.
inline constexpr double kBarycenterTol = 1e-3;

struct SphereMeasure {
  std::vector<Atom> atoms;
  /// Atoms i and i + size/2 are exact antipodes with equal weight.
  bool symmetric = false;
  Vec3 barycenter_target = Vec3::Zero();

  std::size_t size() const { return atoms.size(); }

  double total_weight() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.weight;
    return s;
  }

  Vec3 barycenter() const {
    Vec3 s = Vec3::Zero();
    for (const auto& a : atoms) s += a.weight * a.n;
    return s;
  }

  double barycenter_error() const { return (barycenter() - barycenter_target).norm(); }

  /// True when the first and second halves pair up as (w, n), (w, -n).
  bool has_antipodal_pairs() const {
    if (atoms.size() % 2 != 0) return false;
    const std::size_t half = atoms.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const auto& a = atoms[i];
      const auto& b = atoms[i + half];
      if (a.weight != b.weight || a.n != -b.n) return false;
    }
    return true;
  }

  /// Throws EmptyMeasure or InvalidArgument if the measure is unusable.
  void validate(double weight_tol = 1e-10) const {
    if (atoms.empty()) throw Error(ErrorKind::EmptyMeasure, "measure has no atoms");
    for (const auto& a : atoms) {
      if (!(a.weight >= 0.0)) {
        std::ostringstream os;
        os << "negative atom weight " << a.weight;
        throw Error(ErrorKind::InvalidArgument, os.str());
      }
      require_unit(a.n, "atom direction", 1e-9);
    }
    const double dev = std::abs(total_weight() - 1.0);
    if (!(dev <= weight_tol)) {
      std::ostringstream os;
      os << "weights sum to 1 + " << total_weight() - 1.0 << " (tolerance " << weight_tol << ")";
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
  }
};

/// N_T / (n^T T^-2 n)^2 for the diagonal correlation T = diag(t_diag).
struct JevticDensity {
  Vec3 t_diag;
  double n_t;
  /// Relative difference between the last two quadrature levels.
  double rel_error = 0.0;
  int quadrature_order = 0;

  double unnormalized(const Vec3& n) const {
    const double q = n.x() * n.x() / (t_diag.x() * t_diag.x()) +
                     n.y() * n.y() / (t_diag.y() * t_diag.y()) +
                     n.z() * n.z() / (t_diag.z() * t_diag.z());
    return 1.0 / (q * q);
  }
};

inline void require_nondegenerate(const Vec3& t) {
  if (t.cwiseAbs().minCoeff() < kDegenerateT) {
    std::ostringstream os;
    os << "min |t_i| = " << t.cwiseAbs().minCoeff() << " below " << kDegenerateT;
    throw Error(ErrorKind::DegenerateT, os.str());
  }
}

/// N_T by the antipodally symmetric product rule, doubling the order until two
/// successive levels agree to rel_tol.
inline JevticDensity normalize_jevtic(const Vec3& t_diag, double rel_tol = 1e-8) {
  require_nondegenerate(t_diag);
  JevticDensity density{t_diag, 1.0};
  auto integrand = [&](const Vec3& n) { return density.unnormalized(n); };
  constexpr int kMaxOrder = 2048;
  double previous = integrate_sphere(integrand, 8);
  for (int order = 16; order <= kMaxOrder; order *= 2) {
    const double current = integrate_sphere(integrand, order);
    const double rel = std::abs(current - previous) / std::abs(current);
    if (rel <= rel_tol) {
      density.n_t = 1.0 / current;
      density.rel_error = rel;
      density.quadrature_order = order;
      return density;
    }
    previous = current;
  }
  std::ostringstream os;
  os << "no agreement to " << rel_tol << " by order " << kMaxOrder;
  throw Error(ErrorKind::QuadratureNotConverged, os.str());
}

inline double evaluate_jevtic(const JevticDensity& density, const Vec3& n) {
  require_unit(n, "evaluation point");
  return density.n_t * density.unnormalized(n);
}

/// Quasi-uniform grid with weights uniform or proportional to density(frame * n).
/// Symmetric grids are built from count/2 points and their antipodes.
inline SphereMeasure fibonacci_grid(int count, const std::optional<JevticDensity>& density = {},
                                    bool symmetric = true, const Mat3& frame = Mat3::Identity()) {
  if (count < 1 || (symmetric && (count < 2 || count % 2 != 0))) {
    std::ostringstream os;
    os << "grid count " << count << (symmetric ? " must be even and >= 2" : " must be >= 1");
    throw Error(ErrorKind::BadCount, os.str());
  }
  const auto points = symmetric ? antipodal_points(count) : fibonacci_points(count);
  SphereMeasure m;
  m.symmetric = symmetric;
  m.atoms.reserve(points.size());
  for (const auto& p : points) {
    const double w = density ? density->unnormalized(frame * p) : 1.0;
    m.atoms.push_back({w, p});
  }
  double total = 0.0;
  for (const auto& a : m.atoms) total += a.weight;
  for (auto& a : m.atoms) a.weight /= total;
  return m;
}

/// Discretized Jevtic measure for a T-state in its original frame: the
/// density is evaluated at bob_rotation * n.
inline SphereMeasure jevtic_measure(const TStateForm& form, int count, double rel_tol = 1e-8) {
  const JevticDensity density = normalize_jevtic(form.t_diag, rel_tol);
  return fibonacci_grid(count, density, true, form.bob_rotation);
}

/// Least-squares correction of the weights onto sum w = 1, sum w n = target,
/// followed by clipping; atoms clipped to zero stay fixed and the remaining
/// weights are projected again. Returns false if infeasible within max_rounds.
inline bool project_weights(std::vector<Atom>& atoms, const Vec3& target, int max_rounds = 10) {
  const std::size_t m = atoms.size();
  std::vector<char> free(m, 1);
  const Vec4 rhs(1.0, target.x(), target.y(), target.z());
  for (int round = 0; round < max_rounds; ++round) {
    Mat4 gram = Mat4::Zero();
    Vec4 current = Vec4::Zero();
    for (std::size_t i = 0; i < m; ++i) {
      if (!free[i]) continue;
      const Vec4 a(1.0, atoms[i].n.x(), atoms[i].n.y(), atoms[i].n.z());
      gram += a * a.transpose();
      current += atoms[i].weight * a;
    }
    const Eigen::LDLT<Mat4> ldlt(gram);
    const Vec4 mult = ldlt.solve(current - rhs);
    if (!mult.allFinite() || ldlt.info() != Eigen::Success) return false;
    bool clipped = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (!free[i]) continue;
      const Vec4 a(1.0, atoms[i].n.x(), atoms[i].n.y(), atoms[i].n.z());
      atoms[i].weight -= a.dot(mult);
      if (atoms[i].weight < 0.0) {
        atoms[i].weight = 0.0;
        free[i] = 0;
        clipped = true;
      }
    }
    if (!clipped) return true;
  }
  return false;
}

/// Copy of the measure with weights projected onto its barycenter target.
inline SphereMeasure projected(SphereMeasure m) {
  if (!project_weights(m.atoms, m.barycenter_target)) {
    std::ostringstream os;
    os << "cannot place barycenter at (" << m.barycenter_target.transpose()
       << ") with nonnegative weights";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  m.symmetric = m.symmetric && m.has_antipodal_pairs();
  return m;
}

}  // namespace steer
