#pragma once

// Two-qubit states in Pauli coordinates, the EPR map from Alice to Bob, and
// the diagonal (T-state) normal form of the correlation block.
//
// Coordinates: an operator A on one qubit is written A = 1/2 sum_i X_i sigma_i
// with X_i = Tr(A sigma_i) and sigma_0 = I. A two-qubit state is
// rho = 1/4 sum_ij Theta_ij sigma_i (x) sigma_j.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "steer/types.hpp"

namespace steer {

inline const std::array<CMat2, 4>& pauli() {
  static const std::array<CMat2, 4> sigma = [] {
    std::array<CMat2, 4> s;
    const Complex i(0.0, 1.0);
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -i, i, 0;
    s[3] << 1, 0, 0, -1;
    return s;
  }();
  return sigma;
}

inline CMat4 kron(const CMat2& a, const CMat2& b) {
  CMat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

/// Validation thresholds applied by TwoQubitState::from_matrix.
struct StateTolerance {
  double hermitian = 1e-10;
  double trace = 1e-10;
  double eigenvalue = 1e-10;
};

class TwoQubitState {
 public:
  /// Validates rho, then stores its Hermitian part with the trace renormalized
  /// to one. Throws NotHermitian, BadTrace or NotPositive.
  static TwoQubitState from_matrix(const CMat4& rho, const StateTolerance& tol = {}) {
    const double asym = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= tol.hermitian)) {
      std::ostringstream os;
      os << "max |rho - rho^dagger| = " << asym << " exceeds " << tol.hermitian;
      throw Error(ErrorKind::NotHermitian, os.str());
    }
    const Complex tr = rho.trace();
    if (!(std::abs(tr - Complex(1.0, 0.0)) <= tol.trace)) {
      std::ostringstream os;
      os << "|Tr rho - 1| = " << std::abs(tr - Complex(1.0, 0.0)) << " exceeds " << tol.trace;
      throw Error(ErrorKind::BadTrace, os.str());
    }
    CMat4 herm = 0.5 * (rho + rho.adjoint());
    herm /= herm.trace().real();
    const double min_eig = Eigen::SelfAdjointEigenSolver<CMat4>(herm).eigenvalues().minCoeff();
    if (!(min_eig >= -tol.eigenvalue)) {
      std::ostringstream os;
      os << "smallest eigenvalue " << min_eig << " below " << -tol.eigenvalue;
      throw Error(ErrorKind::NotPositive, os.str());
    }
    return TwoQubitState(herm);
  }

  /// Builds rho = 1/4 sum Theta_ij sigma_i (x) sigma_j and validates it.
  static TwoQubitState from_theta(const Mat4& theta, const StateTolerance& tol = {}) {
    return from_matrix(reconstruct(theta), tol);
  }

  static CMat4 reconstruct(const Mat4& theta) {
    const auto& s = pauli();
    CMat4 rho = CMat4::Zero();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (theta(i, j) != 0.0) rho += (0.25 * theta(i, j)) * kron(s[i], s[j]);
    return rho;
  }

  const CMat4& rho() const { return rho_; }
  const Mat4& theta() const { return theta_; }

 private:
  explicit TwoQubitState(const CMat4& rho) : rho_(rho) {
    const auto& s = pauli();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) theta_(i, j) = (rho_ * kron(s[i], s[j])).trace().real();
    theta_(0, 0) = 1.0;
  }

  CMat4 rho_;
  Mat4 theta_;
};

/// Relative singular-value threshold below which the EPR map counts as degenerate.
inline constexpr double kDegenerateRatio = 1e-9;

/// The map A -> Tr_A[rho (A (x) I)] in Pauli coordinates: phi = Theta^T / 2.
struct EprMap {
  Mat4 phi;
  Vec3 alice_bloch;  // Theta_i0
  Vec3 bob_bloch;    // Theta_0j
  Mat3 correlation;  // Theta_ij, i, j >= 1
  double condition_ratio;  // smallest / largest singular value of phi
  bool degenerate;

  /// phi^{-1}; throws DegenerateMap when the map is degenerate.
  Mat4 inverse() const {
    if (degenerate) {
      std::ostringstream os;
      os << "singular-value ratio " << condition_ratio << " below " << kDegenerateRatio;
      throw Error(ErrorKind::DegenerateMap, os.str());
    }
    return phi.inverse();
  }

  /// Coordinates (1, b) of Bob's reduced state, the image of the identity.
  Vec4 reduced_state() const { return phi * Vec4(2.0, 0.0, 0.0, 0.0); }

  bool is_tstate(double tol) const {
    return alice_bloch.norm() <= tol && bob_bloch.norm() <= tol;
  }
};

/// EPR map of a coordinate matrix without checking that it is a state; the
/// geometry is defined for any Theta with Theta_00 = 1.
inline EprMap epr_map(const Mat4& theta) {
  EprMap map;
  map.phi = 0.5 * theta.transpose();
  map.alice_bloch = theta.block<3, 1>(1, 0);
  map.bob_bloch = theta.block<1, 3>(0, 1).transpose();
  map.correlation = theta.block<3, 3>(1, 1);
  const Eigen::Vector4d sv = Eigen::JacobiSVD<Mat4>(map.phi).singularValues();
  map.condition_ratio = sv[0] > 0.0 ? sv[3] / sv[0] : 0.0;
  map.degenerate = map.condition_ratio < kDegenerateRatio;
  return map;
}

inline EprMap epr_map(const TwoQubitState& state) { return epr_map(state.theta()); }

/// Bob's subnormalized conditional state for Alice's projector (I + x.sigma)/2.
inline Vec4 steering_outcome(const EprMap& map, const Vec3& measurement_bloch) {
  require_unit(measurement_bloch, "measurement Bloch vector");
  return map.phi * Vec4(1.0, measurement_bloch.x(), measurement_bloch.y(), measurement_bloch.z());
}

/// Correlation block in diagonal form: C = alice_rotation^T diag(t) bob_rotation,
/// both rotations proper, |t_1| >= |t_2| >= |t_3|.
struct TStateForm {
  Vec3 t_diag;
  Mat3 alice_rotation;
  Mat3 bob_rotation;

  Mat3 correlation() const {
    return alice_rotation.transpose() * t_diag.asDiagonal() * bob_rotation;
  }

  static TStateForm diagonal(const Vec3& t) { return {t, Mat3::Identity(), Mat3::Identity()}; }
};

inline constexpr double kDegenerateT = 1e-9;

inline TStateForm canonicalize_tstate(const EprMap& map, double tol = 1e-8) {
  if (!map.is_tstate(tol)) {
    std::ostringstream os;
    os << "|a| = " << map.alice_bloch.norm() << ", |b| = " << map.bob_bloch.norm()
       << " exceed tolerance " << tol;
    throw Error(ErrorKind::NotTState, os.str());
  }
  const Mat3& c = map.correlation;
  TStateForm form;

  const double off = (c - Mat3(c.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
  if (off <= 1e-14) {
    // Already diagonal: only reorder. An odd permutation P is replaced by -P,
    // which is proper and conjugates diag(t) the same way.
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(c(a, a)) > std::abs(c(b, b));
    });
    Mat3 perm = Mat3::Zero();
    for (int k = 0; k < 3; ++k) {
      perm(k, order[static_cast<std::size_t>(k)]) = 1.0;
      form.t_diag[k] = c(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    }
    if (perm.determinant() < 0.0) perm = -perm;
    form.alice_rotation = perm;
    form.bob_rotation = perm;
  } else {
    Eigen::JacobiSVD<Mat3> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Vec3 t = svd.singularValues();
    // Reflections go into the signs of t, never into the rotations.
    if (u.determinant() < 0.0) {
      u.col(2) *= -1.0;
      t[2] *= -1.0;
    }
    if (v.determinant() < 0.0) {
      v.col(2) *= -1.0;
      t[2] *= -1.0;
    }
    form.t_diag = t;
    form.alice_rotation = u.transpose();
    form.bob_rotation = v.transpose();
  }
  if (std::abs(form.t_diag[2]) < kDegenerateT) {
    std::ostringstream os;
    os << "smallest |t| = " << std::abs(form.t_diag[2]) << " below " << kDegenerateT;
    throw Error(ErrorKind::DegenerateT, os.str());
  }
  return form;
}

/// SO(3) image of a qubit unitary: U^dagger sigma_j U = sum_k R_jk sigma_k.
inline Mat3 rotation_from_unitary(const CMat2& u) {
  const auto& s = pauli();
  Mat3 r;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      r(j, k) = 0.5 * (s[static_cast<std::size_t>(k + 1)] * u.adjoint() *
                       s[static_cast<std::size_t>(j + 1)] * u)
                          .trace()
                          .real();
  return r;
}

/// (U_A (x) U_B) rho (U_A (x) U_B)^dagger.
inline TwoQubitState apply_local_unitaries(const TwoQubitState& state, const CMat2& ua,
                                           const CMat2& ub) {
  const CMat4 u = kron(ua, ub);
  return TwoQubitState::from_matrix(u * state.rho() * u.adjoint());
}

// Named families.

/// p |psi-><psi-| + (1 - p) I/4.
inline TwoQubitState werner_state(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "Werner parameter p = " << p << " outside [0, 1]";
    throw Error(ErrorKind::InvalidState, os.str());
  }
  Mat4 theta = Mat4::Zero();
  theta(0, 0) = 1.0;
  for (int i = 1; i < 4; ++i) theta(i, i) = -p;
  return TwoQubitState::from_theta(theta);
}

/// Bell states in the order Phi+, Phi-, Psi+, Psi-.
inline TwoQubitState bell_state(int index) {
  static const std::array<Vec3, 4> diag = {Vec3(1, -1, 1), Vec3(-1, 1, 1), Vec3(1, 1, -1),
                                           Vec3(-1, -1, -1)};
  if (index < 0 || index > 3) {
    std::ostringstream os;
    os << "Bell index " << index << " outside 0..3";
    throw Error(ErrorKind::InvalidState, os.str());
  }
  Mat4 theta = Mat4::Zero();
  theta(0, 0) = 1.0;
  for (int i = 0; i < 3; ++i) theta(i + 1, i + 1) = diag[static_cast<std::size_t>(index)][i];
  return TwoQubitState::from_theta(theta);
}

/// 1/4 (I + sum_i t_i sigma_i (x) sigma_i); positivity checked on the matrix.
inline TwoQubitState tstate(const Vec3& t) {
  Mat4 theta = Mat4::Zero();
  theta(0, 0) = 1.0;
  for (int i = 0; i < 3; ++i) theta(i + 1, i + 1) = t[i];
  return TwoQubitState::from_theta(theta);
}

}  // namespace steer
