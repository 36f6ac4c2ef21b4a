#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "steer/error.hpp"

namespace steer {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Complex = std::complex<double>;
using CMat2 = Eigen::Matrix2cd;
using CMat4 = Eigen::Matrix4cd;

inline constexpr double kPi = 3.14159265358979323846;

/// Tolerance on |n| - 1 for vectors that must be unit length.
inline constexpr double kUnitTol = 1e-12;

inline void require_unit(const Vec3& v, const char* what, double tol = kUnitTol) {
  const double dev = std::abs(v.norm() - 1.0);
  if (!(dev <= tol)) {
    std::ostringstream os;
    os << what << " has |v| - 1 = " << dev << " (tolerance " << tol << ")";
    throw Error(ErrorKind::NotUnitVector, os.str());
  }
}

/// (w, w n): coordinates of the operator w (I + n.sigma) / 2.
inline Vec4 lift(double weight, const Vec3& n) {
  return Vec4(weight, weight * n.x(), weight * n.y(), weight * n.z());
}

inline Vec3 spatial(const Vec4& x) { return x.tail<3>(); }

}  // namespace steer
