#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "qmra/errors.hpp"

namespace qmra {

/// Rows are the vectorized partials of the rotation w.r.t. each tangent
/// component: row k equals vec(dR/dv_k), columns stacked column-major.
using ExpJacobian = Eigen::Matrix<double, 3, 9>;

/// Column-stacking vectorization. Fixed convention for the whole library:
/// every 9-vector view of a 3x3 matrix stacks columns.
inline Eigen::Matrix<double, 9, 1> vec(const Eigen::Matrix3d& m) {
  return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(m.data());
}

inline Eigen::Matrix3d unvec(const Eigen::Matrix<double, 9, 1>& v) {
  return Eigen::Map<const Eigen::Matrix3d>(v.data());
}

/// Skew-symmetric matrix of v (the so(3) isomorphism).
inline Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return s;
}

namespace detail {

// Angle below which sin(t)/t and (1-cos(t))/t^2 switch to their 4th-order
// series; avoids 0/0 without a measurable jump at the branch point.
constexpr double kSmallAngle = 1e-6;

inline double sinc(double theta) {
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(theta) / theta;
}

inline double cosc(double theta) {
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  return (1.0 - std::cos(theta)) / (theta * theta);
}

// d/dtheta[sin/theta] / theta and d/dtheta[(1-cos)/theta^2] / theta.
// Direct evaluation cancels catastrophically near zero, so the series branch
// here is wider than the one above; both branches agree to ~1e-9 at 1e-3.
inline double dsinc_over_theta(double theta) {
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    return -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0;
  }
  return (theta * std::cos(theta) - std::sin(theta)) / (theta * theta * theta);
}

inline double dcosc_over_theta(double theta) {
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    return -1.0 / 12.0 + t2 / 180.0 - t2 * t2 / 6720.0;
  }
  const double t2 = theta * theta;
  return (theta * std::sin(theta) - 2.0 * (1.0 - std::cos(theta))) /
         (t2 * t2);
}

}  // namespace detail

/// Rodrigues exponential map from an axis-angle tangent vector.
inline Eigen::Matrix3d exp_map(const Eigen::Vector3d& v) {
  const double theta = v.norm();
  const Eigen::Matrix3d s = hat(v);
  return Eigen::Matrix3d::Identity() + detail::sinc(theta) * s +
         detail::cosc(theta) * (s * s);
}

/// Analytic derivative of exp_map: row k is vec(dR/dv_k).
inline ExpJacobian exp_jacobian(const Eigen::Vector3d& v) {
  const double theta = v.norm();
  const double a = detail::sinc(theta);
  const double b = detail::cosc(theta);
  const double da = detail::dsinc_over_theta(theta);  // a'(theta)/theta
  const double db = detail::dcosc_over_theta(theta);  // b'(theta)/theta
  const Eigen::Matrix3d s = hat(v);
  const Eigen::Matrix3d s2 = s * s;

  ExpJacobian j;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Matrix3d ek = hat(Eigen::Vector3d::Unit(k));
    // dR/dv_k = (a'/t) v_k S + a E_k + (b'/t) v_k S^2 + b (E_k S + S E_k)
    const Eigen::Matrix3d d = da * v(k) * s + a * ek + db * v(k) * s2 +
                              b * (ek * s + s * ek);
    j.row(k) = vec(d).transpose();
  }
  return j;
}

/// Principal logarithm of a rotation as an axis-angle vector.
inline Eigen::Vector3d log_map(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

/// Geodesic distance between two rotations, in [0, pi]. Equals
/// arccos((trace(a^T b) - 1) / 2) but evaluated through atan2 of the skew
/// part, which stays accurate where acos loses half the digits (near 0).
inline double geodesic_angle(const Eigen::Matrix3d& a,
                             const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d m = a.transpose() * b;
  const double cos_term = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double sin_term =
      (m - m.transpose()).norm() / (2.0 * std::sqrt(2.0));
  if (cos_term < 0.0) {
    // obtuse angles: sin loses accuracy, acos of the clamped cosine does not
    return std::acos(cos_term);
  }
  return std::atan2(sin_term, cos_term);
}

/// True when m is orthogonal with unit determinant to within tol.
inline bool is_rotation(const Eigen::Matrix3d& m, double tol = 1e-10) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).norm() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

/// Nearest rotation in Frobenius norm: orthogonal polar factor with the
/// determinant sign fixed on the last singular direction.
inline Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 1e-12 * std::max(1.0, sv(0)))) {
    throw DegenerateInputError(
        "project_to_so3: rank-deficient input matrix");
  }
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d r = u * v.transpose();
  if (r.determinant() < 0.0) {
    u.col(2) *= -1.0;
    r = u * v.transpose();
  }
  return r;
}

}  // namespace qmra
