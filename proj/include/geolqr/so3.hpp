#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "geolqr/errors.hpp"

namespace geolqr {

/// Body-frame 3-vector: angular velocity, torque, or axis-angle coordinates.
using BodyVector = Eigen::Vector3d;

/// Antisymmetric 3x3 matrix, an element of so(3).
using SkewMatrix = Eigen::Matrix3d;

/// Below this angle the Rodrigues coefficients are evaluated by series.
inline constexpr double kSmallAngle = 1e-4;

/// log_so3 refuses rotations with tr(R) + 1 at or below this margin
/// (rotation angle within ~3.2e-4 rad of pi).
inline constexpr double kLogCutLocusMargin = 1e-7;

/// Tolerance used when validating user-supplied rotation matrices.
inline constexpr double kRotationTolerance = 1e-9;

/**
 * @brief Element of SO(3) stored as a 3x3 direction-cosine matrix.
 *
 * Instances built through from_matrix() are validated; instances produced by
 * the group operations in this header are orthonormal by construction.
 */
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Validates orthogonality (Frobenius norm of m^T m - I) and det = +1.
  static Rotation from_matrix(const Eigen::Matrix3d& m, double tol = kRotationTolerance) {
    if (!m.allFinite()) {
      throw Error(ErrorKind::ValidationError, "rotation has non-finite entries");
    }
    const double defect = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
    if (defect > tol) {
      throw Error(ErrorKind::ValidationError,
                  "rotation fails orthogonality, defect " + std::to_string(defect));
    }
    const double det = m.determinant();
    if (std::abs(det - 1.0) > tol) {
      throw Error(ErrorKind::ValidationError,
                  "rotation determinant is " + std::to_string(det) + ", expected +1");
    }
    return Rotation(m);
  }

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Rotation transpose() const { return Rotation(m_.transpose()); }
  Rotation inverse() const { return transpose(); }

  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  BodyVector operator*(const BodyVector& v) const { return m_ * v; }

  /// Frobenius norm of m^T m - I.
  double orthogonality_defect() const {
    return (m_.transpose() * m_ - Eigen::Matrix3d::Identity()).norm();
  }

 private:
  explicit Rotation(const Eigen::Matrix3d& m) : m_(m) {}

  friend Rotation exp_so3(const BodyVector& v);

  Eigen::Matrix3d m_;
};

/// Symmetric positive-definite inertia tensor, with its inverse cached.
class InertiaTensor {
 public:
  InertiaTensor() : j_(Eigen::Matrix3d::Identity()), j_inv_(Eigen::Matrix3d::Identity()) {}

  static InertiaTensor from_matrix(const Eigen::Matrix3d& j) {
    if (!j.allFinite()) {
      throw Error(ErrorKind::ValidationError, "inertia has non-finite entries");
    }
    if ((j - j.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(ErrorKind::ValidationError, "inertia is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(j);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw Error(ErrorKind::ValidationError, "inertia is not positive definite");
    }
    InertiaTensor out;
    out.j_ = j;
    out.j_inv_ = j.inverse();
    return out;
  }

  static InertiaTensor diagonal(double j1, double j2, double j3) {
    return from_matrix(Eigen::Vector3d(j1, j2, j3).asDiagonal());
  }

  const Eigen::Matrix3d& matrix() const { return j_; }
  const Eigen::Matrix3d& inverse() const { return j_inv_; }

 private:
  Eigen::Matrix3d j_;
  Eigen::Matrix3d j_inv_;
};

/// hat(v) * w == v.cross(w).
inline SkewMatrix hat(const BodyVector& v) {
  SkewMatrix m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// vee of the antisymmetric part (m - m^T)/2; inverts hat on so(3).
inline BodyVector vee(const Eigen::Matrix3d& m) {
  return 0.5 * BodyVector(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

inline Eigen::Matrix3d skew_part(const Eigen::Matrix3d& m) { return 0.5 * (m - m.transpose()); }

/// Rodrigues' formula for the matrix exponential of hat(v).
inline Rotation exp_so3(const BodyVector& v) {
  const double phi2 = v.squaredNorm();
  const double phi = std::sqrt(phi2);
  double a;  // sin(phi)/phi
  double b;  // (1 - cos(phi))/phi^2
  if (phi < kSmallAngle) {
    a = 1.0 - phi2 / 6.0 + phi2 * phi2 / 120.0;
    b = 0.5 - phi2 / 24.0 + phi2 * phi2 / 720.0;
  } else {
    a = std::sin(phi) / phi;
    b = (1.0 - std::cos(phi)) / phi2;
  }
  const SkewMatrix k = hat(v);
  return Rotation(Eigen::Matrix3d::Identity() + a * k + b * k * k);
}

/// Rotation angle in [0, pi].
inline double rotation_angle(const Rotation& r) {
  const double c = 0.5 * (r.matrix().trace() - 1.0);
  const double s = vee(r.matrix()).norm();
  return std::atan2(s, c);
}

/**
 * Principal logarithm, phi/sin(phi) * vee(Skew(R)).
 *
 * Throws AngleNearPi when tr(R) + 1 <= kLogCutLocusMargin: the axis is not
 * recoverable from Skew(R) at the cut locus.
 */
inline BodyVector log_so3(const Rotation& r) {
  const double tr = r.matrix().trace();
  if (tr + 1.0 <= kLogCutLocusMargin) {
    throw Error(ErrorKind::AngleNearPi,
                "rotation angle is at the cut locus (tr(R) + 1 = " + std::to_string(tr + 1.0) + ")");
  }
  const BodyVector s = vee(r.matrix());
  const double sin_phi = s.norm();
  const double phi = std::atan2(sin_phi, 0.5 * (tr - 1.0));
  if (phi < kSmallAngle) {
    const double phi2 = phi * phi;
    return (1.0 + phi2 / 6.0 + 7.0 * phi2 * phi2 / 360.0) * s;
  }
  return (phi / sin_phi) * s;
}

/// |log(r1^T r2)|, the bi-invariant geodesic distance.
inline double geodesic_distance(const Rotation& r1, const Rotation& r2) {
  return log_so3(r1.transpose() * r2).norm();
}

/// Right-translation transport of a reference body velocity into the body
/// frame of `r`: r^T r_ref w_ref.
inline BodyVector transport_velocity(const Rotation& r, const Rotation& r_ref, const BodyVector& w_ref) {
  return r.matrix().transpose() * (r_ref.matrix() * w_ref);
}

}  // namespace geolqr
