#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "geolqr/errors.hpp"
#include "geolqr/so3.hpp"

namespace geolqr::pmp {

enum class ManifoldTag { Flat, So3BiInvariant };

constexpr const char* to_string(ManifoldTag tag) {
  return tag == ManifoldTag::Flat ? "flat" : "so3-biinvariant";
}

/**
 * Manifold policies. Tangent vectors along a curve are stored in a fixed
 * frame (world frame for flat space, body frame for SO(3)); `connection(v, X)`
 * is the term that turns an ordinary derivative into a covariant one:
 *
 *   DX/Dt = dX/dt + connection(v, X).
 *
 * `actuation_derivative(Y, u)` is D_Y of the actuation fields contracted with
 * u, and `actuation_adjoint(u, p)` its adjoint in Y.
 */
struct FlatSpace {
  using Point = Eigen::VectorXd;
  using Tangent = Eigen::VectorXd;
  static constexpr ManifoldTag tag = ManifoldTag::Flat;

  static Tangent zero(Eigen::Index n) { return Tangent::Zero(n); }
  static Eigen::Index dimension(const Point& q) { return q.size(); }

  static Point retract(const Point& q, const Tangent& d) { return q + d; }
  static Tangent log_map(const Point& from, const Point& to) { return to - from; }
  static Tangent dexpinv(const Tangent& /*theta*/, const Tangent& xi) { return xi; }

  static Tangent curvature(const Tangent& x, const Tangent& /*y*/, const Tangent& /*z*/) {
    return Tangent::Zero(x.size());
  }
  static Tangent connection(const Tangent& v, const Tangent& /*x*/) { return Tangent::Zero(v.size()); }
  static Tangent actuation_derivative(const Tangent& y, const Tangent& /*u*/) { return Tangent::Zero(y.size()); }
  static Tangent actuation_adjoint(const Tangent& u, const Tangent& /*p*/) { return Tangent::Zero(u.size()); }

  /// grad_q of (1/2) d^2(target, q).
  static Tangent grad_half_sq_dist(const Point& target, const Point& q) { return q - target; }
  static double half_sq_dist(const Point& target, const Point& q) { return 0.5 * (q - target).squaredNorm(); }
};

namespace detail {

/// Inverse right Jacobian of exp on SO(3): theta' for R = R0 exp(theta), R^T R' = hat(xi).
inline Eigen::Vector3d so3_dexpinv(const Eigen::Vector3d& theta, const Eigen::Vector3d& xi) {
  const double phi2 = theta.squaredNorm();
  double c;
  if (phi2 < 1e-8) {
    c = 1.0 / 12.0 + phi2 / 720.0;
  } else {
    const double phi = std::sqrt(phi2);
    c = 1.0 / phi2 - (1.0 + std::cos(phi)) / (2.0 * phi * std::sin(phi));
  }
  const Eigen::Vector3d tx = theta.cross(xi);
  return xi + 0.5 * tx + c * theta.cross(tx);
}

}  // namespace detail

/// SO(3) with the bi-invariant metric; tangent vectors in body coordinates.
struct So3BiInvariant {
  using Point = Rotation;
  using Tangent = Eigen::Vector3d;
  static constexpr ManifoldTag tag = ManifoldTag::So3BiInvariant;

  static Tangent zero(Eigen::Index /*n*/ = 3) { return Tangent::Zero(); }
  static Eigen::Index dimension(const Point& /*q*/) { return 3; }

  static Point retract(const Point& q, const Tangent& d) { return q * exp_so3(d); }
  static Tangent log_map(const Point& from, const Point& to) { return log_so3(from.transpose() * to); }
  static Tangent dexpinv(const Tangent& theta, const Tangent& xi) { return detail::so3_dexpinv(theta, xi); }

  /// R(X,Y)Z = -1/4 [[X,Y],Z].
  static Tangent curvature(const Tangent& x, const Tangent& y, const Tangent& z) {
    return -0.25 * x.cross(y).cross(z);
  }
  /// Levi-Civita connection on left-invariant fields: D_X Y = 1/2 [X, Y].
  static Tangent connection(const Tangent& v, const Tangent& x) { return 0.5 * v.cross(x); }
  /// Body-fixed actuation directions are left-invariant fields.
  static Tangent actuation_derivative(const Tangent& y, const Tangent& u) { return 0.5 * y.cross(u); }
  static Tangent actuation_adjoint(const Tangent& u, const Tangent& p) { return 0.5 * u.cross(p); }

  static Tangent grad_half_sq_dist(const Point& target, const Point& q) { return log_so3(target.transpose() * q); }
  static double half_sq_dist(const Point& target, const Point& q) {
    return 0.5 * log_so3(target.transpose() * q).squaredNorm();
  }
};

/// Curvature tensor by runtime tag; vectors are vee coordinates for SO(3).
inline Eigen::VectorXd curvature(ManifoldTag tag, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& z) {
  if (x.size() != y.size() || x.size() != z.size()) {
    throw Error(ErrorKind::InvalidArgument, "curvature arguments differ in dimension");
  }
  if (tag == ManifoldTag::Flat) return Eigen::VectorXd::Zero(x.size());
  if (x.size() != 3) throw Error(ErrorKind::InvalidArgument, "so(3) vectors must have 3 entries");
  return So3BiInvariant::curvature(x, y, z);
}

/// Obstacle region {q : value(q) <= 0}.
template <class M>
struct Obstacle {
  std::function<double(const typename M::Point&)> value;
  std::function<typename M::Tangent(const typename M::Point&)> gradient;
};

/// O(q) = d^2(q, center) - radius^2.
template <class M>
Obstacle<M> ball_obstacle(const typename M::Point& center, double radius) {
  const double r2 = radius * radius;
  return {[center, r2](const typename M::Point& q) { return 2.0 * M::half_sq_dist(center, q) - r2; },
          [center](const typename M::Point& q) -> typename M::Tangent {
            return 2.0 * M::grad_half_sq_dist(center, q);
          }};
}

}  // namespace geolqr::pmp
