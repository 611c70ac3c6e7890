#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "geolqr/pmp/manifold.hpp"

namespace geolqr::pmp {

/// State and control of a second-order path, sampled on a uniform grid.
/// `du` holds the covariant derivative Du/Dt.
template <class M>
struct PathSamples {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;

  std::vector<double> times;
  std::vector<Point> q;
  std::vector<Tangent> v;
  std::vector<Tangent> u;
  std::vector<Tangent> du;

  std::size_t size() const { return times.size(); }
  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  struct Midpoint {
    Point q;
    Tangent v;
    Tangent u;
  };

  /// Cubic Hermite interpolation at the centre of [t_i, t_{i+1}], using
  /// q' = v, v' = u and u' = du - connection(v, u). The configuration is
  /// interpolated in exponential coordinates around q_i.
  Midpoint midpoint(std::size_t i) const {
    const double h = times[i + 1] - times[i];
    auto herm = [h](const Tangent& x0, const Tangent& x1, const Tangent& d0, const Tangent& d1) -> Tangent {
      return 0.5 * (x0 + x1) + (h / 8.0) * (d0 - d1);
    };
    const Tangent theta1 = M::log_map(q[i], q[i + 1]);
    const Tangent theta_m = herm(M::zero(v[i].size()), theta1, v[i], M::dexpinv(theta1, v[i + 1]));
    const Tangent u_dot0 = du[i] - M::connection(v[i], u[i]);
    const Tangent u_dot1 = du[i + 1] - M::connection(v[i + 1], u[i + 1]);
    return {M::retract(q[i], theta_m), herm(v[i], v[i + 1], u[i], u[i + 1]), herm(u[i], u[i + 1], u_dot0, u_dot1)};
  }
};

/**
 * One Runge-Kutta-Munthe-Kaas step (classical RK4 tableau) for a point on M
 * coupled to a vector y. `f(t, q, y)` returns the pair (xi, y') where xi is
 * the velocity of q in the policy's frame.
 */
template <class M, class F>
void rkmk4_step(typename M::Point& q, Eigen::VectorXd& y, double t, double h, F&& f) {
  using Tangent = typename M::Tangent;
  auto [xi1, dy1] = f(t, q, y);
  const Tangent k1 = xi1;

  Tangent theta = (0.5 * h) * k1;
  auto [xi2, dy2] = f(t + 0.5 * h, M::retract(q, theta), Eigen::VectorXd(y + (0.5 * h) * dy1));
  const Tangent k2 = M::dexpinv(theta, xi2);

  theta = (0.5 * h) * k2;
  auto [xi3, dy3] = f(t + 0.5 * h, M::retract(q, theta), Eigen::VectorXd(y + (0.5 * h) * dy2));
  const Tangent k3 = M::dexpinv(theta, xi3);

  theta = h * k3;
  auto [xi4, dy4] = f(t + h, M::retract(q, theta), Eigen::VectorXd(y + h * dy3));
  const Tangent k4 = M::dexpinv(theta, xi4);

  q = M::retract(q, (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  y += (h / 6.0) * (dy1 + 2.0 * dy2 + 2.0 * dy3 + dy4);
}

/// Number of uniform steps covering [0, horizon] with step at most `h`.
inline std::size_t grid_steps(double horizon, double h) {
  const auto n = static_cast<std::size_t>(std::ceil(horizon / h - 1e-9));
  return n == 0 ? 1 : n;
}

}  // namespace geolqr::pmp
