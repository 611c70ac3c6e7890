#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "geolqr/errors.hpp"
#include "geolqr/pmp/manifold.hpp"
#include "geolqr/pmp/path.hpp"

namespace geolqr::pmp {

/**
 * Integrates q'' = u(t) - grad W(q) (covariantly) by RKMK4 for a prescribed
 * control. `u_dot` is the ordinary time derivative of u(t) in the policy's
 * frame; it is only used to fill in Du/Dt. `grad_w` may be empty.
 */
template <class M>
PathSamples<M> controlled_path(const typename M::Point& q0, const typename M::Tangent& v0,
                               const std::function<typename M::Tangent(double)>& u,
                               const std::function<typename M::Tangent(double)>& u_dot, double horizon,
                               double step,
                               const std::function<typename M::Tangent(const typename M::Point&)>& grad_w = {}) {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;
  const std::size_t steps = grid_steps(horizon, step);
  const double h = horizon / static_cast<double>(steps);
  auto f = [&](double t, const Point& q, const Eigen::VectorXd& y) {
    const Tangent v = y;
    Tangent a = u(t) - M::connection(v, v);
    if (grad_w) a -= grad_w(q);
    return std::pair<Tangent, Eigen::VectorXd>(v, Eigen::VectorXd(a));
  };
  PathSamples<M> path;
  Point q = q0;
  Eigen::VectorXd y = v0;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * h;
    const Tangent v = y;
    const Tangent ui = u(t);
    path.times.push_back(t);
    path.q.push_back(q);
    path.v.push_back(v);
    path.u.push_back(ui);
    path.du.push_back(u_dot(t) + M::connection(v, ui));
    if (i == steps) break;
    rkmk4_step<M>(q, y, t, h, f);
  }
  return path;
}

/// Variation Y along a path and its covariant derivative DY/Dt.
template <class M>
struct VariationField {
  typename M::Tangent y;
  typename M::Tangent ydot;
};

/**
 * @brief Propagates the linearized flow along `base`.
 *
 * With Z = DY/Dt, integrates by RK4
 *
 *   D^2Y/Dt^2 = R(v, Y) v + D_Y f . u - Hess W(q) Y,
 *
 * using Hermite midpoints of the base path. `hess_w` may be empty (W = 0).
 */
template <class M>
std::vector<VariationField<M>> variational_propagate(
    const PathSamples<M>& base, const typename M::Tangent& y0, const typename M::Tangent& ydot0,
    const std::function<Eigen::MatrixXd(const typename M::Point&)>& hess_w = {}) {
  using Tangent = typename M::Tangent;
  if (base.size() < 2) throw Error(ErrorKind::InvalidArgument, "base path needs at least two samples");
  const Eigen::Index n = y0.size();
  if (ydot0.size() != n || base.v.front().size() != n) {
    throw Error(ErrorKind::InvalidArgument, "variation and path dimensions differ");
  }

  auto rhs = [&](const typename M::Point& q, const Tangent& v, const Tangent& u, const Eigen::VectorXd& s) {
    const Tangent y = s.head(n);
    const Tangent z = s.tail(n);
    Tangent zdot = M::curvature(v, y, v) + M::actuation_derivative(y, u) - M::connection(v, z);
    if (hess_w) zdot -= hess_w(q) * y;
    Eigen::VectorXd out(2 * n);
    out << z - M::connection(v, y), zdot;
    return out;
  };

  std::vector<VariationField<M>> out;
  out.reserve(base.size());
  Eigen::VectorXd s(2 * n);
  s << y0, ydot0;
  out.push_back({y0, ydot0});
  for (std::size_t i = 0; i + 1 < base.size(); ++i) {
    const double h = base.times[i + 1] - base.times[i];
    const auto mid = base.midpoint(i);
    const Eigen::VectorXd k1 = rhs(base.q[i], base.v[i], base.u[i], s);
    const Eigen::VectorXd k2 = rhs(mid.q, mid.v, mid.u, s + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(mid.q, mid.v, mid.u, s + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(base.q[i + 1], base.v[i + 1], base.u[i + 1], s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back({Tangent(s.head(n)), Tangent(s.tail(n))});
  }
  return out;
}

}  // namespace geolqr::pmp
