#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "geolqr/errors.hpp"
#include "geolqr/pmp/manifold.hpp"
#include "geolqr/pmp/path.hpp"

namespace geolqr::pmp {

template <class M>
struct Costate {
  typename M::Tangent p1;
  typename M::Tangent p2;
};

/// Running cost L(q, v, u) with its partial gradients. Empty members count as zero.
template <class M>
struct Lagrangian {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;
  std::function<double(const Point&, const Tangent&, const Tangent&)> value;
  std::function<Tangent(const Point&, const Tangent&, const Tangent&)> grad_q;
  std::function<Tangent(const Point&, const Tangent&, const Tangent&)> grad_v;
};

template <class M>
struct CostateTrajectory {
  std::vector<double> times;
  std::vector<Costate<M>> p;
  /// H = <p1, v> + <p2, u> + L at each sample.
  std::vector<double> hamiltonian;

  double spread() const {
    if (hamiltonian.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(hamiltonian.begin(), hamiltonian.end());
    return *hi - *lo;
  }
};

/**
 * Integrates the costate backward from p(T) = (g_q, g_v):
 *
 *   Dp1/Dt = -R(v, p2) v - (D f . u)^*(p2) - grad_q L
 *   Dp2/Dt = -p1 - grad_v L
 *
 * by RK4 with Hermite midpoints of the path.
 */
template <class M>
CostateTrajectory<M> costate_integrate(const PathSamples<M>& path, const Lagrangian<M>& lagrangian,
                                       const typename M::Tangent& g_q, const typename M::Tangent& g_v) {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;
  if (path.size() < 2) throw Error(ErrorKind::InvalidArgument, "path needs at least two samples");
  const Eigen::Index n = g_q.size();

  auto rhs = [&](const Point& q, const Tangent& v, const Tangent& u, const Eigen::VectorXd& s) {
    const Tangent p1 = s.head(n);
    const Tangent p2 = s.tail(n);
    Tangent dp1 = -M::curvature(v, p2, v) - M::actuation_adjoint(u, p2) - M::connection(v, p1);
    Tangent dp2 = -p1 - M::connection(v, p2);
    if (lagrangian.grad_q) dp1 -= lagrangian.grad_q(q, v, u);
    if (lagrangian.grad_v) dp2 -= lagrangian.grad_v(q, v, u);
    Eigen::VectorXd out(2 * n);
    out << dp1, dp2;
    return out;
  };
  auto hamiltonian = [&](std::size_t i, const Costate<M>& c) {
    double h = c.p1.dot(path.v[i]) + c.p2.dot(path.u[i]);
    if (lagrangian.value) h += lagrangian.value(path.q[i], path.v[i], path.u[i]);
    return h;
  };

  const std::size_t m = path.size();
  CostateTrajectory<M> out;
  out.times = path.times;
  out.p.resize(m);
  out.hamiltonian.resize(m);

  Eigen::VectorXd s(2 * n);
  s << g_q, g_v;
  out.p[m - 1] = {g_q, g_v};
  out.hamiltonian[m - 1] = hamiltonian(m - 1, out.p[m - 1]);
  for (std::size_t i = m - 1; i-- > 0;) {
    const double h = -(path.times[i + 1] - path.times[i]);
    const auto mid = path.midpoint(i);
    const Eigen::VectorXd k1 = rhs(path.q[i + 1], path.v[i + 1], path.u[i + 1], s);
    const Eigen::VectorXd k2 = rhs(mid.q, mid.v, mid.u, s + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(mid.q, mid.v, mid.u, s + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(path.q[i], path.v[i], path.u[i], s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.p[i] = {Tangent(s.head(n)), Tangent(s.tail(n))};
    out.hamiltonian[i] = hamiltonian(i, out.p[i]);
  }
  return out;
}

}  // namespace geolqr::pmp
