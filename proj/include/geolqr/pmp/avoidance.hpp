#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geolqr/errors.hpp"
#include "geolqr/pmp/costate.hpp"
#include "geolqr/pmp/manifold.hpp"
#include "geolqr/pmp/path.hpp"

namespace geolqr::pmp {

/// Avoidance: running cost U + V + |v|^2/2 + (alpha/2)|u|^2 with free terminal state.
/// FiniteTimeRegulation: running cost (alpha/2)|u|^2, terminal cost U + |v|^2/2.
enum class BvpMode { Avoidance, FiniteTimeRegulation };

/**
 * Which equation and terminal conditions the shooting solver enforces.
 *
 * PmpDerived follows from the costate equations with u = -p2/alpha:
 *   D^2u/Dt^2 = R(v,u)v - (1/alpha) grad(U+V) + u/alpha,
 *   u(T) = 0, Du/Dt(T) = v(T)/alpha                      (avoidance)
 *   u(T) = -v(T)/alpha, Du/Dt(T) = grad U(q(T))/alpha     (regulation)
 *
 * AsPrinted flips the sign of the potential term and of the terminal
 * derivative conditions:
 *   D^2u/Dt^2 = R(v,u)v + (1/alpha) grad(U+V) + u/alpha,
 *   u(T) = 0, Du/Dt(T) = 0                                (avoidance)
 *   u(T) = -v(T)/alpha, Du/Dt(T) = -grad U(q(T))/alpha    (regulation)
 */
enum class EquationForm { PmpDerived, AsPrinted };

template <class M>
struct AvoidanceScenario {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;

  double alpha = 1.0;
  Point target;
  std::vector<Obstacle<M>> obstacles;
  double horizon = 1.0;
  Point q0;
  Tangent v0;
  BvpMode mode = BvpMode::Avoidance;
  EquationForm form = EquationForm::PmpDerived;
  double step = 1e-3;
  double tolerance = 1e-6;
  int max_iterations = 100;

  static constexpr ManifoldTag manifold() { return M::tag; }
  Eigen::Index dimension() const { return v0.size(); }

  void validate() const {
    if (!(alpha > 0.0)) throw Error(ErrorKind::ValidationError, "alpha must be positive", "avoidance.alpha");
    if (!(horizon > 0.0)) throw Error(ErrorKind::ValidationError, "horizon must be positive", "avoidance.horizon");
    if (!(step > 0.0) || step > horizon) {
      throw Error(ErrorKind::ValidationError, "step must be in (0, horizon]", "avoidance.step");
    }
    if (M::dimension(q0) != v0.size() || M::dimension(target) != v0.size()) {
      throw Error(ErrorKind::ValidationError, "initial state and target differ in dimension", "avoidance.initial_q");
    }
    if (mode == BvpMode::FiniteTimeRegulation && !obstacles.empty()) {
      throw Error(ErrorKind::ValidationError, "finite-time regulation takes no obstacles", "avoidance.obstacles");
    }
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      if (!(obstacles[i].value(q0) > 0.0)) {
        throw Error(ErrorKind::ValidationError, "initial configuration lies inside obstacle " + std::to_string(i),
                    "avoidance.initial_q");
      }
    }
  }

  /// min_i O_i(q); +inf without obstacles.
  double clearance(const Point& q) const {
    double c = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles) c = std::min(c, o.value(q));
    return c;
  }

  double potential_u(const Point& q) const { return M::half_sq_dist(target, q); }
  Tangent grad_u(const Point& q) const { return M::grad_half_sq_dist(target, q); }

  /// V = sum_i 1/O_i.
  double potential_v(const Point& q) const {
    double s = 0.0;
    for (const auto& o : obstacles) s += 1.0 / o.value(q);
    return s;
  }

  /// grad V = -sum_i grad O_i / O_i^2.
  Tangent grad_v(const Point& q) const {
    Tangent g = M::zero(dimension());
    for (const auto& o : obstacles) {
      const double val = o.value(q);
      g -= o.gradient(q) / (val * val);
    }
    return g;
  }
};

template <class M>
struct BVPSolution {
  PathSamples<M> path;
  /// Terminal residual norm for shooting; final weighted gradient norm for transcription.
  double terminal_residual = 0.0;
  int iterations = 0;
  double cost = 0.0;
  /// min over samples of min_i O_i(q); +inf without obstacles.
  double min_clearance = std::numeric_limits<double>::infinity();
};

/// Second covariant derivative of u. Throws ObstacleContact when q touches an obstacle.
template <class M>
typename M::Tangent avoidance_rhs(const typename M::Tangent& u, const typename M::Tangent& /*du*/,
                                  const typename M::Point& q, const typename M::Tangent& v,
                                  const AvoidanceScenario<M>& sc) {
  using Tangent = typename M::Tangent;
  for (std::size_t i = 0; i < sc.obstacles.size(); ++i) {
    if (!(sc.obstacles[i].value(q) > 0.0)) {
      throw Error(ErrorKind::ObstacleContact, "path reached obstacle " + std::to_string(i));
    }
  }
  Tangent out = M::curvature(v, u, v);
  if (sc.mode == BvpMode::FiniteTimeRegulation) return out;
  const double sign = sc.form == EquationForm::PmpDerived ? -1.0 : 1.0;
  out += (sign / sc.alpha) * (sc.grad_u(q) + sc.grad_v(q)) + u / sc.alpha;
  return out;
}

/// Integrates (q, v, u, Du/Dt) forward by RKMK4 from the given initial control data.
template <class M>
PathSamples<M> integrate_path(const AvoidanceScenario<M>& sc, const typename M::Tangent& u0,
                              const typename M::Tangent& du0) {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;
  const Eigen::Index n = sc.dimension();
  const std::size_t steps = grid_steps(sc.horizon, sc.step);
  const double h = sc.horizon / static_cast<double>(steps);

  auto f = [&](double /*t*/, const Point& q, const Eigen::VectorXd& y) {
    const Tangent v = y.segment(0, n);
    const Tangent u = y.segment(n, n);
    const Tangent w = y.segment(2 * n, n);
    const Tangent dw = avoidance_rhs<M>(u, w, q, v, sc) - M::connection(v, w);
    Eigen::VectorXd dy(3 * n);
    dy << u - M::connection(v, v), w - M::connection(v, u), dw;
    return std::pair<Tangent, Eigen::VectorXd>(v, std::move(dy));
  };

  PathSamples<M> path;
  path.times.reserve(steps + 1);
  Point q = sc.q0;
  Eigen::VectorXd y(3 * n);
  y << sc.v0, u0, du0;
  auto record = [&](double t) {
    if (!y.allFinite()) throw Error(ErrorKind::NumericalDivergence, "shooting trajectory diverged");
    path.times.push_back(t);
    path.q.push_back(q);
    path.v.push_back(y.segment(0, n));
    path.u.push_back(y.segment(n, n));
    path.du.push_back(y.segment(2 * n, n));
  };
  record(0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    rkmk4_step<M>(q, y, static_cast<double>(i) * h, h, f);
    record(static_cast<double>(i + 1) * h);
  }
  if (sc.clearance(q) <= 0.0) throw Error(ErrorKind::ObstacleContact, "path ends inside an obstacle");
  return path;
}

/// Terminal residual in R^{2n}, per mode and equation form.
template <class M>
Eigen::VectorXd terminal_residual(const AvoidanceScenario<M>& sc, const PathSamples<M>& path) {
  const Eigen::Index n = sc.dimension();
  const auto& u = path.u.back();
  const auto& du = path.du.back();
  const auto& v = path.v.back();
  const bool derived = sc.form == EquationForm::PmpDerived;
  Eigen::VectorXd r(2 * n);
  if (sc.mode == BvpMode::Avoidance) {
    if (derived) {
      r << u, du - v / sc.alpha;
    } else {
      r << u, du;
    }
  } else {
    const typename M::Tangent g = sc.grad_u(path.q.back()) / sc.alpha;
    if (derived) {
      r << u + v / sc.alpha, du - g;
    } else {
      r << u + v / sc.alpha, du + g;
    }
  }
  return r;
}

/// Running cost of the scenario (see BvpMode).
template <class M>
double running_cost(const AvoidanceScenario<M>& sc, const typename M::Point& q, const typename M::Tangent& v,
                    const typename M::Tangent& u) {
  const double control = 0.5 * sc.alpha * u.squaredNorm();
  if (sc.mode == BvpMode::FiniteTimeRegulation) return control;
  return sc.potential_u(q) + sc.potential_v(q) + 0.5 * v.squaredNorm() + control;
}

template <class M>
double terminal_cost(const AvoidanceScenario<M>& sc, const typename M::Point& q, const typename M::Tangent& v) {
  if (sc.mode == BvpMode::Avoidance) return 0.0;
  return sc.potential_u(q) + 0.5 * v.squaredNorm();
}

/// Trapezoid-rule cost of a sampled path.
template <class M>
double path_cost(const AvoidanceScenario<M>& sc, const PathSamples<M>& path) {
  double j = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double h = path.times[i + 1] - path.times[i];
    j += 0.5 * h *
         (running_cost(sc, path.q[i], path.v[i], path.u[i]) +
          running_cost(sc, path.q[i + 1], path.v[i + 1], path.u[i + 1]));
  }
  return j + terminal_cost(sc, path.q.back(), path.v.back());
}

template <class M>
Lagrangian<M> scenario_lagrangian(const AvoidanceScenario<M>& sc) {
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;
  Lagrangian<M> l;
  l.value = [sc](const Point& q, const Tangent& v, const Tangent& u) { return running_cost(sc, q, v, u); };
  if (sc.mode == BvpMode::Avoidance) {
    l.grad_q = [sc](const Point& q, const Tangent&, const Tangent&) -> Tangent { return sc.grad_u(q) + sc.grad_v(q); };
    l.grad_v = [](const Point&, const Tangent& v, const Tangent&) -> Tangent { return v; };
  }
  return l;
}

/// p(T) = gradient of the terminal cost.
template <class M>
Costate<M> terminal_costate(const AvoidanceScenario<M>& sc, const PathSamples<M>& path) {
  const Eigen::Index n = sc.dimension();
  if (sc.mode == BvpMode::Avoidance) return {M::zero(n), M::zero(n)};
  return {sc.grad_u(path.q.back()), path.v.back()};
}

template <class M>
CostateTrajectory<M> scenario_costate(const AvoidanceScenario<M>& sc, const PathSamples<M>& path) {
  const Costate<M> pt = terminal_costate(sc, path);
  return costate_integrate(path, scenario_lagrangian(sc), pt.p1, pt.p2);
}

namespace detail {

/// Failures that make a Newton trial point unusable without ending the solve.
inline bool rejects_trial(ErrorKind kind) {
  return kind == ErrorKind::ObstacleContact || kind == ErrorKind::NumericalDivergence ||
         kind == ErrorKind::AngleNearPi;
}

}  // namespace detail

/**
 * @brief Single shooting on the unknowns (u(0), Du/Dt(0)).
 *
 * Damped Newton with a forward-difference Jacobian; a trial step that runs
 * into an obstacle, the cut locus, or fails to reduce the residual is halved. Throws
 * NoConvergence if the residual is not below `sc.tolerance` within
 * `sc.max_iterations` iterations.
 */
template <class M>
BVPSolution<M> shooting_solve(const AvoidanceScenario<M>& sc,
                              const std::optional<Eigen::VectorXd>& initial_guess = std::nullopt) {
  using Tangent = typename M::Tangent;
  sc.validate();
  const Eigen::Index n = sc.dimension();
  Eigen::VectorXd z = initial_guess.value_or(Eigen::VectorXd::Zero(2 * n));
  if (z.size() != 2 * n) throw Error(ErrorKind::InvalidArgument, "initial guess must have 2n entries");

  auto evaluate = [&](const Eigen::VectorXd& zz, PathSamples<M>* keep) {
    PathSamples<M> path = integrate_path(sc, Tangent(zz.head(n)), Tangent(zz.tail(n)));
    Eigen::VectorXd r = terminal_residual(sc, path);
    if (keep) *keep = std::move(path);
    return r;
  };

  PathSamples<M> path;
  Eigen::VectorXd r = evaluate(z, &path);
  int iter = 0;
  while (r.norm() > sc.tolerance) {
    if (iter >= sc.max_iterations) {
      throw Error(ErrorKind::NoConvergence, "shooting did not converge in " + std::to_string(sc.max_iterations) +
                                                " iterations (residual " + std::to_string(r.norm()) + ")");
    }
    ++iter;

    Eigen::MatrixXd jac(2 * n, 2 * n);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
      const double delta = 1e-7 * std::max(1.0, std::abs(z(j)));
      Eigen::VectorXd zp = z;
      zp(j) += delta;
      try {
        jac.col(j) = (evaluate(zp, nullptr) - r) / delta;
      } catch (const Error& e) {
        if (!detail::rejects_trial(e.kind())) throw;
        zp(j) = z(j) - delta;
        jac.col(j) = (r - evaluate(zp, nullptr)) / delta;
      }
    }
    const Eigen::VectorXd dz = jac.colPivHouseholderQr().solve(-r);
    if (!dz.allFinite()) throw Error(ErrorKind::NoConvergence, "singular shooting Jacobian");

    bool accepted = false;
    for (double lambda = 1.0; lambda >= 1.0 / 1024.0; lambda *= 0.5) {
      const Eigen::VectorXd trial = z + lambda * dz;
      try {
        PathSamples<M> trial_path;
        const Eigen::VectorXd tr = evaluate(trial, &trial_path);
        if (tr.norm() < (1.0 - 1e-4 * lambda) * r.norm()) {
          z = trial;
          r = tr;
          path = std::move(trial_path);
          accepted = true;
          break;
        }
      } catch (const Error& e) {
        if (!detail::rejects_trial(e.kind())) throw;
      }
    }
    if (!accepted) {
      throw Error(ErrorKind::NoConvergence,
                  "shooting line search failed at iteration " + std::to_string(iter) + " (residual " +
                      std::to_string(r.norm()) + ")");
    }
  }

  BVPSolution<M> sol;
  sol.terminal_residual = r.norm();
  sol.iterations = iter;
  sol.cost = path_cost(sc, path);
  for (const auto& q : path.q) sol.min_clearance = std::min(sol.min_clearance, sc.clearance(q));
  sol.path = std::move(path);
  return sol;
}

}  // namespace geolqr::pmp
