#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "geolqr/errors.hpp"
#include "geolqr/so3.hpp"

namespace geolqr {

/// Point of TSO(3) in body coordinates.
struct RigidBodyState {
  Rotation r;
  BodyVector w = BodyVector::Zero();
};

struct SimParams {
  double h = 1e-3;
  double t_end = 20.0;
  InertiaTensor inertia;

  void validate() const {
    if (!(h > 0.0) || h > 0.01) throw Error(ErrorKind::ValidationError, "step h must be in (0, 0.01]", "sim.h");
    if (!(t_end > 0.0)) throw Error(ErrorKind::ValidationError, "t_end must be positive", "sim.t_end");
  }

  /// ceil(t_end / h), robust to t_end being an exact multiple of h.
  std::size_t steps() const { return static_cast<std::size_t>(std::ceil(t_end / h - 1e-9)); }
};

/// Configuration and velocity in flat space.
struct FlatState {
  Eigen::VectorXd q;
  Eigen::VectorXd v;
};

using Controller = std::function<BodyVector(double, const RigidBodyState&)>;

inline double kinetic_energy(const BodyVector& w, const InertiaTensor& j) { return 0.5 * w.dot(j.matrix() * w); }

/**
 * @brief Sampled closed-loop trajectory.
 *
 * `torques[i]` is the controller output evaluated at `states[i]`; the last
 * entry is evaluated but never applied. Extra scalar diagnostics live in
 * `channels`, each with one value per sample.
 */
struct TrajectoryLog {
  std::vector<double> times;
  std::vector<RigidBodyState> states;
  std::vector<BodyVector> torques;
  std::map<std::string, std::vector<double>> channels;

  std::size_t size() const { return times.size(); }

  template <class F>
  void add_channel(const std::string& name, F&& f) {
    std::vector<double> values(size());
    for (std::size_t i = 0; i < size(); ++i) values[i] = f(i);
    channels[name] = std::move(values);
  }

  const std::vector<double>& channel(const std::string& name) const {
    auto it = channels.find(name);
    if (it == channels.end()) throw Error(ErrorKind::InvalidArgument, "no channel named " + name);
    return it->second;
  }
};

/// w' = J^-1 (J w x w) + tau.
inline BodyVector euler_rhs(const BodyVector& w, const BodyVector& tau, const InertiaTensor& j) {
  return j.inverse() * (j.matrix() * w).cross(w) + tau;
}

/// Explicit Lie-Euler step: R <- R exp(h w), w <- w + h euler_rhs(w, tau).
inline RigidBodyState lie_euler_step(const RigidBodyState& s, const BodyVector& tau, double h,
                                     const InertiaTensor& j) {
  return {s.r * exp_so3(h * s.w), s.w + h * euler_rhs(s.w, tau, j)};
}

/// Runs `controller` in closed loop for ceil(t_end/h) Lie-Euler steps.
/// Records a "kinetic_energy" channel. Throws NumericalDivergence if |w| > 1e6.
inline TrajectoryLog simulate(const Controller& controller, const RigidBodyState& init, const SimParams& p) {
  p.validate();
  const std::size_t n = p.steps();
  TrajectoryLog log;
  log.times.reserve(n + 1);
  log.states.reserve(n + 1);
  log.torques.reserve(n + 1);

  RigidBodyState s = init;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * p.h;
    if (!s.w.allFinite() || s.w.norm() > 1e6) {
      throw Error(ErrorKind::NumericalDivergence, "angular velocity diverged at t = " + std::to_string(t));
    }
    const BodyVector tau = controller(t, s);
    if (!tau.allFinite()) {
      throw Error(ErrorKind::NumericalDivergence, "controller returned non-finite torque at t = " + std::to_string(t));
    }
    log.times.push_back(t);
    log.states.push_back(s);
    log.torques.push_back(tau);
    if (i == n) break;
    s = lie_euler_step(s, tau, p.h, p.inertia);
  }
  log.add_channel("kinetic_energy", [&](std::size_t i) { return kinetic_energy(log.states[i].w, p.inertia); });
  return log;
}

using FlatGradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Symplectic Euler in place: v += h(-grad_W(q) + u), then q += h v.
inline void flat_step_in_place(Eigen::VectorXd& q, Eigen::VectorXd& v, const Eigen::VectorXd& u, double h,
                               const FlatGradient& grad_w = {}) {
  if (grad_w) {
    v += h * (u - grad_w(q));
  } else {
    v += h * u;
  }
  q += h * v;
}

/// Symplectic Euler: v' = v + h(-grad_W(q) + u), q' = q + h v'.
/// An empty grad_W means W = 0.
inline FlatState flat_step(const FlatState& s, const Eigen::VectorXd& u, double h, const FlatGradient& grad_w = {}) {
  FlatState out = s;
  flat_step_in_place(out.q, out.v, u, h, grad_w);
  return out;
}

}  // namespace geolqr
