#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <variant>
#include <vector>

#include "geolqr/dynamics.hpp"
#include "geolqr/errors.hpp"
#include "geolqr/riccati.hpp"
#include "geolqr/so3.hpp"

namespace geolqr {

struct RegulationGoal {
  Rotation r_d;
};

/**
 * @brief Reference attitude trajectory driven by a body angular velocity.
 *
 * R_ref is generated once, on construction, by Lie-Euler integration of
 * R_ref' = R_ref hat(w_ref) on a grid of step h_ref up to t_max. Off-grid
 * times continue from the previous grid point with w_ref held constant.
 */
class TrackingReference {
 public:
  using VectorFn = std::function<BodyVector(double)>;

  TrackingReference(VectorFn omega, VectorFn omega_dot, const Rotation& r0, double h_ref, double t_max)
      : omega_(std::move(omega)), omega_dot_(std::move(omega_dot)), h_ref_(h_ref) {
    if (!(h_ref > 0.0) || !(t_max > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "reference needs positive h_ref and t_max");
    }
    const auto n = static_cast<std::size_t>(std::ceil(t_max / h_ref - 1e-9));
    grid_.reserve(n + 1);
    grid_.push_back(r0);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * h_ref;
      grid_.push_back(grid_.back() * exp_so3(h_ref * omega_(t)));
    }
  }

  /// w_ref(t) = sum_j coeffs[axis][j] t^j per axis.
  static TrackingReference polynomial(const std::array<std::vector<double>, 3>& coeffs, const Rotation& r0,
                                      double h_ref, double t_max) {
    auto eval = [coeffs](double t) {
      BodyVector w;
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (auto c = coeffs[k].rbegin(); c != coeffs[k].rend(); ++c) acc = acc * t + *c;
        w(k) = acc;
      }
      return w;
    };
    auto eval_dot = [coeffs](double t) {
      BodyVector w;
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (std::size_t j = coeffs[k].size(); j-- > 1;) acc = acc * t + static_cast<double>(j) * coeffs[k][j];
        w(k) = acc;
      }
      return w;
    };
    return TrackingReference(eval, eval_dot, r0, h_ref, t_max);
  }

  BodyVector omega(double t) const { return omega_(t); }
  BodyVector omega_dot(double t) const { return omega_dot_(t); }
  double step() const { return h_ref_; }
  double horizon() const { return h_ref_ * static_cast<double>(grid_.size() - 1); }

  Rotation rotation(double t) const {
    if (t < 0.0 || t > horizon() + 1e-9 * h_ref_) {
      throw Error(ErrorKind::InvalidArgument, "reference queried outside [0, t_max]");
    }
    auto i = static_cast<std::size_t>(std::floor(t / h_ref_ + 1e-9));
    if (i >= grid_.size()) i = grid_.size() - 1;
    const double dt = t - static_cast<double>(i) * h_ref_;
    if (std::abs(dt) <= 1e-12 * h_ref_) return grid_[i];
    return grid_[i] * exp_so3(dt * omega_(static_cast<double>(i) * h_ref_));
  }

 private:
  VectorFn omega_;
  VectorFn omega_dot_;
  double h_ref_;
  std::vector<Rotation> grid_;
};

/// Time-varying gains from a differential Riccati schedule.
struct ScheduledGains {
  GainSchedule schedule;
};

struct ControllerConfig {
  std::variant<GainPair, ScheduledGains> gains = GainPair{};
  /// Adds R^T R_ref w_ref' to the printed feedforward torque.
  bool feedforward_accel_term = false;

  GainPair gains_at(double t) const {
    if (const auto* g = std::get_if<GainPair>(&gains)) return *g;
    return std::get<ScheduledGains>(gains).schedule.gains_at(t);
  }
};

/// tau = -kP log(R_d^T R) - kD w.
inline BodyVector regulation_torque(const RigidBodyState& s, const RegulationGoal& goal, const GainPair& g) {
  return -g.kP * log_so3(goal.r_d.transpose() * s.r) - g.kD * s.w;
}

/// tau_PD = -kP log(R_ref^T R) - kD (w - R^T R_ref w_ref).
inline BodyVector tracking_pd_torque(const RigidBodyState& s, const TrackingReference& ref, double t,
                                     const GainPair& g) {
  const Rotation r_ref = ref.rotation(t);
  const BodyVector w_t = transport_velocity(s.r, r_ref, ref.omega(t));
  return -g.kP * log_so3(r_ref.transpose() * s.r) - g.kD * (s.w - w_t);
}

/**
 * Feedforward torque with w_t = R^T R_ref w_ref:
 *   1/2 (w x w_t - J^-1 (J w_t x w + J w x w_t)),
 * plus R^T R_ref w_ref'(t) when `accel_term` is set.
 */
inline BodyVector feedforward_torque(const RigidBodyState& s, const TrackingReference& ref, double t,
                                     const InertiaTensor& j, bool accel_term) {
  const Rotation r_ref = ref.rotation(t);
  const BodyVector w_t = transport_velocity(s.r, r_ref, ref.omega(t));
  const Eigen::Matrix3d& jm = j.matrix();
  BodyVector tau = 0.5 * (s.w.cross(w_t) - j.inverse() * ((jm * w_t).cross(s.w) + (jm * s.w).cross(w_t)));
  if (accel_term) tau += transport_velocity(s.r, r_ref, ref.omega_dot(t));
  return tau;
}

inline BodyVector tracking_torque(const RigidBodyState& s, const TrackingReference& ref, double t,
                                  const InertiaTensor& j, const ControllerConfig& cfg) {
  return tracking_pd_torque(s, ref, t, cfg.gains_at(t)) + feedforward_torque(s, ref, t, j, cfg.feedforward_accel_term);
}

/// kP * (1/2) d^2(R_d, R) + (1/2)|w|^2.
inline double lyapunov_value(const RigidBodyState& s, const RegulationGoal& goal, const GainPair& g) {
  const BodyVector e = log_so3(goal.r_d.transpose() * s.r);
  return 0.5 * g.kP * e.squaredNorm() + 0.5 * s.w.squaredNorm();
}

/// V = k1 U + (k2/2)|w|^2 + k3 <grad U, w> with grad U = log(R_d^T R).
inline double value_candidate(const RigidBodyState& s, const RegulationGoal& goal, const RiccatiSolution& k) {
  const BodyVector e = log_so3(goal.r_d.transpose() * s.r);
  return 0.5 * k.k1 * e.squaredNorm() + 0.5 * k.k2 * s.w.squaredNorm() + k.k3 * e.dot(s.w);
}

/// Running cost U + (1/2)|w|^2 + (alpha/2)|tau|^2 of the regulation problem.
inline double regulation_running_cost(const RigidBodyState& s, const RegulationGoal& goal, const BodyVector& tau,
                                      double alpha) {
  const BodyVector e = log_so3(goal.r_d.transpose() * s.r);
  return 0.5 * e.squaredNorm() + 0.5 * s.w.squaredNorm() + 0.5 * alpha * tau.squaredNorm();
}

/// <grad_q V, w> + <grad_v V, tau> + L for the quadratic candidate V; zero
/// along the optimal feedback when K solves the undiscounted scalar system.
inline double regulation_hamiltonian(const RigidBodyState& s, const RegulationGoal& goal, const RiccatiSolution& k,
                                     const BodyVector& tau, double alpha) {
  const BodyVector e = log_so3(goal.r_d.transpose() * s.r);
  const BodyVector p1 = k.k1 * e + k.k3 * s.w;
  const BodyVector p2 = k.k3 * e + k.k2 * s.w;
  return p1.dot(s.w) + p2.dot(tau) + 0.5 * e.squaredNorm() + 0.5 * s.w.squaredNorm() +
         0.5 * alpha * tau.squaredNorm();
}

/// Tracking analogue of lyapunov_value with the velocity error w - w_t.
inline double tracking_lyapunov_value(const RigidBodyState& s, const TrackingReference& ref, double t,
                                      const GainPair& g) {
  const Rotation r_ref = ref.rotation(t);
  const BodyVector e = log_so3(r_ref.transpose() * s.r);
  const BodyVector ew = s.w - transport_velocity(s.r, r_ref, ref.omega(t));
  return 0.5 * g.kP * e.squaredNorm() + 0.5 * ew.squaredNorm();
}

inline double tracking_value_candidate(const RigidBodyState& s, const TrackingReference& ref, double t,
                                       const RiccatiSolution& k) {
  const Rotation r_ref = ref.rotation(t);
  const BodyVector e = log_so3(r_ref.transpose() * s.r);
  const BodyVector ew = s.w - transport_velocity(s.r, r_ref, ref.omega(t));
  return 0.5 * k.k1 * e.squaredNorm() + 0.5 * k.k2 * ew.squaredNorm() + k.k3 * e.dot(ew);
}

}  // namespace geolqr
