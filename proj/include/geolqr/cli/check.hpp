#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geolqr/cli/summary.hpp"
#include "geolqr/dynamics.hpp"
#include "geolqr/pmp.hpp"
#include "geolqr/regulators.hpp"
#include "geolqr/riccati.hpp"
#include "geolqr/so3.hpp"

namespace geolqr::cli {

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

/// Runs `body`, which returns the measured quantity, and compares it with `bound`.
inline CheckResult bounded(const std::string& name, double bound, const std::function<double()>& body) {
  try {
    const double value = body();
    const bool ok = std::isfinite(value) && value <= bound;
    return {name, ok, fmt(value) + " <= " + fmt(bound)};
  } catch (const std::exception& e) {
    return {name, false, e.what()};
  }
}

inline Eigen::Vector3d random_axis_angle(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d axis(n(rng), n(rng), n(rng));
  axis.normalize();
  return axis * (max_angle * u(rng));
}

inline double gain_error(AMatrixMode mode, double alpha, double gamma, double kp, double kd) {
  const CostParams p{alpha, gamma, Eigen::Matrix2d::Identity()};
  const auto sol = are_solve(a_matrix(mode, gamma), default_b(), p.q_weights, alpha);
  const GainPair g = gains_from_K(sol, p);
  return std::max(std::abs(g.kP - kp), std::abs(g.kD - kd));
}

}  // namespace detail

/// Quick built-in invariant suite behind `geo-lqr check`. Deterministic.
inline std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(20240611);

  out.push_back(detail::bounded("exp_log_roundtrip", 1e-9, [&] {
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Vector3d v = detail::random_axis_angle(rng, std::numbers::pi - 1e-3);
      worst = std::max(worst, (log_so3(exp_so3(v)) - v).norm());
    }
    return worst;
  }));

  out.push_back(detail::bounded("hat_vee_inverse", 0.0, [&] {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Eigen::Vector3d v = detail::random_axis_angle(rng, 10.0);
      worst = std::max(worst, (vee(hat(v)) - v).norm());
    }
    return worst;
  }));

  out.push_back(detail::bounded("regulation_gains", 1e-3, [] {
    return detail::gain_error(AMatrixMode::PaperRegulation, 0.5, 0.0, 1.4142, 2.7671);
  }));

  out.push_back(detail::bounded("tracking_gains", 1e-3, [] {
    return detail::gain_error(AMatrixMode::PaperTracking, 1.0, -2.0, 8.7852, 8.3357);
  }));

  out.push_back(detail::bounded("reconciled_scalar_consistency", 1e-9, [&] {
    std::uniform_real_distribution<double> g(-2.0, 2.0);
    std::uniform_real_distribution<double> la(std::log(0.1), std::log(10.0));
    double worst = 0.0;
    int solved = 0;
    while (solved < 50) {
      const CostParams p{std::exp(la(rng)), g(rng), Eigen::Matrix2d::Identity()};
      RiccatiSolution sol;
      try {
        sol = are_solve(a_matrix(AMatrixMode::Reconciled, p.gamma), default_b(), p.q_weights, p.alpha);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::NoStabilizingSolution) continue;
        throw;
      }
      worst = std::max(worst, scalar_residual(sol, p).cwiseAbs().maxCoeff());
      ++solved;
    }
    return worst;
  }));

  out.push_back(detail::bounded("dre_reaches_are", 1e-4, [] {
    const Eigen::Matrix2d a = a_matrix(AMatrixMode::PaperTracking, -2.0);
    const Eigen::Matrix2d q = Eigen::Matrix2d::Identity();
    const auto are = are_solve(a, default_b(), q, 1.0);
    const auto dre = dre_integrate(a, default_b(), q, 1.0, 50.0, 1e-3);
    return (dre.at(0.0).matrix() - are.matrix()).cwiseAbs().maxCoeff();
  }));

  out.push_back(detail::bounded("lie_euler_orthogonality", 1e-10, [] {
    const InertiaTensor j = InertiaTensor::diagonal(1.0, 2.0, 3.0);
    RigidBodyState s{Rotation::identity(), BodyVector(0.3, -1.1, 0.7)};
    for (int i = 0; i < 10000; ++i) s = lie_euler_step(s, BodyVector::Zero(), 1e-3, j);
    return s.r.orthogonality_defect();
  }));

  out.push_back(detail::bounded("regulation_equilibrium", 1e-15, [&] {
    const RegulationGoal goal{exp_so3(detail::random_axis_angle(rng, 2.0))};
    return regulation_torque({goal.r_d, BodyVector::Zero()}, goal, {1.4142, 2.7671}).norm();
  }));

  out.push_back(detail::bounded("so3_sectional_curvature", 1e-12, [&] {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d x = detail::random_axis_angle(rng, 1.0).normalized();
      Eigen::Vector3d y = detail::random_axis_angle(rng, 1.0);
      y = (y - y.dot(x) * x).normalized();
      const double k = pmp::So3BiInvariant::curvature(x, y, y).dot(x);
      worst = std::max(worst, std::abs(k - 0.25));
    }
    return worst;
  }));

  out.push_back(detail::bounded("linear_bvp_hamiltonian_spread", 1e-6, [] {
    pmp::AvoidanceScenario<pmp::FlatSpace> sc;
    sc.q0 = Eigen::VectorXd::Constant(1, 1.0);
    sc.v0 = Eigen::VectorXd::Zero(1);
    sc.target = Eigen::VectorXd::Zero(1);
    const auto sol = pmp::shooting_solve(sc);
    return pmp::scenario_costate(sc, sol.path).spread();
  }));

  return out;
}

}  // namespace geolqr::cli
