#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "geolqr/errors.hpp"

namespace geolqr {

/// Quadratic cost weights: control weight alpha, discount gamma, state weight Q.
struct CostParams {
  double alpha = 1.0;
  double gamma = 0.0;
  Eigen::Matrix2d q_weights = Eigen::Matrix2d::Identity();

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorKind::ValidationError, "alpha must be positive", "cost.alpha");
    }
    if (!std::isfinite(gamma)) {
      throw Error(ErrorKind::ValidationError, "gamma must be finite", "cost.gamma");
    }
  }
};

/// Symmetric K = [[k1, k3], [k3, k2]].
struct RiccatiSolution {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d k;
    k << k1, k3, k3, k2;
    return k;
  }

  /// Reads the upper triangle; the caller is responsible for symmetry.
  static RiccatiSolution from_matrix(const Eigen::Matrix2d& k) { return {k(0, 0), k(1, 1), k(0, 1)}; }

  bool positive_definite() const { return k1 > 0.0 && k2 > 0.0 && k1 * k2 - k3 * k3 > 0.0; }
};

struct GainPair {
  double kP = 0.0;
  double kD = 0.0;
};

/// How the 2x2 drift matrix A is built from the discount gamma.
enum class AMatrixMode {
  PaperRegulation,  // [[0, 2], [0, 0]]
  PaperTracking,    // [[-gamma, 2], [0, -gamma]]
  Reconciled,       // [[-gamma/2, 1], [0, -gamma/2]], consistent with the scalar system
};

inline Eigen::Matrix2d a_matrix(AMatrixMode mode, double gamma) {
  Eigen::Matrix2d a;
  switch (mode) {
    case AMatrixMode::PaperRegulation: a << 0.0, 2.0, 0.0, 0.0; break;
    case AMatrixMode::PaperTracking: a << -gamma, 2.0, 0.0, -gamma; break;
    case AMatrixMode::Reconciled: a << -0.5 * gamma, 1.0, 0.0, -0.5 * gamma; break;
  }
  return a;
}

/// Actuation column shared by every Riccati problem in this library.
inline Eigen::Vector2d default_b() { return Eigen::Vector2d(0.0, 1.0); }

/// Residuals of the coupled scalar Riccati system obtained by matching the
/// HJB coefficients of U, |v|^2 and <grad U, v>.
inline Eigen::Vector3d scalar_residual(const RiccatiSolution& s, const CostParams& p) {
  const double a = p.alpha;
  const double g = p.gamma;
  return {1.0 - s.k3 * s.k3 / a - g * s.k1,
          1.0 + 2.0 * s.k3 - s.k2 * s.k2 / a - g * s.k2,
          s.k1 - s.k3 * s.k2 / a - g * s.k3};
}

/// A^T K + K A - K B Rw^-1 B^T K + Q.
inline Eigen::Matrix2d are_residual(const Eigen::Matrix2d& a, const Eigen::Vector2d& b, const Eigen::Matrix2d& q,
                                    double rw, const Eigen::Matrix2d& k) {
  return a.transpose() * k + k * a - (k * b) * (b.transpose() * k) / rw + q;
}

namespace detail {

/// Solves Ac^T X + X Ac = -C for symmetric X (2x2) as a 3x3 linear system.
inline Eigen::Matrix2d solve_lyapunov_2x2(const Eigen::Matrix2d& ac, const Eigen::Matrix2d& c) {
  // Unknowns (x11, x22, x12).
  const double a11 = ac(0, 0), a12 = ac(0, 1), a21 = ac(1, 0), a22 = ac(1, 1);
  Eigen::Matrix3d m;
  m << 2.0 * a11, 0.0, 2.0 * a21,
       0.0, 2.0 * a22, 2.0 * a12,
       a12, a21, a11 + a22;
  const Eigen::Vector3d rhs(-c(0, 0), -c(1, 1), -0.5 * (c(0, 1) + c(1, 0)));
  const Eigen::Vector3d x = m.fullPivLu().solve(rhs);
  Eigen::Matrix2d out;
  out << x(0), x(2), x(2), x(1);
  return out;
}

inline Eigen::Matrix2d symmetrize(const Eigen::Matrix2d& k) { return 0.5 * (k + k.transpose()); }

}  // namespace detail

/**
 * @brief Stabilizing solution of A^T K + K A - K B Rw^-1 B^T K = -Q.
 *
 * Eigenvector method on the Hamiltonian matrix [[A, -B Rw^-1 B^T], [-Q, -A^T]]:
 * the stable invariant subspace [X1; X2] gives K = X2 X1^-1, which is then
 * polished by Newton (Kleinman) iterations.
 */
inline RiccatiSolution are_solve(const Eigen::Matrix2d& a, const Eigen::Vector2d& b, const Eigen::Matrix2d& q,
                                 double rw) {
  if (!(rw > 0.0)) throw Error(ErrorKind::InvalidArgument, "control weight must be positive");

  Eigen::Matrix2d ctrb;
  ctrb << b, a * b;
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(ctrb);
  const Eigen::Vector2d sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorKind::NotControllable, "rank [B, AB] < 2");
  }

  const Eigen::Matrix2d s = b * b.transpose() / rw;
  Eigen::Matrix4d ham;
  ham << a, -s, -q, -a.transpose();

  Eigen::EigenSolver<Eigen::Matrix4d> es(ham);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NoStabilizingSolution, "Hamiltonian eigen-decomposition failed");
  }
  const double scale = 1.0 + ham.norm();
  Eigen::Matrix<std::complex<double>, 4, 2> basis;
  int n_stable = 0;
  for (int i = 0; i < 4; ++i) {
    const double re = es.eigenvalues()(i).real();
    if (std::abs(re) <= 1e-10 * scale) {
      throw Error(ErrorKind::NoStabilizingSolution, "Hamiltonian has eigenvalues on the imaginary axis");
    }
    if (re < 0.0 && n_stable < 2) basis.col(n_stable++) = es.eigenvectors().col(i);
  }
  if (n_stable != 2) {
    throw Error(ErrorKind::NoStabilizingSolution, "stable invariant subspace has wrong dimension");
  }
  const Eigen::Matrix2cd x1 = basis.topRows<2>();
  const Eigen::Matrix2cd x2 = basis.bottomRows<2>();
  Eigen::Matrix2d k = detail::symmetrize((x2 * x1.inverse()).real());

  double best = are_residual(a, b, q, rw, k).norm();
  for (int it = 0; it < 10 && best > 1e-15 * (1.0 + k.norm()); ++it) {
    const Eigen::Matrix2d ac = a - s * k;
    const Eigen::Matrix2d next = detail::symmetrize(detail::solve_lyapunov_2x2(ac, q + k * s * k));
    const double r = are_residual(a, b, q, rw, next).norm();
    if (!(r < best)) break;
    k = next;
    best = r;
  }

  const RiccatiSolution sol = RiccatiSolution::from_matrix(k);
  if (!sol.positive_definite() || !k.allFinite()) {
    throw Error(ErrorKind::NoStabilizingSolution, "Riccati solution is not positive definite");
  }
  const Eigen::Matrix2d closed = a - s * k;
  Eigen::EigenSolver<Eigen::Matrix2d> cl(closed, false);
  if (cl.eigenvalues().real().maxCoeff() >= 0.0) {
    throw Error(ErrorKind::NoStabilizingSolution, "closed loop is not Hurwitz");
  }
  return sol;
}

/// (kP, kD) = Rw^-1 B^T K with B = [0; 1] and Rw = alpha.
inline GainPair gains_from_K(const RiccatiSolution& s, const CostParams& p) {
  return {s.k3 / p.alpha, s.k2 / p.alpha};
}

/// Time-indexed Riccati solutions on a uniform ascending grid ending at T.
struct GainSchedule {
  std::vector<double> times;
  std::vector<RiccatiSolution> solutions;
  Eigen::Vector2d b = default_b();
  double rw = 1.0;

  double horizon() const { return times.empty() ? 0.0 : times.back(); }

  /// Linear interpolation, clamped to [0, T].
  RiccatiSolution at(double t) const {
    if (times.empty()) throw Error(ErrorKind::InvalidArgument, "empty gain schedule");
    if (t <= times.front()) return solutions.front();
    if (t >= times.back()) return solutions.back();
    const double h = times[1] - times[0];
    auto i = static_cast<std::size_t>(std::floor((t - times.front()) / h));
    i = std::min(i, times.size() - 2);
    const double w = std::clamp((t - times[i]) / (times[i + 1] - times[i]), 0.0, 1.0);
    const RiccatiSolution& lo = solutions[i];
    const RiccatiSolution& hi = solutions[i + 1];
    return {lo.k1 + w * (hi.k1 - lo.k1), lo.k2 + w * (hi.k2 - lo.k2), lo.k3 + w * (hi.k3 - lo.k3)};
  }

  /// Rw^-1 B^T K(t), read as (kP, kD).
  GainPair gains_at(double t) const {
    const Eigen::Vector2d g = (b.transpose() * at(t).matrix()).transpose() / rw;
    return {g(0), g(1)};
  }
};

/**
 * Backward integration of K' + A^T K + K A - K B Rw^-1 B^T K = -Q from
 * K(T) = 0 with classical RK4 on (k1, k2, k3). The step is shrunk to T/N with
 * N = ceil(T/h) so the grid lands on t = 0 exactly.
 */
inline GainSchedule dre_integrate(const Eigen::Matrix2d& a, const Eigen::Vector2d& b, const Eigen::Matrix2d& q,
                                  double rw, double horizon, double h) {
  if (!(horizon > 0.0) || !(h > 0.0) || h > horizon) {
    throw Error(ErrorKind::InvalidArgument, "dre_integrate needs T > 0 and 0 < h <= T");
  }
  if (!(rw > 0.0)) throw Error(ErrorKind::InvalidArgument, "control weight must be positive");

  const auto n = static_cast<std::size_t>(std::ceil(horizon / h - 1e-9));
  const double step = horizon / static_cast<double>(n);
  const Eigen::Matrix2d s = b * b.transpose() / rw;

  using State = Eigen::Vector3d;  // (k1, k2, k3)
  const auto to_k = [](const State& x) {
    Eigen::Matrix2d k;
    k << x(0), x(2), x(2), x(1);
    return k;
  };
  // d/d(tau) with tau = T - t.
  const auto rhs = [&](const State& x) {
    const Eigen::Matrix2d k = to_k(x);
    const Eigen::Matrix2d d = a.transpose() * k + k * a - k * s * k + q;
    return State(d(0, 0), d(1, 1), 0.5 * (d(0, 1) + d(1, 0)));
  };

  GainSchedule out;
  out.b = b;
  out.rw = rw;
  out.times.resize(n + 1);
  out.solutions.resize(n + 1);
  State x = State::Zero();
  out.solutions[n] = {0.0, 0.0, 0.0};
  out.times[n] = horizon;
  for (std::size_t i = n; i-- > 0;) {
    const State k1 = rhs(x);
    const State k2 = rhs(x + 0.5 * step * k1);
    const State k3 = rhs(x + 0.5 * step * k2);
    const State k4 = rhs(x + step * k3);
    x += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e9) {
      throw Error(ErrorKind::StepTooLarge,
                  "Riccati solution escaped at t = " + std::to_string(static_cast<double>(i) * step));
    }
    out.solutions[i] = {x(0), x(1), x(2)};
    out.times[i] = static_cast<double>(i) * step;
  }
  return out;
}

}  // namespace geolqr
