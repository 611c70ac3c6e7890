#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "geolqr/dynamics.hpp"
#include "geolqr/errors.hpp"
#include "geolqr/pmp/avoidance.hpp"
#include "geolqr/pmp/manifold.hpp"

namespace geolqr::pmp {

struct TranscriptionOptions {
  int grid_points = 200;
  int max_iterations = 5000;
  /// Stop when the quadrature-weighted gradient norm falls below this.
  double gradient_tolerance = 1e-6;
  /// Below this gradient norm a failed line search means the finite-difference
  /// noise floor has been reached, and the best control is returned.
  double noise_floor = 1e-4;
  double fd_step = 1e-7;
  int max_stalls = 50;
  /// Relative cost decrease per iteration treated as no progress.
  double stall_tolerance = 1e-12;
  /// Consecutive no-progress iterations before refining or stopping.
  int stall_window = 20;
  /// Also solve on the halved grid and extrapolate the cost.
  bool richardson = false;
  /// Worker threads for the gradient; 0 or 1 evaluates serially.
  unsigned threads = 0;
};

struct TranscriptionResult {
  BVPSolution<FlatSpace> solution;
  /// J(u_k) for every accepted iterate, starting with u_0 = 0.
  std::vector<double> cost_history;
  /// Accepted costs on the halved grid when `richardson` is set.
  std::vector<double> fine_cost_history;
  /// Grid cost of the returned solution.
  double grid_cost = 0.0;
  /// 2 J_fine - J_coarse with `richardson`, otherwise the grid cost.
  double extrapolated_cost = 0.0;
  bool converged = false;
};

namespace detail {

/// Discretized cost J(u) on the grid t_i = i T/(N-1), states from flat_step.
class TranscribedCost {
 public:
  TranscribedCost(const AvoidanceScenario<FlatSpace>& sc, int n_points)
      : sc_(sc), n_(sc.dimension()), points_(n_points), dt_(sc.horizon / (n_points - 1)), weights_(n_points, dt_) {
    weights_.front() = weights_.back() = 0.5 * dt_;
  }

  int points() const { return points_; }
  Eigen::Index dimension() const { return n_; }
  double dt() const { return dt_; }
  double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }

  /// Prefix data of a rollout, so a perturbation of column i restarts at sample i.
  struct Trace {
    std::vector<Eigen::VectorXd> q;
    std::vector<Eigen::VectorXd> v;
    std::vector<double> partial;  // weighted running cost summed over samples < i
  };

  double operator()(const Eigen::MatrixXd& u, Trace* trace = nullptr) const {
    return rollout(u, 0, sc_.q0, sc_.v0, 0.0, trace);
  }

  /// Cost with the rollout resumed at sample `start` from a stored trace.
  double resume(const Eigen::MatrixXd& u, int start, const Trace& trace) const {
    const auto s = static_cast<std::size_t>(start);
    return rollout(u, start, trace.q[s], trace.v[s], trace.partial[s], nullptr);
  }

  PathSamples<FlatSpace> path(const Eigen::MatrixXd& u) const {
    PathSamples<FlatSpace> p;
    Eigen::VectorXd q = sc_.q0;
    Eigen::VectorXd v = sc_.v0;
    for (int i = 0; i < points_; ++i) {
      p.times.push_back(i * dt_);
      p.q.push_back(q);
      p.v.push_back(v);
      p.u.push_back(u.col(i));
      if (i + 1 < points_) flat_step_in_place(q, v, u.col(i), dt_);
    }
    // Du/Dt by finite differences of the grid control.
    for (int i = 0; i < points_; ++i) {
      const int a = std::max(0, i - 1);
      const int b = std::min(points_ - 1, i + 1);
      p.du.push_back((u.col(b) - u.col(a)) / ((b - a) * dt_));
    }
    return p;
  }

 private:
  double rollout(const Eigen::MatrixXd& u, int start, Eigen::VectorXd q, Eigen::VectorXd v, double acc,
                 Trace* trace) const {
    if (trace) {
      trace->q.resize(static_cast<std::size_t>(points_));
      trace->v.resize(static_cast<std::size_t>(points_));
      trace->partial.resize(static_cast<std::size_t>(points_));
    }
    Eigen::VectorXd ui(n_);
    for (int i = start; i < points_; ++i) {
      if (trace) {
        trace->q[static_cast<std::size_t>(i)] = q;
        trace->v[static_cast<std::size_t>(i)] = v;
        trace->partial[static_cast<std::size_t>(i)] = acc;
      }
      if (!(sc_.clearance(q) > 0.0)) return std::numeric_limits<double>::infinity();
      ui = u.col(i);
      acc += weights_[static_cast<std::size_t>(i)] * running_cost(sc_, q, v, ui);
      if (i + 1 < points_) flat_step_in_place(q, v, ui, dt_);
    }
    return acc + terminal_cost(sc_, q, v);
  }

  const AvoidanceScenario<FlatSpace>& sc_;
  Eigen::Index n_;
  int points_;
  double dt_;
  std::vector<double> weights_;
};

}  // namespace detail

namespace detail {

struct DescentOutcome {
  Eigen::MatrixXd u;
  double cost = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline DescentOutcome descend(const TranscribedCost& cost, Eigen::MatrixXd u, const TranscriptionOptions& opt,
                              std::vector<double>& history) {
  const Eigen::Index n = cost.dimension();
  const int m = cost.points();

  // Weighted inner product <a, b>_w = sum_i w_i a_i . b_i.
  auto inner = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += cost.weight(i) * a.col(i).dot(b.col(i));
    return s;
  };

  // Gradient in the weighted metric: dJ/du_i / w_i.
  auto gradient = [&](const Eigen::MatrixXd& x, double j0, const TranscribedCost::Trace& trace, bool central) {
    Eigen::MatrixXd g(n, m);
    auto work = [&](Eigen::Index begin, Eigen::Index end) {
      Eigen::MatrixXd up = x;
      for (Eigen::Index idx = begin; idx < end; ++idx) {
        const int i = static_cast<int>(idx / n);
        const Eigen::Index k = idx % n;
        const double base = x(k, i);
        const double delta = opt.fd_step * std::max(1.0, std::abs(base));
        up(k, i) = base + delta;
        const double jp = cost.resume(up, i, trace);
        double d;
        if (central || !std::isfinite(jp)) {
          up(k, i) = base - delta;
          const double jm = cost.resume(up, i, trace);
          d = std::isfinite(jp) ? (jp - jm) / (2.0 * delta) : (j0 - jm) / delta;
        } else {
          d = (jp - j0) / delta;
        }
        up(k, i) = base;
        g(k, i) = d / cost.weight(i);
      }
    };
    const Eigen::Index total = n * m;
    const unsigned workers = std::min<unsigned>(opt.threads, static_cast<unsigned>(total));
    if (workers <= 1) {
      work(0, total);
    } else {
      std::vector<std::thread> pool;
      const Eigen::Index chunk = (total + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const Eigen::Index b = std::min<Eigen::Index>(total, w * chunk);
        const Eigen::Index e = std::min<Eigen::Index>(total, b + chunk);
        pool.emplace_back(work, b, e);
      }
      for (auto& t : pool) t.join();
    }
    return g;
  };

  DescentOutcome out;
  TranscribedCost::Trace trace;
  double j = cost(u, &trace);
  if (!std::isfinite(j)) throw Error(ErrorKind::ObstacleContact, "initial control drives the path into an obstacle");
  history.push_back(j);

  bool central = false;
  int stalls = 0;
  int flat = 0;
  int iter = 0;
  Eigen::MatrixXd g = gradient(u, j, trace, central);
  Eigen::MatrixXd prev_u;
  Eigen::MatrixXd prev_g;
  double step = 1.0;
  double gnorm = std::sqrt(inner(g, g));

  auto switch_to_central = [&] {
    central = true;
    step = 1.0;
    prev_u.resize(0, 0);
    g = gradient(u, j, trace, central);
    gnorm = std::sqrt(inner(g, g));
  };

  while (iter < opt.max_iterations) {
    if (gnorm <= opt.gradient_tolerance) {
      out.converged = true;
      break;
    }
    ++iter;
    if (prev_u.size() > 0) {
      const Eigen::MatrixXd du = u - prev_u;
      const Eigen::MatrixXd dg = g - prev_g;
      const double curv = inner(du, dg);
      if (curv > 0.0) step = std::clamp(inner(du, du) / curv, 1e-10, 1e10);
    }

    bool accepted = false;
    const double decrease = gnorm * gnorm;
    Eigen::MatrixXd trial;
    double jt = j;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      trial = u - step * g;
      jt = cost(trial);
      if (jt <= j - 1e-4 * step * decrease) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (gnorm <= opt.noise_floor && central) {
        out.converged = true;
        break;
      }
      if (++stalls >= opt.max_stalls) {
        throw Error(ErrorKind::NoDescent, "line search stalled " + std::to_string(stalls) +
                                              " consecutive times (gradient norm " + std::to_string(gnorm) + ")");
      }
      switch_to_central();
      continue;
    }

    stalls = 0;
    prev_u = u;
    prev_g = g;
    u = trial;
    const double j_old = j;
    j = cost(u, &trace);
    history.push_back(j);
    // Progress below the stall threshold means the gradient is dominated by
    // difference noise: refine it once, then stop.
    flat = (j_old - j <= opt.stall_tolerance * std::abs(j)) ? flat + 1 : 0;
    if (flat >= opt.stall_window) {
      if (central && gnorm <= opt.noise_floor) {
        out.converged = true;
        break;
      }
      flat = 0;
      switch_to_central();
      continue;
    }
    g = gradient(u, j, trace, central);
    gnorm = std::sqrt(inner(g, g));
  }

  out.u = std::move(u);
  out.cost = j;
  out.gradient_norm = gnorm;
  out.iterations = iter;
  return out;
}

/// Piecewise-linear resampling of a grid control onto 2N-1 points.
inline Eigen::MatrixXd refine_control(const Eigen::MatrixXd& u) {
  const Eigen::Index m = u.cols();
  Eigen::MatrixXd fine(u.rows(), 2 * m - 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    fine.col(2 * i) = u.col(i);
    if (i + 1 < m) fine.col(2 * i + 1) = 0.5 * (u.col(i) + u.col(i + 1));
  }
  return fine;
}

}  // namespace detail

/**
 * @brief Direct-transcription reference solution on flat space.
 *
 * Minimizes the grid cost by gradient descent on finite-difference gradients
 * preconditioned by the quadrature weights. Steps start from the
 * Barzilai-Borwein length and are backtracked until the Armijo condition
 * holds, so accepted costs never increase. After a failed line search the
 * next gradient uses central differences. Throws NoDescent after
 * `max_stalls` consecutive failed line searches above the noise floor.
 *
 * The grid cost converges to the continuous optimum at first order in the
 * spacing. With `richardson` set, the problem is solved again on the halved
 * grid (warm-started from the coarse control) and `extrapolated_cost` holds
 * 2 J_fine - J_coarse; `solution` then describes the fine grid.
 */
inline TranscriptionResult transcription_oracle(const AvoidanceScenario<FlatSpace>& sc,
                                                const TranscriptionOptions& opt = {}) {
  sc.validate();
  if (opt.grid_points < 50) throw Error(ErrorKind::InvalidArgument, "transcription needs at least 50 grid points");

  TranscriptionResult res;
  const detail::TranscribedCost coarse(sc, opt.grid_points);
  auto outcome = detail::descend(coarse, Eigen::MatrixXd::Zero(coarse.dimension(), coarse.points()), opt,
                                 res.cost_history);
  res.grid_cost = outcome.cost;
  res.extrapolated_cost = outcome.cost;
  const detail::TranscribedCost* final_grid = &coarse;

  std::optional<detail::TranscribedCost> fine;
  if (opt.richardson) {
    fine.emplace(sc, 2 * opt.grid_points - 1);
    const double coarse_cost = outcome.cost;
    const int coarse_iterations = outcome.iterations;
    const bool coarse_converged = outcome.converged;
    outcome = detail::descend(*fine, detail::refine_control(outcome.u), opt, res.fine_cost_history);
    outcome.iterations += coarse_iterations;
    outcome.converged = outcome.converged && coarse_converged;
    res.grid_cost = outcome.cost;
    res.extrapolated_cost = 2.0 * outcome.cost - coarse_cost;
    final_grid = &*fine;
  }

  res.converged = outcome.converged;
  res.solution.path = final_grid->path(outcome.u);
  res.solution.cost = outcome.cost;
  res.solution.iterations = outcome.iterations;
  res.solution.terminal_residual = outcome.gradient_norm;
  for (const auto& q : res.solution.path.q) {
    res.solution.min_clearance = std::min(res.solution.min_clearance, sc.clearance(q));
  }
  return res;
}

}  // namespace geolqr::pmp
