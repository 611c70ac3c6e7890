#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "geolqr/cli/check.hpp"
#include "geolqr/cli/config.hpp"
#include "geolqr/cli/csv.hpp"
#include "geolqr/cli/summary.hpp"
#include "geolqr/dynamics.hpp"
#include "geolqr/pmp.hpp"
#include "geolqr/regulators.hpp"
#include "geolqr/riccati.hpp"

namespace geolqr::cli {

inline constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();

namespace detail {

/// Riccati solution feeding the regulator, static or scheduled.
struct GainPlan {
  ControllerConfig controller;
  RiccatiSolution k0;
  std::optional<GainSchedule> schedule;

  RiccatiSolution k_at(double t) const { return schedule ? schedule->at(t) : k0; }
};

inline GainPlan plan_gains(const ScenarioConfig& cfg) {
  if (!cfg.a_matrix) {
    throw Error(ErrorKind::ValidationError, "an explicit A-matrix mode is required for this command",
                "cost.a_matrix");
  }
  const Eigen::Matrix2d a = a_matrix(*cfg.a_matrix, cfg.cost.gamma);
  GainPlan plan;
  plan.controller.feedforward_accel_term = cfg.feedforward_accel_term;
  if (cfg.gain_source == GainSource::Are) {
    plan.k0 = are_solve(a, default_b(), cfg.cost.q_weights, cfg.cost.alpha);
    plan.controller.gains = gains_from_K(plan.k0, cfg.cost);
  } else {
    GainSchedule s = dre_integrate(a, default_b(), cfg.cost.q_weights, cfg.cost.alpha, cfg.sim.t_end, cfg.sim.h);
    plan.k0 = s.at(0.0);
    plan.controller.gains = ScheduledGains{s};
    plan.schedule = std::move(s);
  }
  return plan;
}

inline ResolvedGains resolved(const GainPlan& plan) {
  const GainPair g = plan.controller.gains_at(0.0);
  return {g.kP, g.kD, plan.k0.k1, plan.k0.k2, plan.k0.k3};
}

inline void guard_injectivity(const Rotation& from, const Rotation& to, const std::string& field) {
  const double d = geodesic_distance(from, to);
  if (d >= kInjectivityGuard) {
    throw Error(ErrorKind::ValidationError,
                "initial error " + std::to_string(d) + " rad is beyond the injectivity guard pi - 0.1", field);
  }
}

inline std::filesystem::path output_path(const std::filesystem::path& dir, const std::string& name,
                                         const std::string& fallback) {
  return dir / (name.empty() ? fallback : name);
}

/// Rows 0, d, 2d, ... plus the final sample.
inline bool keep_row(std::size_t i, std::size_t last, int decimation) {
  return i % static_cast<std::size_t>(decimation) == 0 || i == last;
}

inline std::vector<double> attitude_row(double t, const RigidBodyState& s, const BodyVector& tau, double dist,
                                        double lyap, double value, double hamiltonian) {
  const Eigen::Matrix3d& r = s.r.matrix();
  return {t,       r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2),
          s.w(0),  s.w(1),  s.w(2),  tau(0),  tau(1),  tau(2),  dist,    lyap,    value,   hamiltonian};
}

inline void write_attitude_log(const TrajectoryLog& log, const std::filesystem::path& path, int decimation,
                               const std::function<std::array<double, 4>(std::size_t)>& diagnostics,
                               RunSummary& summary) {
  CsvWriter csv(path, attitude_columns());
  const std::size_t last = log.size() - 1;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (!keep_row(i, last, decimation)) continue;
    const auto d = diagnostics(i);
    csv.row(attitude_row(log.times[i], log.states[i], log.torques[i], d[0], d[1], d[2], d[3]));
  }
  csv.close();
  summary.csv = path.string();
  summary.rows = csv.rows();
}

inline void run_gains(const ScenarioConfig& cfg, RunSummary& summary, std::ostream& human) {
  const GainPlan plan = plan_gains(cfg);
  summary.gains = resolved(plan);
  human << std::fixed << std::setprecision(4) << "kP=" << summary.gains->kP << ", kD=" << summary.gains->kD
        << '\n';
}

inline void run_regulate(const ScenarioConfig& cfg, const std::filesystem::path& out, RunSummary& summary,
                         std::ostream& human) {
  guard_injectivity(cfg.goal, cfg.initial.r, "initial.rotation");
  const GainPlan plan = plan_gains(cfg);
  summary.gains = resolved(plan);
  const RegulationGoal goal{cfg.goal};
  const Controller law = [&](double t, const RigidBodyState& s) {
    return regulation_torque(s, goal, plan.controller.gains_at(t));
  };
  const TrajectoryLog log = simulate(law, cfg.initial, cfg.sim);
  const double alpha = cfg.cost.alpha;
  write_attitude_log(
      log, output_path(out, cfg.output.csv, "regulate.csv"), cfg.output.decimation,
      [&](std::size_t i) {
        const double t = log.times[i];
        const RigidBodyState& s = log.states[i];
        const RiccatiSolution k = plan.k_at(t);
        return std::array<double, 4>{geodesic_distance(goal.r_d, s.r),
                                     lyapunov_value(s, goal, plan.controller.gains_at(t)),
                                     value_candidate(s, goal, k),
                                     regulation_hamiltonian(s, goal, k, log.torques[i], alpha)};
      },
      summary);
  summary.final_distance = geodesic_distance(goal.r_d, log.states.back().r);
  summary.final_velocity_norm = log.states.back().w.norm();
  summary.iterations["steps"] = static_cast<int>(log.size() - 1);
  human << "final distance " << *summary.final_distance << " rad after " << cfg.sim.t_end << " s\n";
}

inline void run_track(const ScenarioConfig& cfg, const std::filesystem::path& out, RunSummary& summary,
                      std::ostream& human) {
  if (!cfg.reference) throw Error(ErrorKind::ValidationError, "track needs a reference section", "reference");
  const ReferenceSpec& spec = *cfg.reference;
  guard_injectivity(spec.initial_rotation, cfg.initial.r, "initial.rotation");
  const GainPlan plan = plan_gains(cfg);
  summary.gains = resolved(plan);
  const double h_ref = spec.h_ref.value_or(cfg.sim.h);
  const auto ref =
      TrackingReference::polynomial(spec.omega_ref, spec.initial_rotation, h_ref, cfg.sim.t_end + cfg.sim.h);
  const Controller law = [&](double t, const RigidBodyState& s) {
    return tracking_torque(s, ref, t, cfg.sim.inertia, plan.controller);
  };
  const TrajectoryLog log = simulate(law, cfg.initial, cfg.sim);
  write_attitude_log(
      log, output_path(out, cfg.output.csv, "track.csv"), cfg.output.decimation,
      [&](std::size_t i) {
        const double t = log.times[i];
        const RigidBodyState& s = log.states[i];
        return std::array<double, 4>{geodesic_distance(ref.rotation(t), s.r),
                                     tracking_lyapunov_value(s, ref, t, plan.controller.gains_at(t)),
                                     tracking_value_candidate(s, ref, t, plan.k_at(t)), kEmpty};
      },
      summary);
  const double t_end = log.times.back();
  const RigidBodyState& s = log.states.back();
  summary.final_distance = geodesic_distance(ref.rotation(t_end), s.r);
  summary.final_velocity_norm = (s.w - transport_velocity(s.r, ref.rotation(t_end), ref.omega(t_end))).norm();
  summary.iterations["steps"] = static_cast<int>(log.size() - 1);
  human << "final tracking error " << *summary.final_distance << " rad after " << cfg.sim.t_end << " s\n";
}

template <class M>
void fill_bvp_summary(const pmp::AvoidanceScenario<M>& sc, const pmp::BVPSolution<M>& sol,
                      const pmp::CostateTrajectory<M>& costate, RunSummary& summary) {
  summary.cost = sol.cost;
  summary.terminal_residual = sol.terminal_residual;
  summary.hamiltonian_spread = costate.spread();
  summary.iterations["shooting"] = sol.iterations;
  summary.final_distance = std::sqrt(2.0 * M::half_sq_dist(sc.target, sol.path.q.back()));
  summary.final_velocity_norm = sol.path.v.back().norm();
  if (!sc.obstacles.empty()) summary.min_clearance = sol.min_clearance;
}

inline void run_avoid_flat(const pmp::AvoidanceScenario<pmp::FlatSpace>& sc,
                           const std::optional<pmp::TranscriptionOptions>& oracle, const std::filesystem::path& path,
                           int decimation, RunSummary& summary) {
  const auto sol = pmp::shooting_solve(sc);
  const auto costate = pmp::scenario_costate(sc, sol.path);
  const Eigen::Index n = sc.dimension();
  CsvWriter csv(path, flat_columns(static_cast<long>(n)));
  const std::size_t last = sol.path.size() - 1;
  std::vector<double> row;
  for (std::size_t i = 0; i < sol.path.size(); ++i) {
    if (!keep_row(i, last, decimation)) continue;
    row.assign(1, sol.path.times[i]);
    for (const auto* x : {&sol.path.q[i], &sol.path.v[i], &sol.path.u[i]}) row.insert(row.end(), x->begin(), x->end());
    row.push_back((sol.path.q[i] - sc.target).norm());
    row.push_back(kEmpty);
    row.push_back(kEmpty);
    row.push_back(costate.hamiltonian[i]);
    csv.row(row);
  }
  csv.close();
  summary.csv = path.string();
  summary.rows = csv.rows();
  fill_bvp_summary(sc, sol, costate, summary);
  if (oracle) {
    const auto ref = pmp::transcription_oracle(sc, *oracle);
    summary.oracle_cost = oracle->richardson ? ref.extrapolated_cost : ref.grid_cost;
    summary.iterations["transcription"] = ref.solution.iterations;
  }
}

inline void run_avoid_so3(const pmp::AvoidanceScenario<pmp::So3BiInvariant>& sc, const std::filesystem::path& path,
                          int decimation, RunSummary& summary) {
  const auto sol = pmp::shooting_solve(sc);
  const auto costate = pmp::scenario_costate(sc, sol.path);
  CsvWriter csv(path, attitude_columns());
  const std::size_t last = sol.path.size() - 1;
  for (std::size_t i = 0; i < sol.path.size(); ++i) {
    if (!keep_row(i, last, decimation)) continue;
    const RigidBodyState s{sol.path.q[i], sol.path.v[i]};
    csv.row(attitude_row(sol.path.times[i], s, sol.path.u[i], geodesic_distance(sc.target, s.r), kEmpty, kEmpty,
                         costate.hamiltonian[i]));
  }
  csv.close();
  summary.csv = path.string();
  summary.rows = csv.rows();
  fill_bvp_summary(sc, sol, costate, summary);
}

inline void run_avoid(const ScenarioConfig& cfg, const std::filesystem::path& out, RunSummary& summary,
                      std::ostream& human) {
  if (!cfg.avoidance) throw Error(ErrorKind::ValidationError, "avoid needs an avoidance section", "avoidance");
  const auto path = output_path(out, cfg.output.csv, "avoid.csv");
  if (const auto* flat = std::get_if<pmp::AvoidanceScenario<pmp::FlatSpace>>(&cfg.avoidance->scenario)) {
    run_avoid_flat(*flat, cfg.avoidance->oracle, path, cfg.output.decimation, summary);
  } else {
    run_avoid_so3(std::get<pmp::AvoidanceScenario<pmp::So3BiInvariant>>(cfg.avoidance->scenario), path,
                  cfg.output.decimation, summary);
  }
  human << "cost " << *summary.cost << ", Hamiltonian spread " << *summary.hamiltonian_spread << '\n';
}

inline void run_check(RunSummary& summary, std::ostream& human) {
  summary.checks = run_checks();
  for (const auto& c : summary.checks) {
    human << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
  }
}

}  // namespace detail

/**
 * @brief Executes `command` on a validated config.
 *
 * Files land in `out_dir`, which is created if missing. Human-readable lines
 * go to `human`; the returned summary is the machine-readable result. A
 * command in the config, if present, must match `command`.
 */
inline RunSummary run(const ScenarioConfig& cfg, Command command, const std::filesystem::path& out_dir,
                      std::ostream& human) {
  if (cfg.command && *cfg.command != command) {
    throw Error(ErrorKind::ValidationError,
                "config is for \"" + std::string(to_string(*cfg.command)) + "\", not \"" +
                    std::string(to_string(command)) + "\"",
                "command");
  }
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.command = std::string(to_string(command));
  const bool writes = command == Command::Regulate || command == Command::Track || command == Command::Avoid;
  if (writes) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::InvalidArgument, "cannot create " + out_dir.string() + ": " + ec.message(), "--out");
  }
  switch (command) {
    case Command::Gains: detail::run_gains(cfg, summary, human); break;
    case Command::Regulate: detail::run_regulate(cfg, out_dir, summary, human); break;
    case Command::Track: detail::run_track(cfg, out_dir, summary, human); break;
    case Command::Avoid: detail::run_avoid(cfg, out_dir, summary, human); break;
    case Command::Check: detail::run_check(summary, human); break;
  }
  summary.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.output.summary.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir / cfg.output.summary, std::ios::trunc);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write summary file", "output.summary");
    f << to_json(summary).dump(2) << '\n';
  }
  return summary;
}

/// Process exit code for a failure of the given kind.
inline int exit_code(const Error& e) {
  if (e.is_config_error() || e.kind() == ErrorKind::InvalidArgument) return 2;
  return 3;
}

/// One-line machine-readable description of a failure.
inline std::string error_line(const Error& e) {
  nlohmann::json j{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
  if (!e.field().empty()) j["field"] = e.field();
  return j.dump();
}

}  // namespace geolqr::cli
