#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <initializer_list>
#include <json.hpp>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geolqr/dynamics.hpp"
#include "geolqr/errors.hpp"
#include "geolqr/pmp.hpp"
#include "geolqr/riccati.hpp"
#include "geolqr/so3.hpp"

namespace geolqr::cli {

enum class Command { Gains, Regulate, Track, Avoid, Check };

constexpr std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::Gains: return "gains";
    case Command::Regulate: return "regulate";
    case Command::Track: return "track";
    case Command::Avoid: return "avoid";
    case Command::Check: return "check";
  }
  return "unknown";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (Command c : {Command::Gains, Command::Regulate, Command::Track, Command::Avoid, Command::Check}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

enum class GainSource { Are, Dre };

/// Rotations handed to the parser must be orthonormal to this tolerance;
/// they are rejected, never re-orthonormalized.
inline constexpr double kConfigRotationTolerance = 1e-6;

/// Scenarios whose initial error reaches this geodesic distance are refused.
inline constexpr double kInjectivityGuard = std::numbers::pi - 0.1;

struct ReferenceSpec {
  /// omega_ref per axis as polynomial coefficients, constant term first.
  std::array<std::vector<double>, 3> omega_ref;
  Rotation initial_rotation;
  /// Grid step of the reference; defaults to sim.h.
  std::optional<double> h_ref;
};

struct OutputSpec {
  /// File names relative to --out. Empty csv means "<command>.csv".
  std::string csv;
  std::string summary;
  int decimation = 10;
};

using AvoidanceVariant =
    std::variant<pmp::AvoidanceScenario<pmp::FlatSpace>, pmp::AvoidanceScenario<pmp::So3BiInvariant>>;

struct AvoidanceSpec {
  AvoidanceVariant scenario;
  /// Run the transcription oracle next to shooting (flat space only).
  std::optional<pmp::TranscriptionOptions> oracle;
};

struct ScenarioConfig {
  std::optional<Command> command;
  CostParams cost;
  /// Required by every command that solves a Riccati equation.
  std::optional<AMatrixMode> a_matrix;
  SimParams sim;
  RigidBodyState initial;
  Rotation goal;
  std::optional<ReferenceSpec> reference;
  GainSource gain_source = GainSource::Are;
  bool feedforward_accel_term = false;
  std::optional<AvoidanceSpec> avoidance;
  OutputSpec output;
};

namespace detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline Error invalid(const std::string& path, const std::string& message) {
  return Error(ErrorKind::ValidationError, message, path);
}

/// JSON object whose keys are checked against an allow-list on construction.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw invalid(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& item : j.items()) {
      bool known = false;
      for (auto a : allowed) known = known || item.key() == a;
      if (!known) throw invalid(join(path_, item.key()), "unknown key");
    }
  }

  const json* find(const std::string& key) const {
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const { return join(path_, key); }

 private:
  const json& j_;
  std::string path_;
};

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw invalid(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw invalid(path, "expected a finite number");
  return x;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw invalid(path, "expected an integer");
  return j.get<int>();
}

inline bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw invalid(path, "expected true or false");
  return j.get<bool>();
}

inline std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw invalid(path, "expected a string");
  return j.get<std::string>();
}

/// Flat numeric array; `size` < 0 accepts any non-empty length.
inline std::vector<double> numbers(const json& j, const std::string& path, int size = -1) {
  if (!j.is_array()) throw invalid(path, "expected an array of numbers");
  if (size >= 0 && j.size() != static_cast<std::size_t>(size)) {
    throw invalid(path, "expected " + std::to_string(size) + " numbers, got " + std::to_string(j.size()));
  }
  if (size < 0 && j.empty()) throw invalid(path, "expected a non-empty array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Eigen::VectorXd vector(const json& j, const std::string& path, int size = -1) {
  const auto v = numbers(j, path, size);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <int N>
Eigen::Matrix<double, N, N> square(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) throw invalid(path, "expected " + std::to_string(N) + " rows");
  Eigen::Matrix<double, N, N> m;
  for (int r = 0; r < N; ++r) {
    const auto row = numbers(j[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]", N);
    for (int c = 0; c < N; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

inline Rotation rotation_from_entries(const std::vector<double>& e, const std::string& path) {
  Eigen::Matrix3d m;
  m << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
  try {
    return Rotation::from_matrix(m, kConfigRotationTolerance);
  } catch (const Error& err) {
    throw Error(ErrorKind::ValidationError, err.what(), path);
  }
}

/// "rotation" (9 numbers, row-major) or "axis_angle" (3 numbers) inside `obj`.
inline Rotation rotation_field(const ObjectReader& obj) {
  const json* rot = obj.find("rotation");
  const json* aa = obj.find("axis_angle");
  if (rot && aa) throw invalid(obj.path("axis_angle"), "give either rotation or axis_angle, not both");
  if (rot) return rotation_from_entries(numbers(*rot, obj.path("rotation"), 9), obj.path("rotation"));
  if (aa) return exp_so3(Eigen::Vector3d(vector(*aa, obj.path("axis_angle"), 3)));
  return Rotation::identity();
}

/// Point on SO(3): 9 numbers row-major or a 3-number axis-angle vector.
inline Rotation so3_point(const json& j, const std::string& path) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 9)) {
    throw invalid(path, "expected 3 axis-angle numbers or 9 rotation entries");
  }
  const auto e = numbers(j, path);
  if (e.size() == 9) return rotation_from_entries(e, path);
  return exp_so3(Eigen::Vector3d(e[0], e[1], e[2]));
}

inline AMatrixMode a_matrix_mode(const json& j, const std::string& path) {
  const std::string s = text(j, path);
  if (s == "paper-regulation") return AMatrixMode::PaperRegulation;
  if (s == "paper-tracking") return AMatrixMode::PaperTracking;
  if (s == "reconciled") return AMatrixMode::Reconciled;
  throw invalid(path, "expected paper-regulation, paper-tracking or reconciled, got \"" + s + "\"");
}

inline void parse_cost(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "cost", {"alpha", "gamma", "q_weights", "a_matrix"});
  if (auto* x = o.find("alpha")) cfg.cost.alpha = number(*x, o.path("alpha"));
  if (auto* x = o.find("gamma")) cfg.cost.gamma = number(*x, o.path("gamma"));
  if (auto* x = o.find("q_weights")) cfg.cost.q_weights = square<2>(*x, o.path("q_weights"));
  if (auto* x = o.find("a_matrix")) cfg.a_matrix = a_matrix_mode(*x, o.path("a_matrix"));
  if (!(cfg.cost.alpha > 0.0)) throw invalid(o.path("alpha"), "alpha must be positive");
  const Eigen::Matrix2d& q = cfg.cost.q_weights;
  if (std::abs(q(0, 1) - q(1, 0)) > 1e-12) throw invalid(o.path("q_weights"), "q_weights must be symmetric");
  if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(q).eigenvalues().minCoeff() < 0.0) {
    throw invalid(o.path("q_weights"), "q_weights must be positive semidefinite");
  }
}

inline void parse_sim(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "sim", {"h", "t_end"});
  if (auto* x = o.find("h")) cfg.sim.h = number(*x, o.path("h"));
  if (auto* x = o.find("t_end")) cfg.sim.t_end = number(*x, o.path("t_end"));
}

inline void parse_inertia(const json& j, ScenarioConfig& cfg) {
  Eigen::Matrix3d m;
  if (j.is_array() && j.size() == 3 && j[0].is_number()) {
    m = vector(j, "inertia", 3).asDiagonal();
  } else {
    m = square<3>(j, "inertia");
  }
  try {
    cfg.sim.inertia = InertiaTensor::from_matrix(m);
  } catch (const Error& e) {
    throw Error(ErrorKind::ValidationError, e.what(), "inertia");
  }
}

inline void parse_initial(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "initial", {"rotation", "axis_angle", "omega"});
  cfg.initial.r = rotation_field(o);
  if (auto* x = o.find("omega")) cfg.initial.w = vector(*x, o.path("omega"), 3);
}

inline void parse_goal(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "goal", {"rotation", "axis_angle"});
  cfg.goal = rotation_field(o);
}

inline void parse_reference(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "reference", {"omega_ref", "rotation", "axis_angle", "h_ref"});
  ReferenceSpec ref;
  const json* w = o.find("omega_ref");
  if (!w) throw invalid(o.path("omega_ref"), "missing; expected three coefficient lists");
  if (!w->is_array() || w->size() != 3) throw invalid(o.path("omega_ref"), "expected three coefficient lists");
  for (std::size_t k = 0; k < 3; ++k) {
    ref.omega_ref[k] = numbers((*w)[k], o.path("omega_ref") + "[" + std::to_string(k) + "]");
  }
  ref.initial_rotation = rotation_field(o);
  if (auto* x = o.find("h_ref")) {
    ref.h_ref = number(*x, o.path("h_ref"));
    if (!(*ref.h_ref > 0.0)) throw invalid(o.path("h_ref"), "h_ref must be positive");
  }
  cfg.reference = std::move(ref);
}

inline void parse_controller(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "controller", {"gain_source", "feedforward_accel_term"});
  if (auto* x = o.find("gain_source")) {
    const std::string s = text(*x, o.path("gain_source"));
    if (s == "are") {
      cfg.gain_source = GainSource::Are;
    } else if (s == "dre") {
      cfg.gain_source = GainSource::Dre;
    } else {
      throw invalid(o.path("gain_source"), "expected are or dre, got \"" + s + "\"");
    }
  }
  if (auto* x = o.find("feedforward_accel_term")) {
    cfg.feedforward_accel_term = boolean(*x, o.path("feedforward_accel_term"));
  }
}

inline pmp::TranscriptionOptions parse_oracle(const json& j, const std::string& path) {
  const ObjectReader o(j, path, {"grid_points", "max_iterations", "threads", "richardson"});
  pmp::TranscriptionOptions opt;
  if (auto* x = o.find("grid_points")) opt.grid_points = integer(*x, o.path("grid_points"));
  if (auto* x = o.find("max_iterations")) opt.max_iterations = integer(*x, o.path("max_iterations"));
  if (auto* x = o.find("threads")) {
    const int t = integer(*x, o.path("threads"));
    if (t < 0) throw invalid(o.path("threads"), "threads must be non-negative");
    opt.threads = static_cast<unsigned>(t);
  }
  if (auto* x = o.find("richardson")) opt.richardson = boolean(*x, o.path("richardson"));
  if (opt.grid_points < 50) throw invalid(o.path("grid_points"), "at least 50 grid points are needed");
  if (opt.max_iterations < 1) throw invalid(o.path("max_iterations"), "max_iterations must be positive");
  return opt;
}

template <class M, class PointFn>
pmp::AvoidanceScenario<M> build_avoidance(const ObjectReader& o, const ScenarioConfig& cfg, Eigen::Index dim,
                                          PointFn point) {
  pmp::AvoidanceScenario<M> sc;
  sc.alpha = cfg.cost.alpha;
  sc.q0 = point(o.find("initial_q"), o.path("initial_q"));
  sc.target = point(o.find("target"), o.path("target"));
  sc.v0 = o.find("initial_v") ? vector(*o.find("initial_v"), o.path("initial_v"), static_cast<int>(dim))
                              : Eigen::VectorXd::Zero(dim);
  if (auto* x = o.find("horizon")) sc.horizon = number(*x, o.path("horizon"));
  if (auto* x = o.find("step")) sc.step = number(*x, o.path("step"));
  if (auto* x = o.find("tolerance")) sc.tolerance = number(*x, o.path("tolerance"));
  if (auto* x = o.find("max_iterations")) sc.max_iterations = integer(*x, o.path("max_iterations"));
  if (auto* x = o.find("mode")) {
    const std::string s = text(*x, o.path("mode"));
    if (s == "avoidance") {
      sc.mode = pmp::BvpMode::Avoidance;
    } else if (s == "regulation") {
      sc.mode = pmp::BvpMode::FiniteTimeRegulation;
    } else {
      throw invalid(o.path("mode"), "expected avoidance or regulation, got \"" + s + "\"");
    }
  }
  if (auto* x = o.find("form")) {
    const std::string s = text(*x, o.path("form"));
    if (s == "pmp-derived") {
      sc.form = pmp::EquationForm::PmpDerived;
    } else if (s == "as-printed") {
      sc.form = pmp::EquationForm::AsPrinted;
    } else {
      throw invalid(o.path("form"), "expected pmp-derived or as-printed, got \"" + s + "\"");
    }
  }
  if (auto* x = o.find("obstacles")) {
    if (!x->is_array()) throw invalid(o.path("obstacles"), "expected an array");
    for (std::size_t i = 0; i < x->size(); ++i) {
      const std::string p = o.path("obstacles") + "[" + std::to_string(i) + "]";
      const ObjectReader ob((*x)[i], p, {"center", "radius"});
      if (!ob.find("radius")) throw invalid(ob.path("radius"), "missing");
      const double r = number(*ob.find("radius"), ob.path("radius"));
      if (!(r > 0.0)) throw invalid(ob.path("radius"), "radius must be positive");
      sc.obstacles.push_back(pmp::ball_obstacle<M>(point(ob.find("center"), ob.path("center")), r));
    }
  }
  if (!(sc.tolerance > 0.0)) throw invalid(o.path("tolerance"), "tolerance must be positive");
  if (sc.max_iterations < 1) throw invalid(o.path("max_iterations"), "max_iterations must be positive");
  sc.validate();
  return sc;
}

inline void parse_avoidance(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "avoidance", {"manifold", "dimension", "initial_q", "initial_v", "target", "obstacles",
                                        "horizon", "mode", "form", "step", "tolerance", "max_iterations", "oracle"});
  std::string manifold = "flat";
  if (auto* x = o.find("manifold")) manifold = text(*x, o.path("manifold"));
  AvoidanceSpec spec;
  if (manifold == "flat") {
    if (!o.find("dimension")) throw invalid(o.path("dimension"), "missing; flat space needs a dimension");
    const int dim = integer(*o.find("dimension"), o.path("dimension"));
    if (dim < 1) throw invalid(o.path("dimension"), "dimension must be positive");
    auto point = [dim](const json* x, const std::string& p) -> Eigen::VectorXd {
      if (!x) throw invalid(p, "missing");
      return vector(*x, p, dim);
    };
    spec.scenario = build_avoidance<pmp::FlatSpace>(o, cfg, dim, point);
  } else if (manifold == "so3") {
    if (auto* x = o.find("dimension"); x && integer(*x, o.path("dimension")) != 3) {
      throw invalid(o.path("dimension"), "so3 has dimension 3");
    }
    auto point = [](const json* x, const std::string& p) -> Rotation {
      if (!x) throw invalid(p, "missing");
      return so3_point(*x, p);
    };
    spec.scenario = build_avoidance<pmp::So3BiInvariant>(o, cfg, 3, point);
  } else {
    throw invalid(o.path("manifold"), "expected flat or so3, got \"" + manifold + "\"");
  }
  if (auto* x = o.find("oracle")) {
    if (manifold != "flat") throw invalid(o.path("oracle"), "the transcription oracle runs on flat space only");
    spec.oracle = parse_oracle(*x, o.path("oracle"));
  }
  cfg.avoidance = std::move(spec);
}

inline void parse_output(const json& j, ScenarioConfig& cfg) {
  const ObjectReader o(j, "output", {"csv", "summary", "decimation"});
  if (auto* x = o.find("csv")) cfg.output.csv = text(*x, o.path("csv"));
  if (auto* x = o.find("summary")) cfg.output.summary = text(*x, o.path("summary"));
  if (auto* x = o.find("decimation")) cfg.output.decimation = integer(*x, o.path("decimation"));
  if (cfg.output.decimation < 1) throw invalid(o.path("decimation"), "decimation must be at least 1");
}

}  // namespace detail

/**
 * @brief Parses and validates a scenario description.
 *
 * Throws Error with kind ParseError for malformed JSON and ValidationError,
 * carrying the offending field path, for anything else. Missing sections keep
 * their defaults (h = 1e-3, t_end = 20, identity attitudes, unit inertia).
 * The avoidance section reads alpha from cost.alpha, so it is parsed last.
 */
inline ScenarioConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, e.what(), "<root>");
  }
  const detail::ObjectReader root(j, "", {"command", "cost", "sim", "inertia", "initial", "goal", "reference",
                                          "controller", "avoidance", "output"});
  ScenarioConfig cfg;
  if (auto* x = root.find("command")) {
    const std::string s = detail::text(*x, "command");
    cfg.command = parse_command(s);
    if (!cfg.command) throw detail::invalid("command", "unknown command \"" + s + "\"");
  }
  if (auto* x = root.find("cost")) detail::parse_cost(*x, cfg);
  if (auto* x = root.find("sim")) detail::parse_sim(*x, cfg);
  if (auto* x = root.find("inertia")) detail::parse_inertia(*x, cfg);
  if (auto* x = root.find("initial")) detail::parse_initial(*x, cfg);
  if (auto* x = root.find("goal")) detail::parse_goal(*x, cfg);
  if (auto* x = root.find("reference")) detail::parse_reference(*x, cfg);
  if (auto* x = root.find("controller")) detail::parse_controller(*x, cfg);
  if (auto* x = root.find("output")) detail::parse_output(*x, cfg);
  if (auto* x = root.find("avoidance")) detail::parse_avoidance(*x, cfg);
  cfg.sim.validate();
  return cfg;
}

}  // namespace geolqr::cli
