#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geolqr/errors.hpp"

namespace geolqr::cli {

struct ResolvedGains {
  double kP = 0.0;
  double kD = 0.0;
  /// Riccati solution the gains were read from (at t = 0 for DRE gains).
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;

  bool operator==(const ResolvedGains&) const = default;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;

  bool operator==(const CheckResult&) const = default;
};

/// Result of one CLI command. Optional members are absent from the JSON form.
struct RunSummary {
  std::string command;
  std::optional<ResolvedGains> gains;
  std::optional<double> final_distance;
  std::optional<double> final_velocity_norm;
  std::optional<double> min_clearance;
  std::optional<double> cost;
  std::optional<double> oracle_cost;
  std::optional<double> hamiltonian_spread;
  std::optional<double> terminal_residual;
  std::map<std::string, int> iterations;
  std::vector<CheckResult> checks;
  std::string csv;
  std::size_t rows = 0;
  double wall_clock_seconds = 0.0;

  bool all_checks_passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }

  bool operator==(const RunSummary&) const = default;
};

inline nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  j["command"] = s.command;
  if (s.gains) {
    j["gains"] = {{"kP", s.gains->kP}, {"kD", s.gains->kD}, {"k1", s.gains->k1}, {"k2", s.gains->k2},
                  {"k3", s.gains->k3}};
  }
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("final_distance", s.final_distance);
  put("final_velocity_norm", s.final_velocity_norm);
  put("min_clearance", s.min_clearance);
  put("cost", s.cost);
  put("oracle_cost", s.oracle_cost);
  put("hamiltonian_spread", s.hamiltonian_spread);
  put("terminal_residual", s.terminal_residual);
  if (!s.iterations.empty()) j["iterations"] = s.iterations;
  if (!s.checks.empty()) {
    j["checks"] = nlohmann::json::array();
    for (const auto& c : s.checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  if (!s.csv.empty()) j["csv"] = s.csv;
  j["rows"] = s.rows;
  j["wall_clock_seconds"] = s.wall_clock_seconds;
  return j;
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  try {
    RunSummary s;
    s.command = j.at("command").get<std::string>();
    if (j.contains("gains")) {
      const auto& g = j.at("gains");
      s.gains = ResolvedGains{g.at("kP").get<double>(), g.at("kD").get<double>(), g.at("k1").get<double>(),
                              g.at("k2").get<double>(), g.at("k3").get<double>()};
    }
    auto get = [&j](const char* key, std::optional<double>& v) {
      if (j.contains(key)) v = j.at(key).get<double>();
    };
    get("final_distance", s.final_distance);
    get("final_velocity_norm", s.final_velocity_norm);
    get("min_clearance", s.min_clearance);
    get("cost", s.cost);
    get("oracle_cost", s.oracle_cost);
    get("hamiltonian_spread", s.hamiltonian_spread);
    get("terminal_residual", s.terminal_residual);
    if (j.contains("iterations")) s.iterations = j.at("iterations").get<std::map<std::string, int>>();
    if (j.contains("checks")) {
      for (const auto& c : j.at("checks")) {
        s.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("detail").get<std::string>()});
      }
    }
    if (j.contains("csv")) s.csv = j.at("csv").get<std::string>();
    s.rows = j.at("rows").get<std::size_t>();
    s.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed summary: ") + e.what());
  }
}

}  // namespace geolqr::cli
