#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "geolqr/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw geolqr::Error(geolqr::ErrorKind::ParseError, "cannot read " + path, "--config");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace geolqr;
  CLI::App app{"Geometric LQR regulation, tracking and avoidance on SO(3)", "geo-lqr"};
  std::string command_name;
  std::string config_path;
  std::string out_dir = ".";
  app.add_option("command", command_name, "gains | regulate | track | avoid | check")->required();
  app.add_option("--config,-c", config_path, "scenario JSON file");
  app.add_option("--out,-o", out_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << cli::error_line(Error(ErrorKind::ParseError, e.what(), "argv")) << '\n';
    return 2;
  }

  try {
    const auto command = cli::parse_command(command_name);
    if (!command) throw Error(ErrorKind::ParseError, "unknown command \"" + command_name + "\"", "command");
    cli::ScenarioConfig cfg;
    if (!config_path.empty()) {
      cfg = cli::parse_config(read_file(config_path));
    } else if (*command != cli::Command::Check) {
      throw Error(ErrorKind::ParseError, "--config is required for " + command_name, "--config");
    }
    const auto summary = cli::run(cfg, *command, out_dir, std::cerr);
    std::cout << cli::to_json(summary).dump() << '\n';
    return summary.all_checks_passed() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << cli::error_line(e) << '\n';
    return cli::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  }
}
