#pragma once

#include <cpme/scenarios.hpp>

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpme::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Every parameter a subcommand can take. Defaults that depend on the
/// command are filled by apply_command_defaults.
struct RunConfig {
  std::string command;
  std::string scenario;
  Index n = -1;  ///< -1: command default; an explicit 0 is rejected
  std::vector<Index> n_grid;
  Index reps = -1;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  int folds = -1;
  Index mc_draws = 32;
  Index n_perm = 10000;
  std::vector<std::string> methods;
  bool no_split = false;
  bool shuffle = false;
  bool shared_draws = false;
  int jobs = 0;
  std::string out;
  std::string data;  ///< dataset CSV for `test`; a scenario is simulated when empty
  // Herding.
  Index herd_m = 500;
  Index grid_points = 2048;
  Index oracle_size = 0;
  bool classic_herding = false;
  // Environment knobs.
  Index d = -1;
  double similarity = 1.0;  ///< recommendation logging similarity alpha
  std::vector<double> similarities;
  Index items = 100;
  Index users = 50;
  int list_length = 4;
  double noise_sd = 1.0;
  double delta = 2.0;
};

/// Fills unset fields with the documented defaults of cfg.command.
void apply_command_defaults(RunConfig& cfg);

/// Throws ConfigError on any invalid combination (before any IO).
void validate(const RunConfig& cfg);

ScenarioSpec scenario_spec(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig from_json(const nlohmann::json& j);

/// Runs one command; files go to cfg.out, a summary to `log`.
void run_command(const RunConfig& cfg, std::ostream& log);

/// Full CLI: parses argv, runs, maps exceptions to exit codes
/// (0 ok, 1 IO failure, 2 configuration error, 3 numerical failure).
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cpme::cli
