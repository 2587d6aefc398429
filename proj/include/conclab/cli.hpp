#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "conclab/eigensolver.hpp"
#include "conclab/operator.hpp"
#include "conclab/scenario.hpp"

namespace conclab::cli {

enum ExitCode : int {
  kOk = 0,
  kValidationFailed = 1,
  kConfigError = 2,
  kIoError = 3,
  kPreconditionViolated = 4,
  kNotConverged = 5,
};

/// Error carrying the process exit code it maps to.
class CliError : public std::runtime_error {
 public:
  CliError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

std::string version();

struct RunConfig {
  /// Builtin name or path to a scenario JSON file (relative paths resolve
  /// against the config file's directory).
  std::string scenario = "stable-point";
  /// Inline scenario object; takes precedence over `scenario`.
  std::optional<nlohmann::json> scenario_object;
  /// Potential override for builtins.
  std::optional<std::string> c;
  double gap = 0.5;

  std::vector<double> epsilons{0.2, 0.1, 0.05};
  int n = 64;

  double tol = 1e-8;
  long max_iter = 200000;
  Scheme scheme = Scheme::Upwind;
  SolverMethod method = SolverMethod::ShiftInvert;
  bool warm_start = true;

  int torus_modes = 64;     // M
  int phase_samples = 256;  // m
  int torus_samples = 128;

  int battery_max_freq = 2;
  std::vector<std::string> battery_extra;

  std::filesystem::path out = "conclab-out";
  bool skip_validation = false;
  bool allow_large_grid = false;
  int workers = 1;

  std::filesystem::path base_dir = ".";
};

/// Parses a config object; unknown keys are rejected. Throws CliError(kConfigError).
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);
/// Checks the config invariants (epsilons strictly decreasing and positive,
/// n a power of two in [16, 1024], ...). Throws CliError(kConfigError).
void check_config(const RunConfig& cfg);
/// The resolved config as written to manifest.json. Worker count and output
/// directory are left out so manifests compare equal across them.
nlohmann::json config_to_json(const RunConfig& cfg);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario resolve_scenario(const RunConfig& cfg);

nlohmann::json validation_to_json(const ValidationReport& rep);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Subcommands. Each writes its artifacts and manifest.json into cfg.out and
/// returns the exit code; errors are thrown as CliError.
int cmd_validate(const RunConfig& cfg, std::ostream& log);
int cmd_predict(const RunConfig& cfg, std::ostream& log);
int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_transport(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point: parses arguments, dispatches, maps errors
/// to exit codes and prints them on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conclab::cli
