#pragma once

// Run configuration, command dispatch and CSV/JSON emission for the
// `circstab` command-line tool.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "circstab/critical_layer.hpp"
#include "circstab/mode_search.hpp"
#include "circstab/semicircle.hpp"

namespace circstab {

inline constexpr int kSchemaVersion = 1;

enum class Command { SolveMode, FindModes, Semicircle, VerifyOracles, CriticalLayer, EpsilonScaling, Sweep };
enum class OutputFormat { Csv, Json };

std::string_view to_string(Command c);
std::optional<Command> command_from(std::string_view name);

struct Tolerances {
  double rtol = 1e-10;
  double atol = 1e-12;
  double accept_rel = 1e-9;
  double eta_floor = 1e-6;
  double identity_tol = 1e-6;
  bool identity_gate = true;
};

struct SweepAxis {
  std::string name;  // "k" or a dotted path inside "setup"
  std::vector<double> values;
};

struct RunConfig {
  Command command = Command::FindModes;
  nlohmann::json setup_json;  // kept for sweeps, which rebuild the setup per point
  std::optional<ProblemSetup> setup;
  std::vector<int> ks;
  std::optional<cplx> c;                // solve-mode / semicircle identity check
  std::optional<SearchRegion> region;   // overrides the semicircle box
  Tolerances tol;
  Branch branch = Branch::plus;
  CriticalLayerConfig layer;
  bool convergence = true;
  LipschitzParams lipschitz;
  bool calibrate_sstar = true;
  std::vector<double> ladder{1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  std::vector<SweepAxis> axes;
  std::string out_path;
  OutputFormat format = OutputFormat::Csv;
  int threads = 1;
};

/// Validates `config` and builds the run description. Throws ConfigInvalid (or
/// the setup's own validation errors). Unknown keys are rejected when `strict`,
/// otherwise reported through the log and ignored.
RunConfig parse_config(const nlohmann::json& config, bool strict);

/// ProblemSetup from a "setup" block.
ProblemSetup parse_setup(const nlohmann::json& setup, bool strict);

/// FNV-1a (64 bit) of the canonical serialisation, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct RunOverrides {
  std::optional<std::string> command;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> threads;
  bool strict = false;
};

struct RunResult {
  int exit_code = 0;        // 0 success, 2 validation error, 3 numerical failure
  std::string output;       // rendered CSV or JSON (or the diagnostic payload on failure)
  std::string out_path;     // empty: write to stdout
};

/// Never throws; failures are mapped to exit codes with a JSON diagnostic.
RunResult run(const nlohmann::json& config, const RunOverrides& overrides = {});

/// Reads the JSON config at `path` and runs it.
RunResult run_file(const std::string& path, const RunOverrides& overrides = {});

enum class LogLevel { Error, Warn, Info, Debug };
/// Level from CIRCSTAB_LOG (error, warn, info, debug); defaults to warn.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

}  // namespace circstab
