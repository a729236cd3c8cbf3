#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dust/algorithm.hpp"
#include "dust/graph.hpp"
#include "dust/metrics.hpp"

namespace dust {

/// Bad or inconsistent configuration. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat experiment description. Every key of the text form matches a field
/// name; `set` is the single entry point for both config files and
/// command-line overrides.
struct ExperimentConfig {
  std::string scenario = "pev";  // pev | tangent_disc | file
  std::string instance_file;     // scenario=file
  int n = 10;
  int d = 4;
  int p = 6;
  int t_horizon = 1000;
  int b_window = 2;
  GraphKind graph = GraphKind::cyclic_partition;
  std::uint64_t seed_instance = 1;
  std::uint64_t seed_graph = 1;
  std::uint64_t seed_init = 1;
  InitKind init = InitKind::zero_projected;
  double alpha_scale = 1.0;
  double alpha_pow = 0.5;
  double eta_scale = 1.0;
  double eta_pow = 1.0;
  double x_max = 1.0;
  double energy_lo = 0.3;
  double energy_hi = 0.5;
  double kappa_feas = 0.8;
  std::string out = "dust_out";
  int jobs = 1;
  bool validate = false;
  bool compute_optima = false;
  int dump_every = 0;
  bool dump_edges = false;
  double solver_tol = 1e-6;
  int solver_max_iter = 20000;

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError naming the first invalid field.
  void validate_fields() const;

  /// `key=value` lines in a fixed order; parse(serialize()) == *this.
  std::string serialize() const;
  std::uint64_t hash() const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  bool operator==(const ExperimentConfig&) const = default;
};

/// Instance described by the config (PEV, tangent disc or file).
ProblemInstance make_instance(const ExperimentConfig& cfg);
StepSchedule make_schedule(const ExperimentConfig& cfg);

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_assumption = 3, exit_numeric = 4 };

struct ExperimentResult {
  int exit_code = exit_ok;
  std::string message;
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
  std::optional<RunRecord> final_record;
  double empirical_r = 0.0;
  int unconverged_optima = 0;
};

/// Writes `<out>/run.csv` (metrics schema) and `<out>/manifest.txt`, plus
/// `optima.csv`, `edges.csv` and `states.txt` when enabled. Never throws;
/// failures are mapped to the exit codes 2 (config), 3 (assumption
/// violation) and 4 (numeric failure).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { B, N, T, seed };
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepResult {
  std::vector<ExperimentResult> runs;
  std::filesystem::path summary_path;
  int failures = 0;
};

/// One run per value under `<out>/<axis>_<value>/`, at most `jobs` at a time.
/// A failing run is flagged in `<out>/summary.csv` and the sweep continues.
/// axis=seed sets all three seeds to the value.
SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::int64_t>& values, int jobs);

}  // namespace dust
