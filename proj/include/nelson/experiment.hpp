#pragma once

#include "nelson/analysis.hpp"
#include "nelson/grid.hpp"
#include "nelson/hamiltonian.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nelson {

struct SweepSpec {
  std::string variable;  // Lambda | n_max | kappa | refinement
  std::vector<double> values;
};

struct ExperimentConfig {
  GridSpec grid;
  NelsonParams params;
  int n_max = 2;
  std::vector<double> beta_list{1.0};
  std::optional<SweepSpec> sweep;
  Tolerances tolerances;
  std::uint64_t seed = 1;
  std::string output_dir = "nelson_out";

  int duhamel_order = 6;
  int duhamel_points = 32;
  int ergodicity_pairs = 10;
  int bound_samples = 20;
  int form_samples = 100;
  double form_epsilon = 0.1;
  std::vector<int> regularization_n{1, 2, 4, 8, 16};
  /// Multiplies every threshold, including the exact-identity ones.
  double tol_scale = 1.0;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

struct CheckRecord {
  std::string name;
  nlohmann::json parameters;
  nlohmann::json measured;
  bool pass = false;
  double tolerance = 0.0;
  bool fatal = true;
  /// The check asserts that a property does NOT hold (negative control).
  bool expected_negative = false;
};

nlohmann::json to_json(const CheckRecord& r);

struct RunReport {
  nlohmann::json config;
  std::vector<CheckRecord> checks;
  std::map<std::string, double> timing;  // seconds per phase, volatile
  std::size_t basis_dimension = 0;
  /// Scalars used by sweeps: inf spectra, energies, gap, semigroup minimum.
  std::map<std::string, double> summary;
  bool pass = false;

  std::vector<std::string> failed_checks() const;
};

nlohmann::json to_json(const RunReport& r);

/// Runs the full verification suite for one configuration.
RunReport run(const ExperimentConfig& config);

inline const std::vector<std::string> kTrendColumns{
    "value",   "inf_spec_h_lambda", "inf_spec_h_ren",     "e_lambda_grid",
    "e_lambda_radial", "gap",       "min_semigroup_entry"};

struct TrendRow {
  double value = 0.0;
  double inf_spec_h_lambda = 0.0;
  double inf_spec_h_ren = 0.0;
  double e_lambda_grid = 0.0;
  double e_lambda_radial = 0.0;
  double gap = 0.0;
  double min_semigroup_entry = 0.0;
};

struct SweepResult {
  std::vector<RunReport> reports;
  std::vector<TrendRow> trends;
  std::vector<CheckRecord> trend_checks;
  bool pass = false;
};

/// Applies one sweep value to a copy of the configuration.
ExperimentConfig sweep_point(const ExperimentConfig& base, const std::string& variable,
                             double value);

/// Runs every sweep point (up to `workers` concurrently) and derives trend checks.
SweepResult sweep(const ExperimentConfig& config, int workers = 1);

void write_run(const RunReport& report, const std::filesystem::path& dir);
void write_sweep(const SweepResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir);
void write_trends_csv(std::ostream& out, const std::vector<TrendRow>& rows);

/// Human-readable summary of a run or sweep directory. Throws std::runtime_error
/// naming the missing or corrupt file.
std::string report(const std::filesystem::path& dir);

}  // namespace nelson
