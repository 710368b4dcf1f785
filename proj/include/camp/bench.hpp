#pragma once

#include "camp/common.hpp"
#include "camp/conformal.hpp"
#include "camp/data.hpp"
#include "camp/glm.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace camp {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { Length, Jaccard, BayesCompare, Timing, RealData, Coverage };

std::string to_string(Experiment e);
/// Accepts the CLI spelling ("bayes-compare") and snake_case ("bayes_compare").
Experiment experiment_from_string(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::Length;
  GlmSpec glm;
  SyntheticConfig data;
  /// When set, samples come from this CSV instead of the synthetic generator.
  std::optional<std::string> csv_path;
  std::string target_column;
  double kappa = 0.1;
  Index trials = 100;
  /// Test points drawn per trial (for RealData: cap on the test part, 0 = all).
  Index test_samples = 1;
  std::uint64_t seed = 0;
  std::string output = "results";
  Index grid_points = 200;
  /// Empty means the experiment's default set of methods.
  std::vector<Backend> backends;
  /// Timing sweep; n = round(alpha * d).
  std::vector<Index> dimensions;
  double alpha = 0.5;
  Index timing_repetitions = 5;
  /// Repetitions for the exact-LOO timing, which dominates the runtime.
  Index exact_repetitions = 5;
  double scp_train_fraction = 0.5;
  double train_fraction = 0.8;
  double amp_tol = 1e-10;
  Index amp_max_iter = 1000;
  double amp_damping = 0.0;
  /// Damping used to re-run a trial whose undamped iteration failed (0 disables the retry).
  double retry_damping = 0.5;

  void validate() const;
  std::vector<Backend> methods() const;
  SolverOptions solver_options(double damping) const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing fields keep their defaults. Throws InvalidArgument on unknown
/// fields or values of the wrong type.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

struct MethodMetrics {
  std::string method;
  double coverage = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
  std::optional<double> mean_jaccard;
  double wall_time_seconds = 0.0;
  Index evaluations = 0;
  Index failures = 0;
  Index retries = 0;
  /// Prediction sets that include an end point of their label grid.
  Index boundary_hits = 0;
  /// Timing rows only.
  std::optional<Index> dimension;

  bool operator==(const MethodMetrics& other) const;
};

struct Report {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  nlohmann::json config;
  std::vector<MethodMetrics> methods;
  /// Distinct solver error messages (at most 10).
  std::vector<std::string> notes;

  bool operator==(const Report& other) const = default;
  const MethodMetrics* find(const std::string& method) const;
};

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

Report run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { Json, Csv };
ReportFormat report_format_from_string(const std::string& name);
std::string csv_header();
std::string to_csv(const Report& report);
/// Writes report.json or report.csv into `directory` (created if needed) and returns the path.
std::filesystem::path emit_report(const Report& report, ReportFormat format, const std::filesystem::path& directory);

/// Worker count: CONFORMAL_AMP_THREADS if set and positive, else the hardware concurrency.
unsigned worker_count();

}  // namespace camp
