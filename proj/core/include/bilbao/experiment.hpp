#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bilbao/algorithms.hpp"
#include "bilbao/ground_truth.hpp"
#include "bilbao/problems.hpp"

namespace bilbao {

enum class AlgorithmKind { BilbaoRevi, BilbaoTs, Benchmark, Benchmark2 };

AlgorithmKind parse_algorithm(std::string_view name);
std::string_view to_string(AlgorithmKind kind);

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::BilbaoRevi;
  BilbaoConfig bilbao;       // used by the BILBAO kinds
  BenchmarkConfig benchmark; // used by the benchmark kinds

  bool is_bilbao() const {
    return kind == AlgorithmKind::BilbaoRevi || kind == AlgorithmKind::BilbaoTs;
  }
  long total_evaluations() const {
    return is_bilbao() ? bilbao.total_evaluations() : benchmark.total_evaluations();
  }
};

/// Defaults for `kind` on a problem with the given joint dimension: the 2D
/// settings for joint dimension <= 2, the 4D settings otherwise.
AlgorithmSpec default_algorithm(AlgorithmKind kind, int joint_dim);

struct MetricsConfig {
  int action_gap_probes = 300;
  /// Restarts of the response estimate used by the action-gap metrics.
  int phi_restarts = 30;
  /// false skips both action-gap metrics; the optimality gap is always kept.
  bool action_gaps = true;
};

/// Parsed experiment file. See README for the JSON schema.
struct ExperimentConfig {
  std::string problem;
  std::uint64_t master_seed = 0;
  int replications = 10;
  int workers = 1;
  std::filesystem::path output_dir = "results";
  /// 0 selects the problem's default resolution.
  int ground_truth_resolution = 0;
  /// Empty selects <output_dir>/ground_truth.
  std::filesystem::path cache_dir;
  MetricsConfig metrics;
  std::vector<AlgorithmSpec> algorithms;

  /// Throws ConfigError on malformed JSON, unknown keys, bad types or
  /// inconsistent budgets.
  static ExperimentConfig parse(std::string_view json_text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Fully resolved configuration; parse(to_json()) round-trips.
  std::string to_json() const;
  void validate() const;

  std::filesystem::path resolved_cache_dir() const;
};

struct MetricRow {
  std::string algorithm;
  int replication = 0;
  long evaluation_index = 0;
  std::string metric;
  double value = 0.0;
};

struct AggregateRow {
  std::string algorithm;
  long evaluation_index = 0;
  std::string metric;
  double mean = 0.0;
  double std_error = 0.0;
  int count = 0;
};

struct RunRecord {
  std::string algorithm;
  int replication = 0;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
  long total_evaluations = 0;
  Trace trace;
  std::vector<MetricRow> rows;
};

struct ExperimentResult {
  ExperimentConfig config;
  GroundTruth truth;
  std::vector<RunRecord> runs;  // algorithm-major, then replication
  std::vector<AggregateRow> aggregate;

  int failures() const;
  /// Rows of every run in output order.
  std::vector<MetricRow> metric_rows() const;
};

/// Metric names in output order.
inline constexpr std::string_view kOptimalityGap = "optimality_gap";
inline constexpr std::string_view kActionGap = "action_gap";
inline constexpr std::string_view kActionGapAtOptimum = "action_gap_at_optimum";

/// Probe set X_e shared by every algorithm of an experiment.
Eigen::MatrixXd action_gap_probes(const std::string& problem, std::uint64_t master_seed,
                                  int upper_dim, int count);

/// Loads the cached ground truth for (problem, resolution) or computes and
/// writes it. Logs hits to `log`. Throws std::runtime_error on write failure.
GroundTruth cached_ground_truth(const BilevelProblem& problem, int resolution,
                                const std::filesystem::path& cache_dir, std::ostream& log,
                                bool* hit = nullptr);

/// Runs one replication and computes its metric rows. Never throws for
/// numerical failures; they are reported through RunRecord::ok.
RunRecord run_replication(const ExperimentConfig& config, const AlgorithmSpec& algorithm,
                          int replication, const GroundTruthOracle& oracle,
                          const GroundTruth& truth, const Eigen::MatrixXd& probes);

/// Mean and standard error (sample std / sqrt(count)) across successful
/// replications per (algorithm, metric, evaluation index).
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs,
                                    const std::vector<AlgorithmSpec>& algorithms);

/// Everything except writing files.
ExperimentResult execute(const ExperimentConfig& config, std::ostream& log);

/// Writes metrics.csv, aggregate.csv, traces.csv and metadata.json.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

std::string_view version();

}  // namespace bilbao
