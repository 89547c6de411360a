#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bilbao/gp.hpp"
#include "bilbao/problems.hpp"
#include "bilbao/response_map.hpp"
#include "bilbao/rng.hpp"

namespace bilbao {

enum class Level { Upper, Lower };

std::string_view to_string(Level level);

/// One objective call.
struct TraceRecord {
  Level level = Level::Upper;
  Eigen::VectorXd point;  // joint (x_u, x_l) in the unit box
  double value = 0.0;
  long evaluations = 0;   // cumulative objective calls including this one
  /// Upper-level recommendation after this call, when one exists.
  std::optional<Eigen::VectorXd> recommendation;
  double wall_seconds = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  Eigen::VectorXd final_recommendation;

  long total_evaluations() const { return records.empty() ? 0 : records.back().evaluations; }
};

/// Trace equality ignoring wall-clock fields.
bool same_trace(const Trace& a, const Trace& b);

enum class LowerAcquisition { Revi, Revits };

struct BilbaoConfig {
  int init_per_gp = 10;
  int upper_iterations = 80;
  /// One lower query per upper iteration, so this must equal upper_iterations.
  int lower_iterations = 80;
  int k_interest = 10;
  int lower_disc_size = 150;
  int upper_grid_size = 128;
  /// Redraw the Sobol part of the upper grid on every map rebuild; when false
  /// the initial grid is reused. Recommendations are always appended.
  bool refresh_upper_grid = true;
  int phi_restarts = 30;
  int revi_candidates = 256;
  LowerAcquisition acquisition = LowerAcquisition::Revi;
  KernelFamily kernel = KernelFamily::Matern52;
  int gp_restarts = 8;

  /// Throws ConfigError.
  void validate() const;
  long total_evaluations() const {
    return 2L * init_per_gp + upper_iterations + lower_iterations;
  }
};

struct BenchmarkConfig {
  int init_upper = 3;        // I_u
  int init_lower = 3;        // I_l
  int upper_iterations = 20; // N
  int lower_iterations = 4;  // M
  int ei_candidates = 256;
  KernelFamily kernel = KernelFamily::Matern52;
  int gp_restarts = 8;

  void validate() const;
  long total_evaluations() const {
    return static_cast<long>(init_upper + upper_iterations) *
           (init_lower + lower_iterations + 1);
  }
};

/// Hook called after every objective call.
struct StepContext {
  const TraceRecord& record;
  /// BILBAO only: current lower model and response map.
  const GPModel* lower_gp = nullptr;
  const ResponseMap* map = nullptr;
  /// True when the lower model and response map changed at this call.
  bool response_updated = false;
};
using StepObserver = std::function<void(const StepContext&)>;

/// Bilevel BO with joint-space GPs at both levels; lower queries by REVI or
/// REVITS according to `cfg.acquisition`.
Trace run_bilbao(BilevelProblem& problem, const BilbaoConfig& cfg, const RngStream& stream,
                 const StepObserver& observer = {});

/// Nested BO baseline: an outer EI loop over x_u, each outer point resolved
/// by a fresh inner EI run over x_l.
Trace run_benchmark(BilevelProblem& problem, const BenchmarkConfig& cfg, const RngStream& stream,
                    const StepObserver& observer = {});

}  // namespace bilbao
