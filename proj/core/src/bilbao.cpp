#include <limits>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bilbao/acquisition.hpp"
#include "bilbao/algorithms.hpp"
#include "bilbao/errors.hpp"
#include "bilbao/sobol.hpp"
#include "trace_builder.hpp"

namespace bilbao {

std::string_view to_string(Level level) { return level == Level::Upper ? "upper" : "lower"; }

bool same_trace(const Trace& a, const Trace& b) {
  if (a.records.size() != b.records.size()) return false;
  if (a.final_recommendation != b.final_recommendation) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const TraceRecord& x = a.records[i];
    const TraceRecord& y = b.records[i];
    if (x.level != y.level || x.point != y.point || x.value != y.value ||
        x.evaluations != y.evaluations || x.recommendation.has_value() != y.recommendation.has_value())
      return false;
    if (x.recommendation && *x.recommendation != *y.recommendation) return false;
  }
  return true;
}

void BilbaoConfig::validate() const {
  if (init_per_gp < 1) throw ConfigError("init_per_gp must be at least 1");
  if (upper_iterations < 0) throw ConfigError("upper_iterations must be nonnegative");
  if (lower_iterations != upper_iterations)
    throw ConfigError("BILBAO alternates levels: lower_iterations (" +
                      std::to_string(lower_iterations) + ") must equal upper_iterations (" +
                      std::to_string(upper_iterations) + ")");
  if (k_interest < 1) throw ConfigError("k_interest must be at least 1");
  if (lower_disc_size < 1) throw ConfigError("lower_disc_size must be at least 1");
  if (upper_grid_size < 1) throw ConfigError("upper_grid_size must be at least 1");
  if (phi_restarts < 1) throw ConfigError("phi_restarts must be at least 1");
  if (revi_candidates < 1) throw ConfigError("revi_candidates must be at least 1");
  if (gp_restarts < 1) throw ConfigError("gp_restarts must be at least 1");
}

namespace {

// Stream tags. Every iteration draws from its own fork so a run truncated
// after n iterations replays the first n exactly.
enum : std::uint64_t {
  kTagLowerDisc = 1,
  kTagInit = 2,
  kTagInitGrid = 3,
  kTagFit = 4,
  kTagIteration = 1000,
};

enum : std::uint64_t { kSubTs = 1, kSubInterest = 2, kSubAcquire = 3, kSubGrid = 4 };

std::uint64_t fit_seed(const RngStream& root, std::uint64_t tag) {
  RngStream s = root.fork(kTagFit).fork(tag);
  return s.next_u64();
}

GPModel refit(const Dataset& data, const BilbaoConfig& cfg, std::uint64_t seed,
              const GPModel* previous) {
  FitOptions opts;
  opts.restarts = cfg.gp_restarts;
  if (previous) {
    opts.warm_kernel = previous->kernel();
    opts.warm_noise = previous->noise();
  }
  return fit(data, cfg.kernel, seed, opts);
}

// Sobol base grid plus every recommendation made so far, exact duplicates
// removed.
Eigen::MatrixXd upper_grid(int d_u, int size, RngStream stream,
                           const std::vector<Eigen::VectorXd>& recommendations) {
  const Eigen::MatrixXd base = sobol_points(d_u, size, stream);
  std::map<std::vector<double>, bool> seen;
  std::vector<Eigen::VectorXd> rows;
  auto push = [&](const Eigen::VectorXd& x) {
    if (seen.emplace(std::vector<double>(x.data(), x.data() + x.size()), true).second)
      rows.push_back(x);
  };
  for (Eigen::Index i = 0; i < base.rows(); ++i) push(base.row(i).transpose());
  for (const auto& r : recommendations) push(r);
  Eigen::MatrixXd grid(static_cast<Eigen::Index>(rows.size()), d_u);
  for (std::size_t i = 0; i < rows.size(); ++i) grid.row(static_cast<Eigen::Index>(i)) = rows[i];
  return grid;
}

}  // namespace

Trace run_bilbao(BilevelProblem& problem, const BilbaoConfig& cfg, const RngStream& stream,
                 const StepObserver& observer) {
  cfg.validate();
  const int d_u = problem.upper_dim();
  const int d_l = problem.lower_dim();
  const int d = problem.joint_dim();
  if (d > kSobolMaxDimension) throw ConfigError("problem dimension exceeds the Sobol limit");

  const RngStream root = stream;
  detail::TraceBuilder trace(problem);

  RngStream disc_stream = root.fork(kTagLowerDisc);
  const SliceDiscretization lower_disc{sobol_points(d_l, cfg.lower_disc_size, disc_stream)};

  // Lower-level initialization over the joint space.
  RngStream init_stream = root.fork(kTagInit);
  const Eigen::MatrixXd lower_init = sobol_points(d, cfg.init_per_gp, init_stream);
  Dataset lower_data(d);
  for (Eigen::Index i = 0; i < lower_init.rows(); ++i) {
    const Eigen::VectorXd x = lower_init.row(i).transpose();
    lower_data.add(x, trace.evaluate(Level::Lower, x).value);
    if (observer) observer({trace.last(), nullptr, nullptr, false});
  }
  GPModel gp_l = refit(lower_data, cfg, fit_seed(root, 0), nullptr);
  std::vector<Eigen::VectorXd> recommendations;
  ResponseMap map = build_map(gp_l, upper_grid(d_u, cfg.upper_grid_size, root.fork(kTagInitGrid), {}),
                              cfg.phi_restarts);

  // Upper-level initialization at Sobol x_u paired with the initial response
  // estimate.
  const Eigen::MatrixXd upper_init = sobol_points(d_u, cfg.init_per_gp, init_stream);
  Dataset upper_data(d);
  Eigen::VectorXd best_x_u;
  double best_y = -std::numeric_limits<double>::infinity();
  std::optional<GPModel> gp_u;
  for (Eigen::Index i = 0; i < upper_init.rows(); ++i) {
    const Eigen::VectorXd x_u = upper_init.row(i).transpose();
    const Eigen::VectorXd x = problem.join(x_u, estimate_phi(gp_l, x_u, cfg.phi_restarts));
    TraceRecord& record = trace.evaluate(Level::Upper, x);
    upper_data.add(x, record.value);
    if (record.value > best_y) {
      best_y = record.value;
      best_x_u = x_u;
    }
    const bool last = i + 1 == upper_init.rows();
    if (last) {
      gp_u = refit(upper_data, cfg, fit_seed(root, 1), nullptr);
      const MapSelection rec = recommend(*gp_u, map);
      recommendations.push_back(rec.upper);
      record.recommendation = rec.upper;
    } else {
      record.recommendation = best_x_u;
    }
    if (observer) observer({record, &gp_l, &map, last});
  }

  for (int n = 0; n < cfg.upper_iterations; ++n) {
    const RngStream it = root.fork(kTagIteration + static_cast<std::uint64_t>(n));

    // Upper step: restricted Thompson sample along the current map.
    RngStream ts_stream = it.fork(kSubTs);
    const MapSelection pick = restricted_ts_argmax(*gp_u, map, ts_stream);
    const Eigen::VectorXd x_up = problem.join(pick.upper, map.responses.row(static_cast<Eigen::Index>(pick.index)).transpose());
    TraceRecord& up = trace.evaluate(Level::Upper, x_up);
    upper_data.add(x_up, up.value);
    gp_u = refit(upper_data, cfg, fit_seed(root, 2 + 2 * static_cast<std::uint64_t>(n)), &*gp_u);
    up.recommendation = recommend(*gp_u, map).upper;
    recommendations.push_back(*up.recommendation);
    if (observer) observer({up, &gp_l, &map, false});

    // Lower step: improve the lower model where the upper level cares.
    RngStream interest_stream = it.fork(kSubInterest);
    const InterestSet interest = sample_interest_set(*gp_u, map, cfg.k_interest, interest_stream);
    RngStream acquire_stream = it.fork(kSubAcquire);
    const Eigen::VectorXd x_low =
        cfg.acquisition == LowerAcquisition::Revi
            ? maximize_revi(gp_l, interest, lower_disc, cfg.revi_candidates, acquire_stream)
            : revits_select(gp_l, interest, lower_disc, acquire_stream);
    TraceRecord& low = trace.evaluate(Level::Lower, x_low);
    lower_data.add(x_low, low.value);
    gp_l = refit(lower_data, cfg, fit_seed(root, 3 + 2 * static_cast<std::uint64_t>(n)), &gp_l);
    const RngStream grid_stream = cfg.refresh_upper_grid ? it.fork(kSubGrid) : root.fork(kTagInitGrid);
    map = build_map(gp_l, upper_grid(d_u, cfg.upper_grid_size, grid_stream, recommendations),
                    cfg.phi_restarts);
    low.recommendation = recommend(*gp_u, map).upper;
    recommendations.push_back(*low.recommendation);
    if (observer) observer({low, &gp_l, &map, true});
  }

  return trace.finish(recommendations.back());
}

}  // namespace bilbao
