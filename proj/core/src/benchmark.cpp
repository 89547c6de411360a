#include <cstdint>
#include <limits>
#include <string>

#include "bilbao/acquisition.hpp"
#include "bilbao/algorithms.hpp"
#include "bilbao/errors.hpp"
#include "bilbao/sobol.hpp"
#include "trace_builder.hpp"

namespace bilbao {

void BenchmarkConfig::validate() const {
  if (init_upper < 1) throw ConfigError("init_upper must be at least 1");
  if (init_lower < 1) throw ConfigError("init_lower must be at least 1");
  if (upper_iterations < 0) throw ConfigError("upper_iterations must be nonnegative");
  if (lower_iterations < 0) throw ConfigError("lower_iterations must be nonnegative");
  if (ei_candidates < 1) throw ConfigError("ei_candidates must be at least 1");
  if (gp_restarts < 1) throw ConfigError("gp_restarts must be at least 1");
}

namespace {

enum : std::uint64_t { kTagInit = 1, kTagOuter = 1000, kTagInner = 2 };
enum : std::uint64_t { kSubAcquire = 1, kSubFit = 2, kSubInner = 3 };

struct Best {
  Eigen::VectorXd x;
  double value = -std::numeric_limits<double>::infinity();

  void offer(const Eigen::VectorXd& candidate, double y) {
    if (y > value) {
      value = y;
      x = candidate;
    }
  }
};

GPModel fit_with(const Dataset& data, const BenchmarkConfig& cfg, RngStream& stream) {
  FitOptions opts;
  opts.restarts = cfg.gp_restarts;
  return fit(data, cfg.kernel, stream.next_u64(), opts);
}

class NestedRun {
 public:
  NestedRun(BilevelProblem& problem, const BenchmarkConfig& cfg, const StepObserver& observer)
      : problem_(problem), cfg_(cfg), observer_(observer), trace_(problem) {}

  // Inner BO over x_l at fixed x_u; returns the best observed x_l.
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& x_u, const RngStream& stream) {
    const int d_l = problem_.lower_dim();
    RngStream init = stream.fork(kTagInit);
    const Eigen::MatrixXd start = sobol_points(d_l, cfg_.init_lower, init);
    Dataset data(d_l);
    Best best;
    auto query = [&](const Eigen::VectorXd& x_l) {
      TraceRecord& record = trace_.evaluate(Level::Lower, problem_.join(x_u, x_l));
      if (upper_best_.x.size() > 0) record.recommendation = upper_best_.x;
      data.add(x_l, record.value);
      best.offer(x_l, record.value);
      notify(record);
    };
    for (Eigen::Index i = 0; i < start.rows(); ++i) query(start.row(i).transpose());
    for (int m = 0; m < cfg_.lower_iterations; ++m) {
      const RngStream step = stream.fork(kTagInner + static_cast<std::uint64_t>(m));
      RngStream fit_stream = step.fork(kSubFit);
      const GPModel gp = fit_with(data, cfg_, fit_stream);
      RngStream acquire = step.fork(kSubAcquire);
      query(maximize_expected_improvement(gp, best.value, cfg_.ei_candidates, acquire));
    }
    return best.x;
  }

  void upper_step(const Eigen::VectorXd& x_u, const RngStream& stream, Dataset& data) {
    const Eigen::VectorXd x_l = solve_lower(x_u, stream.fork(kSubInner));
    TraceRecord& record = trace_.evaluate(Level::Upper, problem_.join(x_u, x_l));
    data.add(x_u, record.value);
    upper_best_.offer(x_u, record.value);
    record.recommendation = upper_best_.x;
    notify(record);
  }

  Trace run(const RngStream& root) {
    const int d_u = problem_.upper_dim();
    RngStream init = root.fork(kTagInit);
    const Eigen::MatrixXd start = sobol_points(d_u, cfg_.init_upper, init);
    Dataset data(d_u);
    for (Eigen::Index i = 0; i < start.rows(); ++i)
      upper_step(start.row(i).transpose(), root.fork(kTagOuter + static_cast<std::uint64_t>(i)),
                 data);
    for (int n = 0; n < cfg_.upper_iterations; ++n) {
      const RngStream step =
          root.fork(kTagOuter + static_cast<std::uint64_t>(cfg_.init_upper + n));
      RngStream fit_stream = step.fork(kSubFit);
      const GPModel gp = fit_with(data, cfg_, fit_stream);
      RngStream acquire = step.fork(kSubAcquire);
      upper_step(maximize_expected_improvement(gp, upper_best_.value, cfg_.ei_candidates, acquire),
                 step, data);
    }
    return trace_.finish(upper_best_.x);
  }

 private:
  void notify(const TraceRecord& record) {
    if (observer_) observer_({record, nullptr, nullptr, false});
  }

  BilevelProblem& problem_;
  const BenchmarkConfig& cfg_;
  const StepObserver& observer_;
  detail::TraceBuilder trace_;
  Best upper_best_;
};

}  // namespace

Trace run_benchmark(BilevelProblem& problem, const BenchmarkConfig& cfg, const RngStream& stream,
                    const StepObserver& observer) {
  cfg.validate();
  if (problem.joint_dim() > kSobolMaxDimension)
    throw ConfigError("problem dimension exceeds the Sobol limit");
  NestedRun run(problem, cfg, observer);
  return run.run(stream);
}

}  // namespace bilbao
