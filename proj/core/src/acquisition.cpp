#include "bilbao/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "bilbao/errors.hpp"
#include "bilbao/optimize.hpp"
#include "bilbao/sampling.hpp"
#include "bilbao/sobol.hpp"

namespace bilbao {

namespace {

// z Phi(z) + phi(z), the expected positive part of z + Z.
double expected_positive_part(double z) {
  return std::max(0.0, z * normal_cdf(z) + normal_pdf(z));
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double std, double incumbent) {
  const double gap = mean - incumbent;
  if (!(std > 0.0)) return std::max(gap, 0.0);
  return std * expected_positive_part(gap / std);
}

double expected_max_gain(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index m = a.size();
  if (b.size() != m) throw DataError("expected_max_gain: size mismatch");
  if (m <= 1) return 0.0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return b[i] < b[j] || (b[i] == b[j] && a[i] < a[j]);
  });

  // Upper envelope: slopes strictly increasing, breakpoints strictly increasing.
  std::vector<double> env_a, env_b, env_c;
  env_a.reserve(order.size());
  env_b.reserve(order.size());
  env_c.reserve(order.size());
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const Eigen::Index j = order[idx];
    // Equal slopes: only the last (largest intercept) survives.
    if (idx + 1 < order.size() && b[order[idx + 1]] == b[j]) continue;
    double c = -std::numeric_limits<double>::infinity();
    while (!env_a.empty()) {
      c = (env_a.back() - a[j]) / (b[j] - env_b.back());
      if (c <= env_c.back()) {
        env_a.pop_back();
        env_b.pop_back();
        env_c.pop_back();
        c = -std::numeric_limits<double>::infinity();
      } else {
        break;
      }
    }
    env_a.push_back(a[j]);
    env_b.push_back(b[j]);
    env_c.push_back(c);
  }

  double gain = 0.0;
  for (std::size_t i = 1; i < env_a.size(); ++i)
    gain += (env_b[i] - env_b[i - 1]) * expected_positive_part(-std::abs(env_c[i]));
  return std::max(gain, 0.0);
}

// ---------------------------------------------------------------------------

InterestSet InterestSet::uniform(Eigen::MatrixXd upper_points) {
  const Eigen::Index k = upper_points.rows();
  InterestSet set{std::move(upper_points), Eigen::VectorXd::Constant(k, k > 0 ? 1.0 / k : 0.0)};
  set.validate();
  return set;
}

void InterestSet::validate() const {
  if (upper_points.rows() < 1) throw DataError("interest set must contain at least one point");
  if (weights.size() != upper_points.rows())
    throw DataError("interest set weights do not match its points");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12)
    throw DataError("interest set weights must be nonnegative and sum to 1");
}

void SliceDiscretization::validate() const {
  if (lower_points.rows() < 1) throw DataError("slice discretization is empty");
  if ((lower_points.array() < 0.0).any() || (lower_points.array() > 1.0).any())
    throw DataError("slice discretization must lie in the lower unit box");
}

// ---------------------------------------------------------------------------

ReviEvaluator::ReviEvaluator(const GPModel& gp, const InterestSet& interest,
                             const SliceDiscretization& disc)
    : gp_(&gp) {
  interest.validate();
  disc.validate();
  upper_dim_ = static_cast<int>(interest.upper_points.cols());
  slice_size_ = disc.size();
  if (upper_dim_ + disc.lower_points.cols() != gp.dim())
    throw DataError("interest and slice dimensions do not add up to the model dimension");

  std::map<std::vector<double>, int> seen;
  std::vector<Eigen::Index> tasks;
  std::vector<double> weights;
  for (Eigen::Index i = 0; i < interest.upper_points.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(upper_dim_));
    for (int j = 0; j < upper_dim_; ++j) key[j] = interest.upper_points(i, j);
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(tasks.size()));
    if (inserted) {
      tasks.push_back(i);
      weights.push_back(interest.weights[i]);
    } else {
      weights[static_cast<std::size_t>(it->second)] += interest.weights[i];
    }
  }
  weights_ = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));

  const Eigen::Index total = static_cast<Eigen::Index>(tasks.size()) * slice_size_;
  slice_points_.resize(total, gp.dim());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (int s = 0; s < slice_size_; ++s) {
      const Eigen::Index row = static_cast<Eigen::Index>(t) * slice_size_ + s;
      slice_points_.row(row).head(upper_dim_) = interest.upper_points.row(tasks[t]);
      slice_points_.row(row).tail(disc.lower_points.cols()) = disc.lower_points.row(s);
    }
  }
  slice_means_ = gp.means(slice_points_);
  whitened_ = gp.whitened_cross(slice_points_);
}

KgValue ReviEvaluator::operator()(const Eigen::VectorXd& candidate) const {
  if (candidate.size() != gp_->dim()) throw DataError("REVI candidate dimension mismatch");
  const Eigen::MatrixXd cand = candidate.transpose();
  const Eigen::VectorXd v = gp_->whitened_cross(cand).col(0);
  const KernelConfig& kernel = gp_->kernel();
  const double var_z = std::max(0.0, kernel.output_scale - v.squaredNorm());
  const double denom = var_z + gp_->noise();
  if (!(denom > 0.0)) return {0.0, true};

  Eigen::VectorXd cov_z = kernel.matrix(slice_points_, cand).col(0);
  cov_z.noalias() -= whitened_.transpose() * v;
  const Eigen::VectorXd sigma = (gp_->standardization().scale / std::sqrt(denom)) * cov_z;

  double total = 0.0;
  for (Eigen::Index t = 0; t < weights_.size(); ++t) {
    const Eigen::Index offset = t * slice_size_;
    total += weights_[t] * expected_max_gain(slice_means_.segment(offset, slice_size_),
                                             sigma.segment(offset, slice_size_));
  }
  return {std::max(total, 0.0), false};
}

KgValue kg_fixed_task(const GPModel& gp, const Eigen::VectorXd& x_u_fixed,
                      const Eigen::VectorXd& candidate, const SliceDiscretization& disc) {
  const InterestSet single = InterestSet::uniform(x_u_fixed.transpose());
  return ReviEvaluator(gp, single, disc)(candidate);
}

double revi(const GPModel& gp, const Eigen::VectorXd& candidate, const InterestSet& interest,
            const SliceDiscretization& disc) {
  return ReviEvaluator(gp, interest, disc)(candidate).value;
}

Eigen::VectorXd maximize_revi(const GPModel& gp, const InterestSet& interest,
                              const SliceDiscretization& disc, int budget, RngStream& stream,
                              const ReviSearchOptions& options) {
  if (budget < 1) throw ConfigError("REVI candidate budget must be at least 1");
  const ReviEvaluator evaluator(gp, interest, disc);
  const int d = gp.dim();
  const int d_u = evaluator.upper_dim();
  const int d_l = d - d_u;

  Eigen::MatrixXd candidates = sobol_points(d, budget, stream);
  if (options.lower_augment > 0) {
    const Eigen::MatrixXd lower = sobol_points(d_l, options.lower_augment, stream);
    const Eigen::Index base = candidates.rows();
    candidates.conservativeResize(base + interest.size() * options.lower_augment, Eigen::NoChange);
    Eigen::Index row = base;
    for (int i = 0; i < interest.size(); ++i) {
      for (int s = 0; s < options.lower_augment; ++s, ++row) {
        candidates.row(row).head(d_u) = interest.upper_points.row(i);
        candidates.row(row).tail(d_l) = lower.row(s);
      }
    }
  }

  Eigen::Index best_row = 0;
  double best_value = -1.0;
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    const double value = evaluator(candidates.row(i).transpose()).value;
    if (value > best_value) {
      best_value = value;
      best_row = i;
    }
  }
  Eigen::VectorXd best = candidates.row(best_row).transpose();
  if (options.refine_evaluations > 0) {
    PatternSearchOptions ps;
    ps.max_evaluations = options.refine_evaluations;
    ps.initial_step = options.refine_step;
    const LocalResult refined = pattern_search(
        [&evaluator](const Eigen::VectorXd& x) { return -evaluator(x).value; }, best,
        Box::unit(d), ps, -best_value);
    if (-refined.value > best_value) best = refined.x;
  }
  return best;
}

Eigen::VectorXd revits_select(const GPModel& gp, const InterestSet& interest,
                              const SliceDiscretization& lower_disc, RngStream& stream) {
  interest.validate();
  lower_disc.validate();
  const Eigen::Index d_u = interest.upper_points.cols();
  const Eigen::Index d_l = lower_disc.lower_points.cols();
  if (d_u + d_l != gp.dim()) throw DataError("REVITS grid dimension mismatch");
  const Eigen::Index m = lower_disc.lower_points.rows();
  Eigen::MatrixXd grid(interest.size() * m, gp.dim());
  for (int i = 0; i < interest.size(); ++i) {
    for (Eigen::Index s = 0; s < m; ++s) {
      grid.row(i * m + s).head(d_u) = interest.upper_points.row(i);
      grid.row(i * m + s).tail(d_l) = lower_disc.lower_points.row(s);
    }
  }
  const ThompsonDraw pick = thompson_argmax(gp, grid, stream);
  return grid.row(static_cast<Eigen::Index>(pick.index)).transpose();
}

Eigen::VectorXd maximize_expected_improvement(const GPModel& gp, double incumbent, int budget,
                                              RngStream& stream, int refine_evaluations) {
  if (budget < 1) throw ConfigError("EI candidate budget must be at least 1");
  const int d = gp.dim();
  auto ei = [&gp, incumbent](const Eigen::VectorXd& x) {
    const Prediction p = gp.posterior(x);
    return expected_improvement(p.mean, std::sqrt(p.variance), incumbent);
  };
  const Eigen::MatrixXd candidates = sobol_points(d, budget, stream);
  Eigen::Index best_row = 0;
  double best_value = -1.0;
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    const double value = ei(candidates.row(i).transpose());
    if (value > best_value) {
      best_value = value;
      best_row = i;
    }
  }
  Eigen::VectorXd best = candidates.row(best_row).transpose();
  if (refine_evaluations > 0) {
    PatternSearchOptions ps;
    ps.max_evaluations = refine_evaluations;
    ps.initial_step = 0.05;
    const LocalResult refined = pattern_search(
        [&ei](const Eigen::VectorXd& x) { return -ei(x); }, best, Box::unit(d), ps, -best_value);
    if (-refined.value > best_value) best = refined.x;
  }
  return best;
}

}  // namespace bilbao
