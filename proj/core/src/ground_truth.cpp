#include "bilbao/ground_truth.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "bilbao/errors.hpp"
#include "bilbao/optimize.hpp"

namespace bilbao {

namespace {

// Row-major tensor grid with `per_dim` points per axis including both ends.
Eigen::MatrixXd tensor_grid(int dims, int per_dim) {
  long total = 1;
  for (int i = 0; i < dims; ++i) total *= per_dim;
  Eigen::MatrixXd grid(total, dims);
  const double step = per_dim > 1 ? 1.0 / (per_dim - 1) : 0.0;
  for (long row = 0; row < total; ++row) {
    long rest = row;
    for (int j = dims - 1; j >= 0; --j) {
      grid(row, j) = per_dim > 1 ? static_cast<double>(rest % per_dim) * step : 0.5;
      rest /= per_dim;
    }
  }
  return grid;
}

int upper_per_dim(int upper_dim, int resolution) {
  return upper_dim == 1 ? resolution : std::max(11, resolution / 4);
}

}  // namespace

int default_resolution(const BilevelProblem& problem) {
  return problem.lower_dim() == 1 ? 2000 : 200;
}

Eigen::VectorXd phi_star(const BilevelProblem& problem, const Eigen::VectorXd& x_u,
                         int resolution) {
  if (resolution < 2) throw ConfigError("ground-truth resolution must be at least 2");
  if (x_u.size() != problem.upper_dim()) throw DataError("phi_star: upper dimension mismatch");
  const int d_l = problem.lower_dim();
  const Eigen::MatrixXd grid = tensor_grid(d_l, resolution);
  Eigen::VectorXd joint(problem.joint_dim());
  joint.head(problem.upper_dim()) = x_u;

  Eigen::Index best_row = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    joint.tail(d_l) = grid.row(i).transpose();
    const double v = problem.lower_value(joint);
    if (v > best) {
      best = v;
      best_row = i;
    }
  }
  PatternSearchOptions ps;
  ps.initial_step = 1.0 / (resolution - 1);
  ps.min_step = 1e-10;
  ps.max_evaluations = 400;
  const LocalResult refined = pattern_search(
      [&](const Eigen::VectorXd& x_l) {
        joint.tail(d_l) = x_l;
        return -problem.lower_value(joint);
      },
      grid.row(best_row).transpose(), Box::unit(d_l), ps, -best);
  return refined.x;
}

GroundTruth true_bilevel_optimum(const BilevelProblem& problem, int resolution) {
  const int d_u = problem.upper_dim();
  const int per_dim = upper_per_dim(d_u, resolution);
  const Eigen::MatrixXd grid = tensor_grid(d_u, per_dim);

  auto bilevel_value = [&](const Eigen::VectorXd& x_u) {
    return problem.upper_value(problem.join(x_u, phi_star(problem, x_u, resolution)));
  };
  std::vector<double> values(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index i = 0; i < grid.rows(); ++i) values[i] = bilevel_value(grid.row(i).transpose());

  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] > values[b]; });

  GroundTruth truth;
  truth.resolution = resolution;
  truth.F_star = -std::numeric_limits<double>::infinity();
  const std::size_t refine = std::min<std::size_t>(5, order.size());
  PatternSearchOptions ps;
  ps.initial_step = 1.0 / (per_dim - 1);
  ps.min_step = 1e-9;
  ps.max_evaluations = 200;
  for (std::size_t r = 0; r < refine; ++r) {
    const Eigen::Index row = order[r];
    const LocalResult local = pattern_search(
        [&](const Eigen::VectorXd& x_u) { return -bilevel_value(x_u); }, grid.row(row).transpose(),
        Box::unit(d_u), ps, -values[row]);
    if (-local.value > truth.F_star) {
      truth.F_star = -local.value;
      truth.x_u_star = local.x;
    }
  }
  truth.x_l_star = phi_star(problem, truth.x_u_star, resolution);
  truth.F_star = problem.upper_value(problem.join(truth.x_u_star, truth.x_l_star));
  return truth;
}

GroundTruthOracle::GroundTruthOracle(BilevelProblem problem, int resolution)
    : problem_(std::move(problem)), resolution_(resolution) {
  if (resolution_ < 2) throw ConfigError("ground-truth resolution must be at least 2");
}

Eigen::VectorXd GroundTruthOracle::phi_star(const Eigen::VectorXd& x_u) const {
  std::vector<double> key(x_u.data(), x_u.data() + x_u.size());
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  Eigen::VectorXd response = bilbao::phi_star(problem_, x_u, resolution_);
  std::lock_guard lock(mutex_);
  return cache_.emplace(std::move(key), std::move(response)).first->second;
}

double GroundTruthOracle::upper_at_response(const Eigen::VectorXd& x_u) const {
  return problem_.upper_value(problem_.join(x_u, phi_star(x_u)));
}

}  // namespace bilbao
