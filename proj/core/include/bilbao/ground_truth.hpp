#pragma once

#include <map>
#include <mutex>
#include <vector>

#include <Eigen/Core>

#include "bilbao/problems.hpp"

namespace bilbao {

/// Brute-force bilevel optimum (x_u*, Phi*(x_u*), F*).
struct GroundTruth {
  Eigen::VectorXd x_u_star;
  Eigen::VectorXd x_l_star;
  double F_star = 0.0;
  int resolution = 0;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Grid points per lower dimension: 2000 for 1-D lower levels, 200 otherwise.
int default_resolution(const BilevelProblem& problem);

/// True lower-level response: best point of a grid with `resolution` points
/// per lower dimension, refined by a bounded pattern search on f.
Eigen::VectorXd phi_star(const BilevelProblem& problem, const Eigen::VectorXd& x_u, int resolution);

/// Nested brute force over an upper grid (resolution points for a 1-D upper
/// level, resolution/4 per dimension otherwise), each resolved by phi_star;
/// the best few grid points are refined by pattern search.
GroundTruth true_bilevel_optimum(const BilevelProblem& problem, int resolution);

/// phi_star with a per-x_u cache. Safe to share across threads.
class GroundTruthOracle {
 public:
  GroundTruthOracle(BilevelProblem problem, int resolution);

  const BilevelProblem& problem() const { return problem_; }
  int resolution() const { return resolution_; }
  Eigen::VectorXd phi_star(const Eigen::VectorXd& x_u) const;
  /// F(x_u, Phi*(x_u)) without touching the evaluation counters.
  double upper_at_response(const Eigen::VectorXd& x_u) const;

 private:
  BilevelProblem problem_;
  int resolution_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<double>, Eigen::VectorXd> cache_;
};

}  // namespace bilbao
