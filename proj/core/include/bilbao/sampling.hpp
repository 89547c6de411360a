#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "bilbao/gp.hpp"
#include "bilbao/rng.hpp"
#include "bilbao/sobol.hpp"

namespace bilbao {

/// Lower Cholesky factor of `cov`, escalating diagonal jitter through
/// 1e-8 .. 1e-4 (relative to the mean diagonal) when needed. A zero matrix
/// yields a zero factor. Throws NumericalError when every attempt fails.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov);

/// mean + L z with z standard normal drawn from `stream`.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RngStream& stream);

struct ThompsonDraw {
  std::size_t index = 0;
  double value = 0.0;
};

/// Joint posterior sampler over a fixed candidate set.
///
/// Factorizes the posterior covariance once so repeated draws are cheap.
/// Exact duplicate candidates share one latent value.
class JointPosteriorSampler {
 public:
  JointPosteriorSampler(const GPModel& gp, const Eigen::MatrixXd& candidates);

  std::size_t size() const { return slot_.size(); }
  Eigen::VectorXd draw(RngStream& stream) const;
  /// Argmax of one joint draw, lowest index on ties.
  ThompsonDraw argmax(RngStream& stream) const;

 private:
  std::vector<std::size_t> slot_;  // candidate -> unique row
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

ThompsonDraw thompson_argmax(const GPModel& gp, const Eigen::MatrixXd& candidates,
                             RngStream& stream);

}  // namespace bilbao
