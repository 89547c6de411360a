#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bilbao/ground_truth.hpp"

namespace bilbao {

/// Estimated best response x_u -> x_l.
using ResponseFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// |F(x_rec, Phi*(x_rec)) - F*|.
double optimality_gap(const GroundTruthOracle& oracle, const GroundTruth& truth,
                      const Eigen::VectorXd& x_u_rec);

/// sum over probes of |f(x_u, Phi(x_u)) - f(x_u, Phi*(x_u))|, lower objective.
double action_gap_full(const GroundTruthOracle& oracle, const ResponseFunction& phi_estimate,
                       const Eigen::MatrixXd& probes);

/// |F(x_u*, Phi*(x_u*)) - F(x_u*, Phi(x_u*))|, upper objective.
double action_gap_at_optimum(const GroundTruthOracle& oracle, const GroundTruth& truth,
                             const ResponseFunction& phi_estimate);

struct MetricSeries {
  std::string metric;
  std::string problem;
  int replication = 0;
  std::vector<long> evaluation_index;
  std::vector<double> values;

  void push(long evaluation, double value);
};

}  // namespace bilbao
