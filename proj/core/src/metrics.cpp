#include "bilbao/metrics.hpp"

#include <cmath>

#include "bilbao/errors.hpp"

namespace bilbao {

double optimality_gap(const GroundTruthOracle& oracle, const GroundTruth& truth,
                      const Eigen::VectorXd& x_u_rec) {
  return std::abs(oracle.upper_at_response(x_u_rec) - truth.F_star);
}

double action_gap_full(const GroundTruthOracle& oracle, const ResponseFunction& phi_estimate,
                       const Eigen::MatrixXd& probes) {
  const BilevelProblem& problem = oracle.problem();
  double total = 0.0;
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    const Eigen::VectorXd x_u = probes.row(i).transpose();
    const double estimated = problem.lower_value(problem.join(x_u, phi_estimate(x_u)));
    const double best = problem.lower_value(problem.join(x_u, oracle.phi_star(x_u)));
    total += std::abs(estimated - best);
  }
  return total;
}

double action_gap_at_optimum(const GroundTruthOracle& oracle, const GroundTruth& truth,
                             const ResponseFunction& phi_estimate) {
  const BilevelProblem& problem = oracle.problem();
  const double estimated =
      problem.upper_value(problem.join(truth.x_u_star, phi_estimate(truth.x_u_star)));
  return std::abs(truth.F_star - estimated);
}

void MetricSeries::push(long evaluation, double value) {
  if (!evaluation_index.empty() && evaluation <= evaluation_index.back())
    throw DataError("metric series evaluation indices must be strictly increasing");
  if (!(value >= 0.0)) throw DataError("metric values must be nonnegative");
  evaluation_index.push_back(evaluation);
  values.push_back(value);
}

}  // namespace bilbao
