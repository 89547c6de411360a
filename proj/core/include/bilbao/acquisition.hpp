#pragma once

#include <Eigen/Core>

#include "bilbao/gp.hpp"
#include "bilbao/rng.hpp"

namespace bilbao {

double normal_pdf(double z);
double normal_cdf(double z);

/// E[max(Y - incumbent, 0)] for Y ~ N(mean, std^2).
double expected_improvement(double mean, double std, double incumbent);

/// E[max_i (a_i + b_i Z)] - max_i a_i for Z ~ N(0, 1).
///
/// Exact: builds the upper envelope of the lines a_i + b_i z ordered by
/// slope and sums (b_{j+1} - b_j) f(-|c_j|) over its breakpoints c_j, with
/// f(z) = z Phi(z) + phi(z). Always >= 0.
double expected_max_gain(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Upper-level decisions whose lower-level slices REVI tries to improve.
struct InterestSet {
  Eigen::MatrixXd upper_points;  // k x d_u
  Eigen::VectorXd weights;       // nonnegative, sums to 1

  static InterestSet uniform(Eigen::MatrixXd upper_points);
  int size() const { return static_cast<int>(upper_points.rows()); }
  void validate() const;
};

/// Lower-level discretization X_LMC shared by every slice.
struct SliceDiscretization {
  Eigen::MatrixXd lower_points;  // m x d_l

  int size() const { return static_cast<int>(lower_points.rows()); }
  void validate() const;
};

struct KgValue {
  double value = 0.0;
  /// Candidate had zero predictive variance and the model zero noise.
  bool degenerate = false;
};

/// Weighted sum of fixed-task discrete KG terms for one fitted model.
///
/// Precomputes the slice posterior means and whitened cross-covariances so
/// each candidate costs one triangular solve plus one envelope per slice.
/// Duplicate interest points are merged with their weights added.
class ReviEvaluator {
 public:
  ReviEvaluator(const GPModel& gp, const InterestSet& interest, const SliceDiscretization& disc);

  KgValue operator()(const Eigen::VectorXd& candidate) const;

  int joint_dim() const { return gp_->dim(); }
  int upper_dim() const { return upper_dim_; }

 private:
  const GPModel* gp_;
  int upper_dim_ = 0;
  int slice_size_ = 0;
  Eigen::VectorXd weights_;     // one per distinct task
  Eigen::MatrixXd slice_points_;  // (tasks * slice_size) x d, task-major
  Eigen::VectorXd slice_means_;
  Eigen::MatrixXd whitened_;      // n x (tasks * slice_size)
};

/// KG^n_{x_u_fixed}(candidate) over the slice {(x_u_fixed, x_l) : x_l in disc}.
KgValue kg_fixed_task(const GPModel& gp, const Eigen::VectorXd& x_u_fixed,
                      const Eigen::VectorXd& candidate, const SliceDiscretization& disc);

/// sum_i w_i KG^n_{x_u_i}(candidate).
double revi(const GPModel& gp, const Eigen::VectorXd& candidate, const InterestSet& interest,
            const SliceDiscretization& disc);

struct ReviSearchOptions {
  /// Lower points paired with every interest point in the candidate set.
  int lower_augment = 8;
  /// Pattern-search evaluations spent refining the best candidate.
  int refine_evaluations = 50;
  double refine_step = 0.05;
};

/// Sobol sweep of `budget` joint candidates plus the interest-point
/// augmentation, followed by pattern-search refinement of the best one.
Eigen::VectorXd maximize_revi(const GPModel& gp, const InterestSet& interest,
                              const SliceDiscretization& disc, int budget, RngStream& stream,
                              const ReviSearchOptions& options = {});

/// Argmax of one joint posterior draw over X_TS x X_LMC.
Eigen::VectorXd revits_select(const GPModel& gp, const InterestSet& interest,
                              const SliceDiscretization& lower_disc, RngStream& stream);

/// Sobol sweep plus pattern-search refinement of EI over the unit box of
/// the model's input space.
Eigen::VectorXd maximize_expected_improvement(const GPModel& gp, double incumbent, int budget,
                                              RngStream& stream, int refine_evaluations = 50);

}  // namespace bilbao
