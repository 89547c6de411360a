#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

namespace bilbao {

/// Axis-aligned box [lower, upper].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box unit(int d) { return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)}; }
  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
};

/// Objective for minimization. When `grad` is non-null it must be filled.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
using PlainObjective = std::function<double(const Eigen::VectorXd& x)>;

struct LocalResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

struct QuasiNewtonOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  double value_tolerance = 1e-12;
  /// Longest coordinate move of a steepest-descent step (first iteration and
  /// after every Hessian reset).
  double initial_step = 1.0;
  /// Line search gives up once a trial move is this short.
  double step_tolerance = 1e-10;
};

/// Projected BFGS with an active set and Armijo backtracking along the
/// projected path. Minimizes `f` over `box` starting from `x0` (clamped).
LocalResult minimize_box(const SmoothObjective& f, const Eigen::VectorXd& x0, const Box& box,
                         const QuasiNewtonOptions& options = {});

struct PatternSearchOptions {
  int max_evaluations = 50;
  double initial_step = 0.1;
  double min_step = 1e-9;
};

/// Derivative-free coordinate pattern search inside `box`.
///
/// Polls +step then -step along each axis in order, moving on the first
/// strict improvement; halves the step after a sweep with no move. The
/// starting point counts as one evaluation only if `start_value` is absent.
LocalResult pattern_search(const PlainObjective& f, const Eigen::VectorXd& x0, const Box& box,
                           const PatternSearchOptions& options = {},
                           std::optional<double> start_value = std::nullopt);

}  // namespace bilbao
