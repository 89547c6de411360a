#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace bilbao {

/// Affine bijection between the unit box and a native box.
struct BoxTransform {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd to_native(const Eigen::VectorXd& unit) const {
    return lower.array() + unit.array() * (upper - lower).array();
  }
  Eigen::VectorXd to_unit(const Eigen::VectorXd& native) const {
    return (native - lower).array() / (upper - lower).array();
  }
};

/// Objective in native coordinates of the joint (x_u, x_l) vector.
using NativeObjective = std::function<double(const Eigen::VectorXd&)>;

/// Objective as exposed to optimizers: unit-box input, maximization.
struct ObjectiveSpec {
  NativeObjective native;
  BoxTransform box;
  /// -1 for native minimization problems.
  double sign = 1.0;

  double operator()(const Eigen::VectorXd& unit_joint) const {
    return sign * native(box.to_native(unit_joint));
  }
};

struct EvaluationCounts {
  long upper = 0;
  long lower = 0;
  long total() const { return upper + lower; }
  friend bool operator==(const EvaluationCounts&, const EvaluationCounts&) = default;
};

/// Box-constrained bilevel problem: maximize F(x_u, x_l) subject to
/// x_l in argmax_z f(x_u, z), every variable in the unit box.
///
/// `upper`/`lower` are the budgeted calls and bump the counters;
/// `upper_value`/`lower_value` are oracle calls for metrics and ground truth.
class BilevelProblem {
 public:
  BilevelProblem(std::string name, int upper_dim, int lower_dim, ObjectiveSpec upper,
                 ObjectiveSpec lower, std::string notes = {});

  const std::string& name() const { return name_; }
  const std::string& notes() const { return notes_; }
  int upper_dim() const { return upper_dim_; }
  int lower_dim() const { return lower_dim_; }
  int joint_dim() const { return upper_dim_ + lower_dim_; }
  const ObjectiveSpec& upper_objective() const { return upper_; }
  const ObjectiveSpec& lower_objective() const { return lower_; }

  double upper(const Eigen::VectorXd& joint);
  double lower(const Eigen::VectorXd& joint);
  double upper_value(const Eigen::VectorXd& joint) const;
  double lower_value(const Eigen::VectorXd& joint) const;

  Eigen::VectorXd join(const Eigen::VectorXd& x_u, const Eigen::VectorXd& x_l) const;

  EvaluationCounts counts() const { return counts_; }
  void reset_counts() { counts_ = {}; }

 private:
  void check(const Eigen::VectorXd& joint) const;

  std::string name_;
  std::string notes_;
  int upper_dim_;
  int lower_dim_;
  ObjectiveSpec upper_;
  ObjectiveSpec lower_;
  EvaluationCounts counts_;
};

/// Native test functions (minimization form).
double six_hump_camel(double x1, double x2);
double branin(double x1, double x2);
double dixon_price(double x1, double x2);

struct ProblemInfo {
  std::string name;
  int upper_dim;
  int lower_dim;
  std::string description;
};

/// Registered problems in stable order.
const std::vector<ProblemInfo>& problem_registry();

/// Throws ConfigError for unknown names.
BilevelProblem make_problem(std::string_view name);

}  // namespace bilbao
