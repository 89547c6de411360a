#include "bilbao/problems.hpp"

#include <cmath>
#include <numbers>

#include "bilbao/errors.hpp"

namespace bilbao {

namespace {

using std::numbers::pi;

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

BoxTransform box(std::initializer_list<double> lower, std::initializer_list<double> upper) {
  return {vec(lower), vec(upper)};
}

// SMD problems with p = q = r = 1: x_u = (x_u1, x_u2), x_l = (x_l1, x_l2).
// The tan-based lower coordinate is restricted to [-1.5, 1.5] and the log-based
// one to [e^-5, e] so that every objective stays finite on the box.
constexpr double kTanBound = 1.5;
const double kLogLower = std::exp(-5.0);

double rastrigin_term(double x) { return x * x - std::cos(2.0 * pi * x); }

BilevelProblem smd(int which) {
  const std::string name = "smd" + std::to_string(which);
  const std::string notes = "SMD split p=1, q=1, r=1 (d_u=2, d_l=2)";
  BoxTransform b;
  NativeObjective F, f;
  switch (which) {
    case 1:
      b = box({-5, -5, -5, -kTanBound}, {10, 10, 10, kTanBound});
      F = [](const Eigen::VectorXd& x) {
        const double t = x[1] - std::tan(x[3]);
        return x[0] * x[0] + x[2] * x[2] + x[1] * x[1] + t * t;
      };
      f = [](const Eigen::VectorXd& x) {
        const double t = x[1] - std::tan(x[3]);
        return x[0] * x[0] + x[2] * x[2] + t * t;
      };
      break;
    case 2:
      b = box({-5, -5, -5, kLogLower}, {10, 1, 10, std::numbers::e});
      F = [](const Eigen::VectorXd& x) {
        const double t = x[1] - std::log(x[3]);
        return x[0] * x[0] - x[2] * x[2] + x[1] * x[1] - t * t;
      };
      f = [](const Eigen::VectorXd& x) {
        const double t = x[1] - std::log(x[3]);
        return x[0] * x[0] + x[2] * x[2] + t * t;
      };
      break;
    case 3:
      b = box({-5, -5, -5, -kTanBound}, {10, 10, 10, kTanBound});
      F = [](const Eigen::VectorXd& x) {
        const double t = x[1] * x[1] - std::tan(x[3]);
        return x[0] * x[0] + x[2] * x[2] + x[1] * x[1] + t * t;
      };
      f = [](const Eigen::VectorXd& x) {
        const double t = x[1] * x[1] - std::tan(x[3]);
        return x[0] * x[0] + 1.0 + rastrigin_term(x[2]) + t * t;
      };
      break;
    case 4:
      b = box({-5, -1, -5, 0}, {10, 1, 10, std::numbers::e});
      F = [](const Eigen::VectorXd& x) {
        const double t = std::abs(x[1]) - std::log(1.0 + x[3]);
        return x[0] * x[0] - x[2] * x[2] + x[1] * x[1] - t * t;
      };
      f = [](const Eigen::VectorXd& x) {
        const double t = std::abs(x[1]) - std::log(1.0 + x[3]);
        return x[0] * x[0] + 1.0 + rastrigin_term(x[2]) + t * t;
      };
      break;
    default:
      throw ConfigError("unknown SMD index");
  }
  return BilevelProblem(name, 2, 2, {F, b, -1.0}, {f, b, -1.0}, notes);
}

}  // namespace

double six_hump_camel(double x1, double x2) {
  const double x1sq = x1 * x1;
  const double x2sq = x2 * x2;
  return (4.0 - 2.1 * x1sq + x1sq * x1sq / 3.0) * x1sq + x1 * x2 + (-4.0 + 4.0 * x2sq) * x2sq;
}

double branin(double x1, double x2) {
  constexpr double b = 5.1 / (4.0 * pi * pi);
  constexpr double c = 5.0 / pi;
  constexpr double t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

double dixon_price(double x1, double x2) {
  const double q = 2.0 * x2 * x2 - x1;
  return (x1 - 1.0) * (x1 - 1.0) + 2.0 * q * q;
}

BilevelProblem::BilevelProblem(std::string name, int upper_dim, int lower_dim, ObjectiveSpec upper,
                               ObjectiveSpec lower, std::string notes)
    : name_(std::move(name)),
      notes_(std::move(notes)),
      upper_dim_(upper_dim),
      lower_dim_(lower_dim),
      upper_(std::move(upper)),
      lower_(std::move(lower)) {
  if (upper_dim_ < 1 || lower_dim_ < 1) throw ConfigError("problem dimensions must be positive");
  if (upper_.box.dim() != joint_dim() || lower_.box.dim() != joint_dim())
    throw ConfigError("objective boxes must span the joint space");
}

void BilevelProblem::check(const Eigen::VectorXd& joint) const {
  if (joint.size() != joint_dim())
    throw DataError("expected a joint point of dimension " + std::to_string(joint_dim()));
  if ((joint.array() < 0.0).any() || (joint.array() > 1.0).any())
    throw DataError("query outside the unit box");
}

double BilevelProblem::upper(const Eigen::VectorXd& joint) {
  const double v = upper_value(joint);
  ++counts_.upper;
  return v;
}

double BilevelProblem::lower(const Eigen::VectorXd& joint) {
  const double v = lower_value(joint);
  ++counts_.lower;
  return v;
}

double BilevelProblem::upper_value(const Eigen::VectorXd& joint) const {
  check(joint);
  return upper_(joint);
}

double BilevelProblem::lower_value(const Eigen::VectorXd& joint) const {
  check(joint);
  return lower_(joint);
}

Eigen::VectorXd BilevelProblem::join(const Eigen::VectorXd& x_u, const Eigen::VectorXd& x_l) const {
  if (x_u.size() != upper_dim_ || x_l.size() != lower_dim_)
    throw DataError("join: dimension mismatch");
  Eigen::VectorXd x(joint_dim());
  x << x_u, x_l;
  return x;
}

const std::vector<ProblemInfo>& problem_registry() {
  static const std::vector<ProblemInfo> registry{
      {"camel_branin", 1, 1, "upper: six-hump camel, lower: branin"},
      {"dixon_branin", 1, 1, "upper: dixon-price, lower: branin"},
      {"smd1", 2, 2, "SMD1 (p=q=r=1)"},
      {"smd2", 2, 2, "SMD2 (p=q=r=1)"},
      {"smd3", 2, 2, "SMD3 (p=q=r=1)"},
      {"smd4", 2, 2, "SMD4 (p=q=r=1)"},
      {"toy_quadratic", 1, 1, "analytic: F=-(x_u-0.3)^2-(x_l-0.3)^2, f=-(x_l-x_u)^2"},
  };
  return registry;
}

BilevelProblem make_problem(std::string_view name) {
  const BoxTransform branin_box = box({-5, 0}, {10, 15});
  const ObjectiveSpec branin_lower{
      [](const Eigen::VectorXd& x) { return branin(x[0], x[1]); }, branin_box, -1.0};
  if (name == "camel_branin") {
    return BilevelProblem(
        "camel_branin", 1, 1,
        {[](const Eigen::VectorXd& x) { return six_hump_camel(x[0], x[1]); },
         box({-3, -2}, {3, 2}), -1.0},
        branin_lower);
  }
  if (name == "dixon_branin") {
    return BilevelProblem(
        "dixon_branin", 1, 1,
        {[](const Eigen::VectorXd& x) { return dixon_price(x[0], x[1]); },
         box({-10, -10}, {10, 10}), -1.0},
        branin_lower);
  }
  if (name == "smd1") return smd(1);
  if (name == "smd2") return smd(2);
  if (name == "smd3") return smd(3);
  if (name == "smd4") return smd(4);
  if (name == "toy_quadratic") {
    const BoxTransform unit = box({0, 0}, {1, 1});
    return BilevelProblem(
        "toy_quadratic", 1, 1,
        {[](const Eigen::VectorXd& x) {
           return -(x[0] - 0.3) * (x[0] - 0.3) - (x[1] - 0.3) * (x[1] - 0.3);
         },
         unit, 1.0},
        {[](const Eigen::VectorXd& x) { return -(x[1] - x[0]) * (x[1] - x[0]); }, unit, 1.0});
  }
  throw ConfigError("unknown problem '" + std::string(name) + "'");
}

}  // namespace bilbao
