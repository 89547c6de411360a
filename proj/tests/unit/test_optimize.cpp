#include <cmath>

#include <gtest/gtest.h>

#include "bilbao/optimize.hpp"

using namespace bilbao;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  if (g) {
    g->resize(2);
    (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
    (*g)[1] = 200.0 * b;
  }
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST(MinimizeBox, InteriorQuadratic) {
  const Eigen::Vector3d c(0.2, 0.7, 0.4);
  const SmoothObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2.0 * (x - c);
    return (x - c).squaredNorm();
  };
  const LocalResult r = minimize_box(f, Eigen::VectorXd::Constant(3, 0.9), Box::unit(3));
  EXPECT_LT((r.x - c).norm(), 1e-6);
}

TEST(MinimizeBox, ActiveBound) {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) {
      g->resize(2);
      (*g)[0] = 2.0 * (x[0] - 1.5);
      (*g)[1] = 2.0 * (x[1] - 0.3);
    }
    return std::pow(x[0] - 1.5, 2) + std::pow(x[1] - 0.3, 2);
  };
  const LocalResult r = minimize_box(f, Eigen::Vector2d(0.1, 0.9), Box::unit(2));
  EXPECT_DOUBLE_EQ(r.x[0], 1.0);
  EXPECT_NEAR(r.x[1], 0.3, 1e-6);
}

TEST(MinimizeBox, Rosenbrock) {
  Box box{Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)};
  QuasiNewtonOptions opts;
  opts.max_iterations = 500;
  opts.gradient_tolerance = 1e-8;
  const LocalResult r = minimize_box(rosenbrock, Eigen::Vector2d(-1.2, 1.0), box, opts);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(MinimizeBox, NeverLeavesBoxAndNeverWorsens) {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = Eigen::VectorXd::Constant(x.size(), -100.0);
    return -100.0 * x.sum();
  };
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(4, 0.5);
  const LocalResult r = minimize_box(f, x0, Box::unit(4));
  EXPECT_TRUE(Box::unit(4).contains(r.x));
  EXPECT_LE(r.value, f(x0, nullptr));
  EXPECT_NEAR(r.value, -400.0, 1e-9);
}

TEST(MinimizeBox, InfiniteRegionIsAvoided) {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = Eigen::VectorXd::Constant(1, 2.0 * (x[0] - 0.8));
    if (x[0] > 0.9) return std::numeric_limits<double>::infinity();
    return std::pow(x[0] - 0.8, 2);
  };
  const LocalResult r = minimize_box(f, Eigen::VectorXd::Constant(1, 0.0), Box::unit(1));
  EXPECT_NEAR(r.x[0], 0.8, 1e-5);
}

TEST(PatternSearch, FindsQuadraticMinimum) {
  const PlainObjective f = [](const Eigen::VectorXd& x) {
    return std::pow(x[0] - 0.31, 2) + 3.0 * std::pow(x[1] - 0.62, 2);
  };
  PatternSearchOptions opts;
  opts.max_evaluations = 2000;
  const LocalResult r = pattern_search(f, Eigen::Vector2d(0.9, 0.1), Box::unit(2), opts);
  EXPECT_NEAR(r.x[0], 0.31, 1e-6);
  EXPECT_NEAR(r.x[1], 0.62, 1e-6);
  EXPECT_LE(r.evaluations, 2000);
}

TEST(PatternSearch, RespectsBudgetAndStartValue) {
  int calls = 0;
  const PlainObjective f = [&calls](const Eigen::VectorXd& x) {
    ++calls;
    return x.squaredNorm();
  };
  PatternSearchOptions opts;
  opts.max_evaluations = 7;
  const LocalResult r = pattern_search(f, Eigen::Vector2d(0.5, 0.5), Box::unit(2), opts, 0.5);
  EXPECT_EQ(calls, 7);
  EXPECT_EQ(r.evaluations, 7);
  EXPECT_LT(r.value, 0.5);
}

TEST(Box, ClampAndContains) {
  const Box b = Box::unit(2);
  EXPECT_EQ(b.clamp(Eigen::Vector2d(-1, 2)), Eigen::Vector2d(0, 1));
  EXPECT_TRUE(b.contains(Eigen::Vector2d(0, 1)));
  EXPECT_FALSE(b.contains(Eigen::Vector2d(0, 1.0000001)));
}
