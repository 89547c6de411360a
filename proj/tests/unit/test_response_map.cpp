#include <random>

#include <gtest/gtest.h>

#include "bilbao/errors.hpp"
#include "bilbao/response_map.hpp"
#include "bilbao/sobol.hpp"
#include "oracles.hpp"

using namespace bilbao;

namespace {

GPModel quadratic_lower_model() {
  RngStream s(21, 0);
  const Eigen::MatrixXd X = sobol_points(2, 200, s);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = -(X(i, 1) - 0.5) * (X(i, 1) - 0.5);
  return fit(Dataset(X, y), KernelFamily::Matern52, 3);
}

GPModel wavy_model(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset data(oracle::uniform_points(15, d, rng), Eigen::VectorXd(15));
  for (int i = 0; i < 15; ++i)
    data.values[i] = std::sin(6.0 * data.points(i, 0)) + std::cos(5.0 * data.points.row(i).sum());
  return GPModel::with_hyperparameters(data, KernelConfig::isotropic(KernelFamily::Matern52, d, 0.3),
                                       1e-3);
}

Eigen::MatrixXd grid_1d(int n) {
  Eigen::MatrixXd g(n, 1);
  for (int i = 0; i < n; ++i) g(i, 0) = (i + 0.5) / n;
  return g;
}

}  // namespace

TEST(EstimatePhi, FlatMeanGivesFeasiblePoint) {
  Dataset data(2);
  data.add(Eigen::Vector2d(0.2, 0.4), 1.0);
  data.add(Eigen::Vector2d(0.7, 0.9), 1.0);
  const GPModel gp = GPModel::with_hyperparameters(
      data, KernelConfig::isotropic(KernelFamily::Matern52, 2, 0.5, 1.0, 0.0), 1e-4);
  const Eigen::VectorXd phi = estimate_phi(gp, Eigen::VectorXd::Constant(1, 0.5));
  ASSERT_EQ(phi.size(), 1);
  EXPECT_GE(phi[0], 0.0);
  EXPECT_LE(phi[0], 1.0);
}

TEST(EstimatePhi, RecoversQuadraticResponse) {
  const GPModel gp = quadratic_lower_model();
  for (double x_u : {0.1, 0.5, 0.9})
    EXPECT_NEAR(estimate_phi(gp, Eigen::VectorXd::Constant(1, x_u))[0], 0.5, 1e-2) << x_u;
}

TEST(EstimatePhi, BeatsRandomSliceProbes) {
  const GPModel gp = wavy_model(3, 22);
  std::mt19937_64 rng(23);
  for (double x_u : {0.15, 0.6}) {
    const Eigen::VectorXd xu = Eigen::VectorXd::Constant(1, x_u);
    const Eigen::VectorXd phi = estimate_phi(gp, xu);
    ASSERT_EQ(phi.size(), 2);
    EXPECT_TRUE((phi.array() >= 0.0).all() && (phi.array() <= 1.0).all());
    Eigen::VectorXd joint(3);
    joint << x_u, phi;
    const double at_phi = gp.mean(joint);
    const Eigen::MatrixXd probes = oracle::uniform_points(100, 2, rng);
    for (int i = 0; i < 100; ++i) {
      joint << x_u, probes.row(i).transpose();
      EXPECT_GE(at_phi, gp.mean(joint) - 1e-6);
    }
  }
}

TEST(BuildMap, DeterministicAndConsistent) {
  const GPModel gp = wavy_model(2, 24);
  const Eigen::MatrixXd grid = grid_1d(12);
  const ResponseMap a = build_map(gp, grid);
  const ResponseMap b = build_map(gp, grid);
  EXPECT_EQ(a.responses, b.responses);
  EXPECT_EQ(a.values, b.values);
  ASSERT_EQ(a.size(), 12);
  const Eigen::MatrixXd joint = a.joint_points();
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_EQ(joint(i, 0), grid(i, 0));
    EXPECT_EQ(joint(i, 1), a.responses(i, 0));
    EXPECT_NEAR(a.values[i], gp.mean(joint.row(i).transpose()), 1e-12);
    EXPECT_EQ(a.responses.row(i), estimate_phi(gp, grid.row(i).transpose()).transpose());
  }
}

TEST(Recommend, MatchesDenseArgmaxOfUpperMean) {
  const GPModel gp_l = wavy_model(2, 25);
  const GPModel gp_u = wavy_model(2, 26);
  const ResponseMap map = build_map(gp_l, grid_1d(20));
  const MapSelection rec = recommend(gp_u, map);
  const Eigen::MatrixXd joint = map.joint_points();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < joint.rows(); ++i)
    if (oracle::DenseGP(gp_u).mean(joint.row(i).transpose()) >
        oracle::DenseGP(gp_u).mean(joint.row(best).transpose()))
      best = i;
  EXPECT_EQ(rec.index, static_cast<std::size_t>(best));
  EXPECT_EQ(rec.upper, Eigen::VectorXd(map.upper_grid.row(best).transpose()));
}

TEST(Recommend, SingletonMap) {
  const GPModel gp_l = wavy_model(2, 27);
  const GPModel gp_u = wavy_model(2, 28);
  const ResponseMap map = build_map(gp_l, Eigen::MatrixXd::Constant(1, 1, 0.4));
  EXPECT_EQ(recommend(gp_u, map).index, 0u);
  RngStream s(1, 0);
  EXPECT_EQ(restricted_ts_argmax(gp_u, map, s).index, 0u);
}

TEST(InterestSet, SizeWeightsAndDeterminism) {
  const GPModel gp_l = wavy_model(2, 29);
  const GPModel gp_u = wavy_model(2, 30);
  const ResponseMap map = build_map(gp_l, grid_1d(16));
  RngStream s(2, 0);
  const InterestSet one = sample_interest_set(gp_u, map, 1, s);
  EXPECT_EQ(one.size(), 1);
  EXPECT_EQ(one.weights[0], 1.0);

  RngStream a(3, 0), b(3, 0);
  const InterestSet ten = sample_interest_set(gp_u, map, 10, a);
  EXPECT_EQ(ten.size(), 10);
  EXPECT_NEAR(ten.weights.sum(), 1.0, 1e-12);
  EXPECT_TRUE((ten.weights.array() == 0.1).all());
  EXPECT_EQ(ten.upper_points, sample_interest_set(gp_u, map, 10, b).upper_points);
  for (int i = 0; i < ten.size(); ++i) {
    bool on_grid = false;
    for (int j = 0; j < map.size(); ++j) on_grid |= map.upper_grid.row(j) == ten.upper_points.row(i);
    EXPECT_TRUE(on_grid);
  }
  EXPECT_THROW(sample_interest_set(gp_u, map, 0, a), ConfigError);
}
