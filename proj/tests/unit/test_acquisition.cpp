#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bilbao/acquisition.hpp"
#include "bilbao/errors.hpp"
#include "bilbao/sobol.hpp"
#include "oracles.hpp"

using namespace bilbao;

TEST(ExpectedImprovement, ZeroStdIsPositivePart) {
  EXPECT_EQ(expected_improvement(2.0, 0.0, 1.5), 0.5);
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.5), 0.0);
}

TEST(ExpectedImprovement, MatchesQuadrature) {
  EXPECT_NEAR(expected_improvement(0.0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-12);
  for (double mean : {-1.0, 0.3, 2.0})
    for (double std : {0.1, 1.0, 3.0})
      for (double inc : {-0.5, 0.0, 1.7})
        EXPECT_NEAR(expected_improvement(mean, std, inc), oracle::quadrature_ei(mean, std, inc), 1e-6);
}

TEST(ExpectedImprovement, FarBelowIncumbentIsTiny) {
  const double ei = expected_improvement(0.0, 1.0, 10.0);
  EXPECT_GE(ei, 0.0);
  EXPECT_LT(ei, 1e-20);
}

TEST(ExpectedMaxGain, ZeroSlopesAndSingletonGiveZero) {
  EXPECT_EQ(expected_max_gain(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d::Zero()), 0.0);
  EXPECT_EQ(expected_max_gain(Eigen::VectorXd::Constant(1, 4.0), Eigen::VectorXd::Constant(1, 2.5)),
            0.0);
}

TEST(ExpectedMaxGain, TwoLinesClosedForm) {
  // E[max(0, Z)] = phi(0)
  EXPECT_NEAR(expected_max_gain(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 1)),
              1.0 / std::sqrt(2.0 * M_PI), 1e-14);
}

TEST(ExpectedMaxGain, MatchesMonteCarlo) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    const int m = 2 + trial * 2;
    Eigen::VectorXd a(m), b(m);
    for (int i = 0; i < m; ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    const double exact = expected_max_gain(a, b);
    const oracle::McEstimate mc = oracle::mc_max_gain(a, b, 1000000, rng);
    EXPECT_NEAR(exact, mc.mean, 3.0 * mc.std_error) << "m=" << m;
    EXPECT_GE(exact, 0.0);
  }
}

TEST(ExpectedMaxGain, NonnegativeOnRandomInstances) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + trial % 12;
    Eigen::VectorXd a(m), b(m);
    for (int i = 0; i < m; ++i) {
      a[i] = 5.0 * normal(rng);
      b[i] = trial % 3 == 0 ? 1.0 : normal(rng);
    }
    EXPECT_GE(expected_max_gain(a, b), 0.0);
  }
}

namespace {

GPModel joint_model(std::mt19937_64& rng, int n = 12) {
  Dataset data(oracle::uniform_points(n, 2, rng), Eigen::VectorXd(n));
  for (int i = 0; i < n; ++i)
    data.values[i] = std::sin(5.0 * data.points(i, 0)) * std::cos(4.0 * data.points(i, 1));
  KernelConfig k;
  k.lengthscales = Eigen::Vector2d(0.3, 0.25);
  return GPModel::with_hyperparameters(data, k, 1e-3);
}

SliceDiscretization lower_disc(int m) {
  RngStream s(99, 0);
  return {sobol_points(1, m, s)};
}

}  // namespace

TEST(KnowledgeGradient, FixedTaskMatchesFantasyEnvelope) {
  std::mt19937_64 rng(13);
  const GPModel gp = joint_model(rng);
  const SliceDiscretization disc = lower_disc(8);
  const Eigen::VectorXd x_u = Eigen::VectorXd::Constant(1, 0.4);
  Eigen::MatrixXd slice(8, 2);
  slice.col(0).setConstant(0.4);
  slice.col(1) = disc.lower_points.col(0);
  const Eigen::Vector2d cand(0.45, 0.6);
  const FantasyCoefficients fc = fantasy_coefficients(gp, slice, cand);
  EXPECT_NEAR(kg_fixed_task(gp, x_u, cand, disc).value, expected_max_gain(fc.mean, fc.sigma_tilde),
              1e-12);
}

TEST(KnowledgeGradient, MatchesMonteCarloOfRefitMaximum) {
  std::mt19937_64 rng(14);
  const GPModel gp = joint_model(rng, 6);
  const SliceDiscretization disc = lower_disc(5);
  const Eigen::VectorXd x_u = Eigen::VectorXd::Constant(1, 0.7);
  const Eigen::Vector2d cand(0.65, 0.3);
  const double kg = kg_fixed_task(gp, x_u, cand, disc).value;

  Eigen::MatrixXd slice(5, 2);
  slice.col(0).setConstant(0.7);
  slice.col(1) = disc.lower_points.col(0);
  const double now = gp.means(slice).maxCoeff();
  const Prediction pc = gp.posterior(cand);
  std::normal_distribution<double> normal;
  const int draws = 20000;
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < draws; ++s) {
    Dataset next = gp.dataset();
    next.add(cand, pc.mean + std::sqrt(pc.variance + gp.raw_noise()) * normal(rng));
    const GPModel refit = GPModel::with_hyperparameters(next, gp.kernel(), gp.noise(), gp.standardization());
    const double gain = refit.means(slice).maxCoeff() - now;
    sum += gain;
    sq += gain * gain;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  EXPECT_NEAR(kg, mean, 3.0 * se + 1e-12);
}

TEST(Revi, SingleInterestPointEqualsKg) {
  std::mt19937_64 rng(15);
  const GPModel gp = joint_model(rng);
  const SliceDiscretization disc = lower_disc(16);
  const Eigen::VectorXd x_u = Eigen::VectorXd::Constant(1, 0.25);
  const InterestSet one = InterestSet::uniform(Eigen::MatrixXd::Constant(1, 1, 0.25));
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd cand = oracle::uniform_points(1, 2, rng).row(0).transpose();
    EXPECT_NEAR(revi(gp, cand, one, disc), kg_fixed_task(gp, x_u, cand, disc).value, 1e-12);
  }
}

TEST(Revi, UniformWeightsAverageKg) {
  std::mt19937_64 rng(16);
  const GPModel gp = joint_model(rng);
  const SliceDiscretization disc = lower_disc(16);
  Eigen::MatrixXd pts(3, 1);
  pts << 0.1, 0.5, 0.8;
  const InterestSet three = InterestSet::uniform(pts);
  const Eigen::Vector2d cand(0.45, 0.55);
  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    expected += kg_fixed_task(gp, pts.row(i).transpose(), cand, disc).value / 3.0;
  EXPECT_NEAR(revi(gp, cand, three, disc), expected, 1e-12);

  Eigen::MatrixXd dup(3, 1);
  dup << 0.1, 0.1, 0.8;
  const double merged = (2.0 * kg_fixed_task(gp, dup.row(0).transpose(), cand, disc).value +
                         kg_fixed_task(gp, dup.row(2).transpose(), cand, disc).value) / 3.0;
  EXPECT_NEAR(revi(gp, cand, InterestSet::uniform(dup), disc), merged, 1e-12);
}

TEST(Revi, EvaluatorAgreesWithFreeFunction) {
  std::mt19937_64 rng(17);
  const GPModel gp = joint_model(rng);
  const SliceDiscretization disc = lower_disc(12);
  const InterestSet interest = InterestSet::uniform(oracle::uniform_points(4, 1, rng));
  const ReviEvaluator eval(gp, interest, disc);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd cand = oracle::uniform_points(1, 2, rng).row(0).transpose();
    EXPECT_NEAR(eval(cand).value, revi(gp, cand, interest, disc), 1e-12);
  }
}

TEST(Revi, InterestSetValidation) {
  InterestSet bad{Eigen::MatrixXd::Constant(2, 1, 0.5), Eigen::Vector2d(0.7, 0.7)};
  EXPECT_THROW(bad.validate(), DataError);
  EXPECT_THROW(InterestSet::uniform(Eigen::MatrixXd(0, 1)).validate(), DataError);
}

TEST(MaximizeRevi, PicksBetterOfTwoCandidates) {
  std::mt19937_64 rng(18);
  const GPModel gp = joint_model(rng);
  const SliceDiscretization disc = lower_disc(16);
  const InterestSet interest = InterestSet::uniform(Eigen::MatrixXd::Constant(1, 1, 0.6));
  ReviSearchOptions opts;
  opts.refine_evaluations = 0;
  opts.lower_augment = 0;
  RngStream s(1, 0);
  const Eigen::VectorXd best = maximize_revi(gp, interest, disc, 2, s, opts);
  RngStream replay(1, 0);
  const Eigen::MatrixXd cand = sobol_points(2, 2, replay);
  const double v0 = revi(gp, cand.row(0).transpose(), interest, disc);
  const double v1 = revi(gp, cand.row(1).transpose(), interest, disc);
  EXPECT_EQ(best, Eigen::VectorXd(cand.row(v1 > v0 ? 1 : 0).transpose()));
}

TEST(MaximizeRevi, StaysInBoxAndBeatsDenseSweep) {
  std::mt19937_64 rng(19);
  const GPModel gp = joint_model(rng);
  const SliceDiscretization disc = lower_disc(32);
  const InterestSet interest = InterestSet::uniform(oracle::uniform_points(3, 1, rng));
  RngStream s(2, 0);
  const Eigen::VectorXd best = maximize_revi(gp, interest, disc, 256, s);
  EXPECT_TRUE((best.array() >= 0.0).all() && (best.array() <= 1.0).all());
  RngStream sweep_stream(3, 0);
  const Eigen::MatrixXd sweep = sobol_points(2, 4096, sweep_stream);
  const ReviEvaluator eval(gp, interest, disc);
  double sweep_max = 0.0;
  for (Eigen::Index i = 0; i < sweep.rows(); ++i)
    sweep_max = std::max(sweep_max, eval(sweep.row(i).transpose()).value);
  EXPECT_GE(eval(best).value, sweep_max - 1e-6);
}

TEST(Revits, SingletonAndDeterminism) {
  std::mt19937_64 rng(20);
  const GPModel gp = joint_model(rng);
  const InterestSet one = InterestSet::uniform(Eigen::MatrixXd::Constant(1, 1, 0.4));
  const SliceDiscretization single{Eigen::MatrixXd::Constant(1, 1, 0.7)};
  RngStream s(4, 0);
  EXPECT_EQ(revits_select(gp, one, single, s), Eigen::VectorXd(Eigen::Vector2d(0.4, 0.7)));

  const SliceDiscretization disc = lower_disc(20);
  const InterestSet interest = InterestSet::uniform(oracle::uniform_points(3, 1, rng));
  RngStream a(5, 0), b(5, 0);
  EXPECT_EQ(revits_select(gp, interest, disc, a), revits_select(gp, interest, disc, b));
}

TEST(Revits, DominantCandidateWins) {
  Dataset data(2);
  data.add(Eigen::Vector2d(0.2, 0.2), 0.0);
  data.add(Eigen::Vector2d(0.2, 0.8), 10.0);
  data.add(Eigen::Vector2d(0.8, 0.2), 0.0);
  data.add(Eigen::Vector2d(0.8, 0.8), 0.0);
  const GPModel gp = GPModel::with_hyperparameters(data, KernelConfig::isotropic(KernelFamily::Matern52, 2, 0.1),
                                                   1e-4);
  Eigen::MatrixXd pts(2, 1);
  pts << 0.2, 0.8;
  const InterestSet interest = InterestSet::uniform(pts);
  Eigen::MatrixXd lower(2, 1);
  lower << 0.2, 0.8;
  const SliceDiscretization disc{lower};
  RngStream s(6, 0);
  int wins = 0;
  for (int i = 0; i < 1000; ++i)
    wins += revits_select(gp, interest, disc, s) == Eigen::VectorXd(Eigen::Vector2d(0.2, 0.8));
  EXPECT_GE(wins, 990);
}

TEST(MaximizeEi, ImprovesOnIncumbentRegion) {
  Dataset data(1);
  for (double x : {0.1, 0.3, 0.5, 0.9}) data.add(Eigen::VectorXd::Constant(1, x), -(x - 0.7) * (x - 0.7));
  const GPModel gp = GPModel::with_hyperparameters(data, KernelConfig::isotropic(KernelFamily::Matern52, 1, 0.3),
                                                   1e-4);
  RngStream s(7, 0);
  const Eigen::VectorXd x = maximize_expected_improvement(gp, data.values.maxCoeff(), 64, s);
  double best = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const Prediction p = gp.posterior(Eigen::VectorXd::Constant(1, i / 4000.0));
    best = std::max(best, expected_improvement(p.mean, std::sqrt(p.variance), data.values.maxCoeff()));
  }
  const Prediction px = gp.posterior(x);
  EXPECT_GE(expected_improvement(px.mean, std::sqrt(px.variance), data.values.maxCoeff()), best - 1e-6);
}
