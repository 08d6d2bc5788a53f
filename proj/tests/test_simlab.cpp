#include "smcs/scoring.hpp"
#include "smcs/simlab.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace smcs;

namespace {

const std::vector<double> kFullGrid{-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6};

}

TEST(ExpectedCrps, IdealForecaster) {
  // E|Z - Z'| / 2 for independent standard normals.
  EXPECT_NEAR(expected_crps(0.0, 0.0), 1 / std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_THROW(expected_crps(0.0, -1.0), DomainError);
}

TEST(ExpectedCrps, ProprietyOnTheGrid) {
  const double best = expected_crps(0.0, 0.0);
  for (double e : kFullGrid)
    for (double d : kFullGrid)
      if (e != 0 || d != 0) {
        EXPECT_GT(expected_crps(e, d), best) << e << "," << d;
      }
}

TEST(ExpectedCrps, MonteCarloSpotCheck) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> z;
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int k = 0; k < n; ++k) {
    const double l = crps_normal(0.3, 1.3, z(rng));
    sum += l;
    sq += l * l;
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(expected_crps(0.3, 0.3), mean, 3 * se);
}

TEST(Sim3, OracleSwitchTimes) {
  const auto o = sim3_oracle(800, Sim3Params{});
  const Membership third{false, false, true}, first{true, false, false}, second{false, true, false};
  for (std::size_t t = 1; t <= 800; ++t) {
    const auto& set = o[t - 1];
    if (t <= 153)
      EXPECT_EQ(set, third) << t;
    else if (t < 550)
      EXPECT_EQ(set, first) << t;
    else
      EXPECT_EQ(set, second) << t;
  }
}

TEST(Sim3, OracleIsASingleton) {
  for (const auto& set : sim3_oracle(800, Sim3Params{})) EXPECT_EQ(count(set), 1u);
  // A steep drift makes the third model worst from t = 2 on.
  const auto o = sim3_oracle(10, Sim3Params{0.6, 0.998, 5.0});
  EXPECT_FALSE(o[1][2]);
}

TEST(Sim3, Biases) {
  const Sim3Params p;
  double prev = 1;
  for (std::int64_t t = 1; t <= 100; ++t) {
    const auto b = sim3_biases(p, t);
    EXPECT_DOUBLE_EQ(b[0], 0.6);
    EXPECT_LT(b[1], prev);
    EXPECT_NEAR(b[1], std::pow(0.998, static_cast<double>(t)), 1e-15);
    EXPECT_NEAR(b[2], 0.008 * static_cast<double>(t), 1e-15);
    prev = b[1];
  }
}

TEST(Sim3, LossesAreMedianScores) {
  const auto s = gen_sim3(5, 50, Sim3Params{});
  for (std::size_t r = 0; r < 50; ++r)
    for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(s.losses(static_cast<Eigen::Index>(r), i)), 0.5);
  EXPECT_EQ(s.fixed_bound(0, 1), 1.0);
}

TEST(Generators, SeedsReproduce) {
  EXPECT_EQ(gen_sim1(9, 50, {-0.4, 0, 0.4}).losses, gen_sim1(9, 50, {-0.4, 0, 0.4}).losses);
  EXPECT_EQ(gen_sim2(9, 50, {-0.4, 0, 0.4}).losses, gen_sim2(9, 50, {-0.4, 0, 0.4}).losses);
  EXPECT_EQ(gen_sim3(9, 50, Sim3Params{}).losses, gen_sim3(9, 50, Sim3Params{}).losses);
  EXPECT_NE(gen_sim1(9, 50, {-0.4, 0, 0.4}).losses, gen_sim1(10, 50, {-0.4, 0, 0.4}).losses);
  EXPECT_NE(replication_seed(1, 0), replication_seed(1, 1));
}

TEST(Generators, Sim2PerturbsTheIdealForecasterOnSundays) {
  const std::vector<double> grid{-0.4, 0, 0.4};
  const auto a = gen_sim1(3, 70, grid), b = gen_sim2(3, 70, grid);
  const Eigen::Index i0 = 4;
  for (Eigen::Index r = 0; r < 70; ++r) {
    const bool sunday = (r + 1) % 7 == 0;
    for (Eigen::Index i = 0; i < 9; ++i) {
      if (i == i0 && sunday)
        EXPECT_NE(a.losses(r, i), b.losses(r, i));
      else
        EXPECT_EQ(a.losses(r, i), b.losses(r, i));
    }
    if (sunday) {
      EXPECT_NE(b.bounds[static_cast<std::size_t>(r)](i0, 0), a.fixed_bound(i0, 0));
    } else {
      EXPECT_EQ(b.bounds[static_cast<std::size_t>(r)], a.fixed_bound);
    }
  }
}

TEST(Generators, Sim2SundayRowUsesShiftedParameters) {
  const std::vector<double> grid{-0.4, 0, 0.4};
  const auto a = gen_sim1(21, 7, grid), b = gen_sim2(21, 7, grid);
  // The ideal loss is increasing in |z|; recover |z| by bisection and try both signs.
  const double ideal = a.losses(6, 4);
  double lo = 0, hi = 40;
  for (int k = 0; k < 200; ++k) {
    const double mid = (lo + hi) / 2;
    (crps_normal(0.0, 1.0, mid) < ideal ? lo : hi) = mid;
  }
  const double z = (lo + hi) / 2;
  const double shifted = b.losses(6, 4);
  EXPECT_NEAR(std::min(std::abs(crps_normal(0.3, 1.3, z) - shifted), std::abs(crps_normal(0.3, 1.3, -z) - shifted)), 0.0, 1e-9);
}

TEST(Oracles, Sim1IdealIsStronglySuperior) {
  auto cfg = default_sim_config(SimVariant::sim1);
  cfg.n = 50;
  for (const auto& set : oracle_sets(cfg, Hypothesis::strong, false)) {
    EXPECT_EQ(count(set), 1u);
    EXPECT_TRUE(set[ideal_index(cfg)]);
  }
}

TEST(Oracles, Sim2StrongSetEmptiesOnTheFirstSunday) {
  auto cfg = default_sim_config(SimVariant::sim2);
  cfg.n = 30;
  const auto strong = oracle_sets(cfg, Hypothesis::strong, true);
  for (std::size_t t = 1; t <= 30; ++t) {
    if (t < 7)
      EXPECT_EQ(count(strong[t - 1]), 1u);
    else
      EXPECT_EQ(count(strong[t - 1]), 0u);
  }
  const auto uw = oracle_sets(cfg, Hypothesis::uniformly_weak, true);
  for (const auto& set : uw) EXPECT_TRUE(set[ideal_index(cfg)]);
}

TEST(Sim2OracleCheck, DeskAndFullGrid) {
  const auto desk = sim2_oracle_check(500, {-0.4, 0, 0.4});
  EXPECT_TRUE(desk.raw);
  EXPECT_TRUE(desk.transformed);
  const auto full = sim2_oracle_check(1000, kFullGrid);
  EXPECT_TRUE(full.holds());
  // On the loss scale the 0 +- 0.2 dispersion competitors win the first Sunday.
  EXPECT_FALSE(full.raw);
  EXPECT_EQ(full.raw_time, 7);
}

TEST(Sim2OracleCheck, SundayTermsAgainstSingleCompetitors) {
  // (0.2, 0.2) beats the shifted forecaster on Sundays, (0.6, 0.6) never does.
  EXPECT_GT(expected_crps(0.3, 0.3) - expected_crps(0.2, 0.2), 0.0);
  EXPECT_LT(expected_crps(0.3, 0.3) - expected_crps(0.6, 0.6), 0.0);
  EXPECT_LT(6 * (expected_crps(0, 0) - expected_crps(0.2, 0.2)) + expected_crps(0.3, 0.3) - expected_crps(0.2, 0.2), 0.0);
}

TEST(Sim1, BoundsAreConstantAndValid) {
  const auto s = gen_sim1(4, 200, {-0.4, 0, 0.4});
  EXPECT_FALSE(s.per_round_bounds());
  for (Eigen::Index r = 0; r < 200; ++r)
    for (Eigen::Index i = 0; i < 9; ++i)
      for (Eigen::Index j = 0; j < 9; ++j)
        EXPECT_LE(std::abs(s.losses(r, i) - s.losses(r, j)), s.fixed_bound(i, j) / 2 + 1e-9);
}

TEST(Sim1, IdealHasTheSmallestMeanLoss) {
  const auto s = gen_sim1(8, 1000, kFullGrid);
  const Vector<double> mean = s.losses.colwise().mean();
  const Eigen::Index i0 = 24;
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    if (i != i0) {
      EXPECT_LT(mean[i0], mean[i]) << s.models[static_cast<std::size_t>(i)];
    }
}

TEST(Replications, ZeroRounds) {
  auto cfg = default_sim_config(SimVariant::sim1);
  cfg.n = 0;
  cfg.replications = 3;
  const auto s = run_replications(cfg);
  ASSERT_EQ(s.mean_size.size(), 1u);
  EXPECT_DOUBLE_EQ(s.mean_size[0], 9.0);
  EXPECT_DOUBLE_EQ(s.coverage, 1.0);
}

TEST(Replications, ThreadCountDoesNotChangeResults) {
  auto cfg = default_sim_config(SimVariant::sim3);
  cfg.n = 300;
  cfg.replications = 12;
  cfg.threads = 1;
  const auto a = run_replications(cfg);
  cfg.threads = 3;
  const auto b = run_replications(cfg);
  EXPECT_EQ(a.mean_size, b.mean_size);
  EXPECT_EQ(a.coverage, b.coverage);
  EXPECT_EQ(a.with_reinclusion, b.with_reinclusion);
}

TEST(Replications, ConfigValidation) {
  auto cfg = default_sim_config(SimVariant::sim1);
  cfg.grid = {-0.4, 0.4};
  EXPECT_THROW(run_replications(cfg), ConfigError);
  auto s3 = default_sim_config(SimVariant::sim3);
  s3.sim3.gamma = 1.0;
  EXPECT_THROW(run_replications(s3), ConfigError);
}
