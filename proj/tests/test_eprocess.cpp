#include "smcs/eprocess.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace smcs;

TEST(LambdaNext, FixedFraction) {
  EXPECT_DOUBLE_EQ(lambda_next(FixedFraction{0.5}, 2.0, 0.0), 0.25);
  EXPECT_DOUBLE_EQ(lambda_next(FixedFraction{0.5}, 0.0, 0.3), 0.0);
  EXPECT_THROW(lambda_next(FixedFraction{0.0}, 1.0, 0.0), DomainError);
  EXPECT_THROW(lambda_next(FixedFraction{0.5}, -1.0, 0.0), DomainError);
}

TEST(LambdaNext, Adaptive) {
  const CovidAdaptive a{0.5, 1e-6};
  EXPECT_NEAR(lambda_next(a, 1.0, 0.0), 1 / (3 + 1e-6), 1e-15);
  // With c = 0 only the safeguard remains.
  EXPECT_NEAR(lambda_next(a, 0.0, 5.0), 1e6, 1e-6);
  // K >= 1 keeps lambda * c <= 1 for every tau and last difference.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tau(0.01, 0.99), d(-50, 50), c(0.001, 20);
  for (int k = 0; k < 1000; ++k) {
    const double cc = c(rng);
    EXPECT_LE(lambda_next(CovidAdaptive{tau(rng), 1e-6}, cc, d(rng)) * cc, 1.0);
  }
}

TEST(StrongUpdate, ReferenceValues) {
  PairState<double> s;
  s = strong_update(s, 0.0, 1.0, 0.7);
  EXPECT_DOUBLE_EQ(s.log_e, 0.0);
  PairState<double> one;
  one = strong_update(one, 1.0, 2.0, 0.5);
  EXPECT_NEAR(std::exp(one.log_e), 1.5, 1e-15);
  PairState<double> rep;
  for (int t = 0; t < 40; ++t) rep = strong_update(rep, 1.0, 2.0, 0.25);
  EXPECT_NEAR(rep.log_e, 40 * std::log(1.25), 1e-12);
  EXPECT_EQ(rep.t, 40);
  EXPECT_DOUBLE_EQ(rep.last_d, 1.0);
}

TEST(StrongUpdate, BoundViolation) {
  PairState<double> s;
  EXPECT_THROW(strong_update(s, 0.6, 1.0, 0.5), BoundViolation);
  EXPECT_NO_THROW(strong_update(s, 0.5 + 1e-10, 1.0, 0.5));
  EXPECT_THROW(strong_update(s, 0.1, 0.0, 0.0), BoundViolation);
  EXPECT_THROW(strong_update(s, 0.1, 1.0, 1.5), DomainError);
}

TEST(StrongUpdate, ZeroBoundOnlyAdvancesTheClock) {
  PairState<double> s;
  s = strong_update(s, 0.0, 0.0, 0.0);
  EXPECT_EQ(s.t, 1);
  EXPECT_DOUBLE_EQ(s.log_e, 0.0);
}

TEST(StrongUpdate, EvalueStaysPositive) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  PairState<double> s;
  for (int t = 0; t < 5000; ++t) {
    s = strong_update(s, d(rng), 1.0, 1.0);
    EXPECT_TRUE(std::isfinite(s.log_e));
  }
}

TEST(PsiE, ReferenceValues) {
  EXPECT_DOUBLE_EQ(psi_e(1.0, 0.0), 0.0);
  EXPECT_NEAR(psi_e(2.0, 0.25), 0.0482867951, 1e-9);
  EXPECT_NEAR(psi_e(1.0, 0.5), 0.1931471806, 1e-9);
  EXPECT_THROW(psi_e(1.0, 1.0), DomainError);
  EXPECT_THROW(psi_e(0.0, 0.1), DomainError);
}

TEST(PsiE, ConvexIncreasing) {
  double prev = 0, prev_step = 0;
  for (int k = 1; k < 100; ++k) {
    const double v = psi_e(2.0, 0.005 * k);
    EXPECT_GT(v, prev);
    EXPECT_GE(v - prev, prev_step - 1e-15);
    prev_step = v - prev;
    prev = v;
  }
}

TEST(BernsteinUpdate, SingleStep) {
  PairState<double> s;
  s = bernstein_update(s, 0.5, 0.25, 2.0, GammaMode::zero);
  EXPECT_NEAR(s.log_e, 0.1129283, 1e-7);
  EXPECT_DOUBLE_EQ(s.v, 0.25);
  EXPECT_NEAR(supermartingale_at(s, 0.0, 0.25, 2.0), 1.119551, 1e-6);
}

TEST(BernsteinUpdate, ZeroStreamStaysAtOne) {
  PairState<double> s;
  for (int t = 0; t < 100; ++t) s = bernstein_update(s, 0.0, 0.25, 2.0, GammaMode::zero);
  EXPECT_DOUBLE_EQ(s.log_e, 0.0);
}

TEST(BernsteinUpdate, IncrementalEqualsBatch) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(-1, 1);
  for (auto mode : {GammaMode::zero, GammaMode::running_mean}) {
    PairState<double> s;
    double sum = 0, sq = 0, running = 0;
    for (int t = 0; t < 2000; ++t) {
      const double gamma = mode == GammaMode::zero ? 0.0 : std::clamp(t ? running / t : 0.0, -1.0, 1.0);
      const double x = d(rng);
      s = bernstein_update(s, x, 0.25, 2.0, mode);
      sum += x;
      running += x;
      sq += (x - gamma) * (x - gamma);
    }
    EXPECT_NEAR(s.log_e, 0.25 * sum - psi_e(2.0, 0.25) * sq, 1e-12 * std::max(1.0, std::abs(s.log_e)));
    EXPECT_NEAR(s.v, sq, 1e-9);
  }
}

TEST(BernsteinUpdate, VarianceNondecreasingAndGammaPredictable) {
  PairState<double> s;
  s = bernstein_update(s, 0.4, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(s.gamma, 0.4);  // used by the next round only
  const double v1 = s.v;
  s = bernstein_update(s, 0.5, 0.5, 1.0);
  EXPECT_GE(s.v, v1);
  EXPECT_NEAR(s.v, 0.16 + 0.01, 1e-15);
  EXPECT_THROW(bernstein_update(s, 0.51, 0.5, 1.0), BoundViolation);
}

TEST(Supermartingale, Shape) {
  PairState<double> s;
  for (double x : {0.3, -0.1, 0.2}) s = bernstein_update(s, x, 0.5, 1.0);
  const double psi = psi_e(1.0, 0.5);
  const double t = static_cast<double>(s.t);
  EXPECT_NEAR(supermartingale_at(s, s.sum_d / t - psi * s.v / (0.5 * t), 0.5, 1.0), 1.0, 1e-12);
  double prev = std::numeric_limits<double>::infinity();
  for (double x = -0.5; x <= 0.5; x += 0.01) {
    const double v = supermartingale_at(s, x, 0.5, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_EQ(supermartingale_at(s, 1e6, 0.5, 1.0), 0.0);
}

TEST(LowerConfBound, ReferenceValues) {
  PairState<double> s;
  s.t = 100;
  s.sum_d = 10;
  s.v = 25;
  EXPECT_NEAR(lower_conf_bound(s, 0.25, 2.0, 0.1), -0.040391, 1e-6);
  PairState<double> flat;
  flat.t = 10;
  EXPECT_NEAR(lower_conf_bound(flat, 0.25, 2.0, 1 - 1e-12), 0.0, 1e-10);
  double prev = -1;
  for (double a = 0.01; a < 1; a += 0.01) {
    const double v = lower_conf_bound(s, 0.25, 2.0, a);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_THROW(lower_conf_bound(PairState<double>{}, 0.25, 2.0, 0.1), StateError);
  s.sum_d = -100;
  EXPECT_DOUBLE_EQ(lower_conf_bound(s, 0.25, 2.0, 0.1), -1.0);
}

TEST(NoEvidence, KeepsTheEvalue) {
  PairState<double> s;
  s = bernstein_update(s, 0.3, 0.5, 1.0);
  const double before = s.log_e;
  s = no_evidence_update(s, 1.0);
  EXPECT_EQ(s.t, 2);
  EXPECT_DOUBLE_EQ(s.log_e, before);
}

TEST(Ville, NullRejectionRate) {
  // i.i.d. mean-zero differences: sup_t E_t >= 1/alpha in at most alpha + 3 SE.
  const int reps = 2000, horizon = 500;
  const double alpha = 0.1;
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  int strong_hits = 0, bern_hits = 0;
  for (int r = 0; r < reps; ++r) {
    PairState<double> a, b;
    bool ha = false, hb = false;
    for (int t = 0; t < horizon; ++t) {
      const double x = d(rng);
      a = strong_update(a, x, 1.0, 0.5);
      b = bernstein_update(b, x, 0.5, 1.0);
      ha = ha || a.log_e >= std::log(1 / alpha);
      hb = hb || b.log_e >= std::log(1 / alpha);
    }
    strong_hits += ha;
    bern_hits += hb;
  }
  const double limit = alpha + 3 * std::sqrt(alpha * (1 - alpha) / reps);
  EXPECT_LE(strong_hits / double(reps), limit);
  EXPECT_LE(bern_hits / double(reps), limit);
}

TEST(Ville, SupermartingaleAtTheTrueMean) {
  // Differences with mean 0.05: M_t(0.05) crosses 1/alpha in at most alpha + 3 SE.
  const int reps = 2000, horizon = 300;
  const double alpha = 0.1;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-0.4, 0.5);
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    PairState<double> s;
    bool hit = false;
    for (int t = 0; t < horizon && !hit; ++t) {
      s = bernstein_update(s, d(rng), 0.5, 1.0);
      hit = log_supermartingale_at(s, 0.05, 0.5, 1.0) >= std::log(1 / alpha);
    }
    hits += hit;
  }
  EXPECT_LE(hits / double(reps), alpha + 3 * std::sqrt(alpha * (1 - alpha) / reps));
}
