#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nmfalpha/nmf_unsup.hpp"
#include "oracles.hpp"

using namespace nmfa;

TEST(InitFactors, DeterministicAndInRange) {
  const FactorPair a = init_factors(3, 4, 2, 42);
  const FactorPair b = init_factors(3, 4, 2, 42);
  EXPECT_EQ(a.V, b.V);
  EXPECT_EQ(a.H, b.H);
  EXPECT_EQ(a.V.rows(), 3u);
  EXPECT_EQ(a.V.cols(), 2u);
  EXPECT_EQ(a.H.rows(), 2u);
  EXPECT_EQ(a.H.cols(), 4u);
  for (double v : a.V.values()) EXPECT_TRUE(v > 0.1 && v < 1.1);
  for (double v : a.H.values()) EXPECT_TRUE(v > 0.1 && v < 1.1);
  const FactorPair c = init_factors(3, 4, 2, 43);
  EXPECT_NE(a.V, c.V);
  EXPECT_THROW(init_factors(0, 4, 2, 1), DimensionError);
  EXPECT_THROW(init_factors(3, 4, 0, 1), DimensionError);
}

TEST(UpdateUnsup, MatchesTextbookLoops) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const NonNegMatrix x = oracle::random_data(8, 11, rng);
    const FactorPair f = init_factors(8, 11, 3, trial);
    const FactorPair got = update_unsup(x, f.V, f.H, kernels::Exec::serial);
    const auto [v2, h2] = oracle::unsup_step(x.to_dense(), f.V, f.H);
    EXPECT_LT(oracle::max_relative_difference(got.V, v2), 1e-12);
    EXPECT_LT(oracle::max_relative_difference(got.H, h2), 1e-12);
    const FactorPair par = update_unsup(x, f.V, f.H, kernels::Exec::parallel);
    EXPECT_LT(oracle::max_relative_difference(par.V, v2), 1e-12);
    EXPECT_LT(oracle::max_relative_difference(par.H, h2), 1e-12);
  }
}

TEST(UpdateUnsup, FixedPointAtExactFactorization) {
  const oracle::Planted p = oracle::planted(6, 7, 2, 5);
  const FactorPair next = update_unsup(p.X, p.V, p.H);
  EXPECT_LT(oracle::max_relative_difference(next.V, p.V), 1e-12);
  EXPECT_LT(oracle::max_relative_difference(next.H, p.H), 1e-12);
}

TEST(UpdateUnsup, MonotoneOnRandomInstances) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> dim(2, 30), cols(2, 40), rank(1, 6);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t d = dim(rng), n = cols(rng), r = rank(rng);
    const NonNegMatrix x = oracle::random_data(d, n, rng, 0.4);
    FactorPair f = init_factors(d, n, r, rng());
    for (int step = 0; step < 3; ++step) {
      const double before = oracle::divergence(x.to_dense(), oracle::multiply(f.V, f.H));
      f = update_unsup(x, f.V, f.H);
      const double after = oracle::divergence(x.to_dense(), oracle::multiply(f.V, f.H));
      ASSERT_LE(after, before + 1e-9 * std::abs(before)) << "trial " << trial;
      for (double v : f.V.values()) ASSERT_GE(v, 0.0);
      for (double v : f.H.values()) ASSERT_GE(v, 0.0);
    }
  }
}

TEST(UpdateUnsup, StrictDecreaseOnRandomInstance) {
  std::mt19937_64 rng(4);
  const NonNegMatrix x = oracle::random_data(20, 30, rng);
  const FactorPair f = init_factors(20, 30, 5, 8);
  const FactorPair g = update_unsup(x, f.V, f.H);
  EXPECT_LT(unsup_loss(x, g.V, g.H), unsup_loss(x, f.V, f.H));
}

TEST(UpdateUnsup, ZeroRowsAndColumnsHandled) {
  Dense xd(4, 5, 1.0);
  for (std::size_t j = 0; j < 5; ++j) xd(2, j) = 0.0;
  for (std::size_t i = 0; i < 4; ++i) xd(i, 3) = 0.0;
  const NonNegMatrix x = NonNegMatrix::from_dense(xd);
  FactorPair f = init_factors(4, 5, 2, 1);
  for (int it = 0; it < 50; ++it) f = update_unsup(x, f.V, f.H);
  EXPECT_TRUE(all_finite(f.V));
  EXPECT_TRUE(all_finite(f.H));
}

TEST(UnsupLoss, MatchesDivergenceAndScaleGauge) {
  std::mt19937_64 rng(6);
  const NonNegMatrix x = oracle::random_data(9, 10, rng);
  const FactorPair f = init_factors(9, 10, 3, 2);
  const double loss = unsup_loss(x, f.V, f.H);
  EXPECT_NEAR(loss, oracle::divergence(x.to_dense(), oracle::multiply(f.V, f.H)), 1e-12 * loss);
  Dense v = f.V, h = f.H;
  for (double& e : v.values()) e *= 3.5;
  for (double& e : h.values()) e /= 3.5;
  EXPECT_NEAR(unsup_loss(x, v, h), loss, 1e-12 * loss);
}

TEST(Factorize, RankOneRecovery) {
  std::vector<double> u{1.0, 2.0, 0.5, 3.0}, w{0.7, 1.3, 2.0, 0.4, 1.1};
  Dense xd(4, 5);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) xd(i, j) = u[i] * w[j];
  FitOptions opts;
  opts.max_iterations = 200;
  opts.relative_tolerance = 0.0;
  const Factorization f = factorize(NonNegMatrix::from_dense(xd), 1, opts);
  EXPECT_LT(f.loss_trace.back(), 1e-8);
}

TEST(Factorize, PlantedRecovery) {
  const oracle::Planted p = oracle::planted(10, 15, 3, 21);
  FitOptions opts;
  opts.relative_tolerance = 0.0;
  const Factorization f = factorize(p.X, 3, opts);
  EXPECT_LT(f.loss_trace.back(), 1e-6);
  EXPECT_EQ(f.iterations_run, 500u);
}

TEST(Factorize, TraceNonincreasingAndDeterministic) {
  std::mt19937_64 rng(8);
  const NonNegMatrix x = oracle::random_data(15, 20, rng);
  FitOptions opts;
  opts.seed = 17;
  opts.max_iterations = 100;
  const Factorization a = factorize(x, 4, opts);
  const Factorization b = factorize(x, 4, opts);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.V, b.V);
  for (std::size_t t = 1; t < a.loss_trace.size(); ++t)
    EXPECT_LE(a.loss_trace[t], a.loss_trace[t - 1] + 1e-9 * a.loss_trace[t - 1]);
  EXPECT_EQ(a.loss_trace.size(), a.iterations_run + 1);
}

TEST(Factorize, SerialAndParallelAgree) {
  std::mt19937_64 rng(12);
  const NonNegMatrix x = oracle::random_data(25, 30, rng, 0.7);
  FitOptions opts;
  opts.max_iterations = 30;
  opts.exec = kernels::Exec::serial;
  const Factorization s = factorize(x, 4, opts);
  opts.exec = kernels::Exec::parallel;
  const Factorization p = factorize(x, 4, opts);
  EXPECT_LT(oracle::max_relative_difference(s.V, p.V), 1e-10);
  EXPECT_LT(oracle::max_relative_difference(s.H, p.H), 1e-10);
}

TEST(Factorize, StrideAndStopping) {
  std::mt19937_64 rng(3);
  const NonNegMatrix x = oracle::random_data(6, 8, rng);
  FitOptions opts;
  opts.max_iterations = 10;
  opts.relative_tolerance = 0.0;
  opts.loss_record_stride = 4;
  const Factorization f = factorize(x, 2, opts);
  // initial, it 4, it 8, final it 10
  EXPECT_EQ(f.loss_trace.size(), 4u);
  opts.relative_tolerance = 1e-2;
  opts.max_iterations = 500;
  opts.loss_record_stride = 1;
  EXPECT_LT(factorize(x, 2, opts).iterations_run, 500u);
}

TEST(Factorize, ParameterErrors) {
  std::mt19937_64 rng(3);
  const NonNegMatrix x = oracle::random_data(6, 8, rng);
  FitOptions opts;
  opts.max_iterations = 0;
  EXPECT_THROW(factorize(x, 2, opts), ParameterError);
  opts.max_iterations = 5;
  opts.relative_tolerance = -1.0;
  EXPECT_THROW(factorize(x, 2, opts), ParameterError);
  EXPECT_THROW(factorize(x, 0, FitOptions{}), DimensionError);
}

TEST(FoldIn, RecoversPlantedCoefficients) {
  const oracle::Planted p = oracle::planted(12, 6, 2, 4);
  const Dense h = fold_in(p.X, p.V, 2000, 3);
  EXPECT_LT(unsup_loss(p.X, p.V, h), 1e-8);
}
