#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nmfalpha/eval_harness.hpp"
#include "oracles.hpp"

using namespace nmfa;

namespace {

LabeledDataset two_class_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t d = 12;
  Dense x(d, n);
  std::vector<std::vector<int>> ids;
  for (std::size_t j = 0; j < n; ++j) {
    const int cls = j % 2 ? 1 : -1;
    ids.push_back({cls});
    for (std::size_t i = 0; i < d; ++i) x(i, j) = u(rng) + (cls > 0 && i < 3 ? 1.0 : 0.0);
  }
  LabeledDataset data;
  data.X = std::make_shared<const NonNegMatrix>(NonNegMatrix::from_dense(x));
  data.labels = Labels::from_ids(Task::binary, ids);
  for (std::size_t j = 0; j < n; ++j) {
    if (j < n / 2) data.splits.train_unlabeled.push_back(j);
    else if (j < 3 * n / 4) data.splits.validation.push_back(j);
    else data.splits.test.push_back(j);
  }
  return data;
}

SweepCell cell(std::size_t rank, double lambda, double C, double metric) {
  SweepCell c;
  c.rank = rank;
  c.lambda = lambda;
  c.C = C;
  c.mean.validation.primary = metric;
  return c;
}

}  // namespace

TEST(Metrics, AccuracyHandValues) {
  EXPECT_DOUBLE_EQ(accuracy({{0}, {1}, {1}, {2}}, {{0}, {1}, {0}, {2}}), 0.75);
  EXPECT_DOUBLE_EQ(accuracy({{0, 1}}, {{0}}), 0.0);
  EXPECT_DOUBLE_EQ(accuracy({}, {}), 0.0);
}

TEST(Metrics, FMeasuresHandExample) {
  // label 0: one hit; label 1: one miss; label 2: one false alarm.
  const FMeasures f = f_measures({{0}, {2}}, {{0}, {1}}, 3);
  EXPECT_NEAR(f.macro, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.micro, 0.5, 1e-15);
  EXPECT_NEAR(f.combined, 5.0 / 12.0, 1e-15);
  EXPECT_THROW(f_measures({}, {}, 0), ParameterError);
}

TEST(Metrics, FMeasuresPerfectPrediction) {
  const LabelSets sets{{0, 1}, {1}, {2}};
  const FMeasures f = f_measures(sets, sets, 3);
  EXPECT_DOUBLE_EQ(f.macro, 1.0);
  EXPECT_DOUBLE_EQ(f.micro, 1.0);
}

TEST(Splits, LabeledCountAndStratification) {
  LabeledDataset base;
  const std::size_t n = 5000;
  Dense x(2, n, 1.0);
  std::vector<std::vector<int>> ids;
  for (std::size_t j = 0; j < n; ++j) ids.push_back({static_cast<int>(j % 10 < 3 ? 0 : 1)});
  base.X = std::make_shared<const NonNegMatrix>(NonNegMatrix::from_dense(x));
  base.labels = Labels::from_ids(Task::multiway, ids);
  for (std::size_t j = 0; j < n; ++j) base.splits.train_unlabeled.push_back(j);
  const auto reps = make_splits(base, 0.02, 5, 3);
  ASSERT_EQ(reps.size(), 3u);
  for (const auto& r : reps) {
    EXPECT_EQ(r.splits.train_labeled.size(), 100u);
    EXPECT_EQ(r.splits.train_labeled.size() + r.splits.train_unlabeled.size(), n);
    std::size_t zeros = 0;
    for (std::size_t j : r.splits.train_labeled) zeros += r.labels.single(j) == 0;
    EXPECT_EQ(zeros, 30u);
    r.validate();
  }
  EXPECT_NE(reps[0].splits.train_labeled, reps[1].splits.train_labeled);
  EXPECT_EQ(make_splits(base, 0.02, 5, 1)[0].splits.train_labeled, reps[0].splits.train_labeled);
  EXPECT_EQ(make_splits(base, 1e-9, 5, 1)[0].splits.train_labeled.size(), 1u);
}

TEST(Splits, HoldoutSizes) {
  const Labels labels = Labels::from_ids(Task::binary, std::vector<std::vector<int>>{{1}, {-1}, {1}, {-1}, {1}, {-1}, {1}, {-1}, {1}, {-1}});
  const std::vector<std::size_t> pool{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto [kept, held] = stratified_holdout(labels, pool, 0.2, 3);
  EXPECT_EQ(held.size(), 2u);
  EXPECT_EQ(kept.size(), 8u);
  EXPECT_NE(labels.single(held[0]), labels.single(held[1]));
}

TEST(Splits, ValidateRejectsOverlap) {
  LabeledDataset d = two_class_dataset(20, 1);
  d.splits.test.push_back(0);
  EXPECT_THROW(d.validate(), Error);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::raw, Method::pca, Method::lda, Method::nmf, Method::nmf_alpha,
                   Method::ssnmf_lee, Method::cnmf_liu})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("svd"), ParameterError);
  EXPECT_TRUE(uses_lambda(Method::nmf_alpha));
  EXPECT_FALSE(uses_lambda(Method::nmf));
  EXPECT_FALSE(uses_rank(Method::raw));
}

TEST(Sweep, TieBreakPrefersSmallestRankLambdaC) {
  std::vector<SweepCell> cells{cell(32, 0.1, 1.0, 0.9), cell(16, 1.0, 1.0, 0.9),
                               cell(16, 0.1, 10.0, 0.9), cell(16, 0.1, 1.0, 0.9),
                               cell(8, 0.01, 0.01, 0.8)};
  EXPECT_EQ(select_cell(cells), 3u);
  cells[4].mean.validation.primary = 0.95;
  EXPECT_EQ(select_cell(cells), 4u);
}

TEST(Sweep, GridTruncation) {
  const SweepGrid g = SweepGrid{}.truncated(50, 40);
  EXPECT_EQ(g.ranks, (std::vector<std::size_t>{16, 32}));
  EXPECT_EQ(SweepGrid{}.truncated(10, 40).ranks, (std::vector<std::size_t>{10}));
}

TEST(Pipeline, ZeroLambdaMatchesPlainNmf) {
  const auto reps = make_splits(two_class_dataset(80, 2), 0.1, 3, 1);
  PipelineParams params;
  params.rank = 3;
  params.lambda = 0.0;
  params.fit.max_iterations = 50;
  const Representation a = reduce(reps[0], Method::nmf_alpha, params);
  const Representation b = reduce(reps[0], Method::nmf, params);
  ASSERT_EQ(a.loss_trace.size(), b.loss_trace.size());
  for (std::size_t t = 0; t < a.loss_trace.size(); ++t)
    EXPECT_NEAR(a.loss_trace[t], b.loss_trace[t], 1e-12 * b.loss_trace[t]);
  EXPECT_LT(oracle::max_relative_difference(std::get<Dense>(a.test), std::get<Dense>(b.test)), 1e-9);
}

TEST(Pipeline, TestColumnsDoNotInfluenceFit) {
  const auto reps = make_splits(two_class_dataset(80, 4), 0.1, 3, 1);
  LabeledDataset altered = reps[0];
  Dense x = altered.X->to_dense();
  for (std::size_t j : altered.splits.test)
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, j) = 7.0 * x(i, j) + 1.0;
  altered.X = std::make_shared<const NonNegMatrix>(NonNegMatrix::from_dense(x));
  // test labels flipped as well
  for (std::size_t j : altered.splits.test) altered.labels.sets[j] = {1 - altered.labels.single(j)};
  for (Method m : {Method::nmf, Method::nmf_alpha, Method::pca, Method::lda, Method::ssnmf_lee,
                   Method::cnmf_liu}) {
    PipelineParams params;
    params.rank = m == Method::lda ? 1 : 3;
    params.fit.max_iterations = 30;
    const Representation a = reduce(reps[0], m, params);
    const Representation b = reduce(altered, m, params);
    EXPECT_EQ(a.loss_trace, b.loss_trace) << method_name(m);
    EXPECT_EQ(std::get<Dense>(a.labeled), std::get<Dense>(b.labeled)) << method_name(m);
    EXPECT_EQ(std::get<Dense>(a.validation), std::get<Dense>(b.validation)) << method_name(m);
    const Evaluation ea = evaluate(reps[0], a, 1.0, {});
    const Evaluation eb = evaluate(altered, b, 1.0, {});
    EXPECT_EQ(ea.validation.primary, eb.validation.primary) << method_name(m);
  }
}

TEST(Pipeline, SeparableDataClassifiedWell) {
  const auto reps = make_splits(two_class_dataset(200, 6), 0.2, 1, 1);
  PipelineParams params;
  params.C = 10.0;
  const Evaluation raw = run_pipeline(reps[0], Method::raw, params);
  EXPECT_GT(raw.test.accuracy, 0.9);
}

TEST(Sweep, ReportsEveryCellAndRows) {
  const auto reps = make_splits(two_class_dataset(60, 8), 0.2, 2, 2);
  SweepGrid grid;
  grid.ranks = {2, 3};
  grid.lambdas = {0.1, 1.0};
  grid.Cs = {1.0, 10.0};
  PipelineParams params;
  params.fit.max_iterations = 20;
  const SweepResult res = sweep(reps, Method::nmf_alpha, grid, params);
  ASSERT_EQ(res.cells.size(), 8u);
  for (const auto& c : res.cells) EXPECT_EQ(c.runs.size(), 2u);
  const SweepResult again = sweep(reps, Method::nmf_alpha, grid, params);
  EXPECT_EQ(again.selected, res.selected);
  const std::string rows = metrics_rows(res, Task::binary);
  EXPECT_EQ(rows, metrics_rows(again, Task::binary));
  EXPECT_NE(rows.find("nmf_alpha,2,0.1,1,mean,validation,accuracy,"), std::string::npos);
  EXPECT_EQ(sweep(reps, Method::nmf, grid, params).cells.size(), 4u);
}
