#ifndef NMFALPHA_EVAL_HARNESS_HPP_
#define NMFALPHA_EVAL_HARNESS_HPP_

// Reduce-then-classify experiments: label masks, metrics, and validation
// driven sweeps over (rank, lambda, C).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nmfalpha/classifiers.hpp"
#include "nmfalpha/matrix.hpp"
#include "nmfalpha/nmf_unsup.hpp"

namespace nmfa {

/// Disjoint column index lists, each sorted.
struct Splits {
  std::vector<std::size_t> train_labeled;
  std::vector<std::size_t> train_unlabeled;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  /// train_labeled and train_unlabeled merged in column order.
  std::vector<std::size_t> training() const;
};

/// Every column carries its label in memory; the split masks decide which
/// labels a pipeline may look at.
struct LabeledDataset {
  std::shared_ptr<const NonNegMatrix> X;
  Labels labels;
  Splits splits;

  /// Throws on overlapping masks, out-of-range indices or a label count that
  /// differs from the column count.
  void validate() const;
};

/// `num_repeats` copies of `base` that differ only in which training columns
/// are labeled. Labeled columns are drawn per stratum (class, or label set
/// for multilabel) with largest-remainder quotas, m = round(fraction * n_train)
/// and at least one. Validation and test masks are copied unchanged.
std::vector<LabeledDataset> make_splits(const LabeledDataset& base, double labeled_fraction,
                                        std::uint64_t seed, std::size_t num_repeats);

/// Stratified partition of `pool` into (kept, held) with |held| =
/// round(fraction * |pool|). Both parts sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Labels& labels, std::span<const std::size_t> pool, double fraction,
    std::uint64_t seed);

using LabelSets = std::vector<std::vector<std::size_t>>;

/// Fraction of examples whose predicted set equals the true set.
double accuracy(const LabelSets& predicted, const LabelSets& truth);

struct FMeasures {
  double macro = 0.0;
  double micro = 0.0;
  double combined = 0.0;
};

/// Labels with no true and no predicted example contribute F1 = 0 to the
/// macro average.
FMeasures f_measures(const LabelSets& predicted, const LabelSets& truth, std::size_t num_labels);

enum class Method { raw, pca, lda, nmf, nmf_alpha, ssnmf_lee, cnmf_liu };

std::string_view method_name(Method method);
/// Throws ParameterError for unknown names.
Method parse_method(std::string_view name);
bool uses_lambda(Method method);
bool uses_rank(Method method);

struct PipelineParams {
  std::size_t rank = 16;
  double lambda = 1.0;
  /// Margin penalty of the evaluation classifiers.
  double C = 1.0;
  FitOptions fit;
  SvmOptions svm;
  /// Classifiers whose dual coefficients build S.
  EnsembleOptions support;
  /// Margin penalty for the S classifiers; defaults to C.
  std::optional<double> support_C;
  std::size_t fold_in_iterations = 100;
};

using Features = std::variant<NonNegMatrix, Dense>;

/// Output of the reduction stage, columns in the order of the split masks.
struct Representation {
  Features labeled;
  Features validation;
  Features test;
  /// Effective dimension (LDA clamps to classes - 1; raw keeps d).
  std::size_t rank = 0;
  std::vector<double> loss_trace;
};

/// Fits the reducer on the training columns only (LDA: labeled columns
/// only) and maps all three splits. NMF-family outputs go through the
/// inner-product embedding; held-out columns are folded in with V frozen.
Representation reduce(const LabeledDataset& data, Method method, const PipelineParams& params);

struct Metrics {
  double accuracy = 0.0;
  FMeasures f;
  /// Accuracy, or the combined F-measure for multilabel tasks.
  double primary = 0.0;
};

struct Evaluation {
  Metrics validation;
  Metrics test;
};

/// Trains the evaluation ensemble on the labeled columns with margin
/// penalty C and scores the validation and test columns.
Evaluation evaluate(const LabeledDataset& data, const Representation& reduced, double C,
                    const SvmOptions& svm);

Evaluation run_pipeline(const LabeledDataset& data, Method method, const PipelineParams& params);

struct SweepGrid {
  std::vector<std::size_t> ranks{16, 32, 64, 128, 256};
  std::vector<double> lambdas{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> Cs{0.01, 0.1, 1.0, 10.0, 100.0};

  /// Ranks above min(d, n_train) dropped; if none fit, min(d, n_train) is
  /// used alone.
  SweepGrid truncated(std::size_t d, std::size_t n) const;
};

struct SweepCell {
  std::size_t rank = 0;
  double lambda = 0.0;
  double C = 0.0;
  /// One entry per repeat.
  std::vector<Evaluation> runs;
  Evaluation mean;
  double final_loss = 0.0;
};

struct SweepResult {
  Method method = Method::raw;
  std::vector<SweepCell> cells;
  std::size_t selected = 0;
};

/// Evaluates every grid cell on every repeat and selects the cell with the
/// highest mean validation metric; ties go to the smallest rank, then the
/// smallest lambda, then the smallest C. Axes the method ignores collapse
/// to a single value. Cells run in parallel; results do not depend on the
/// number of threads.
SweepResult sweep(std::span<const LabeledDataset> repeats, Method method, const SweepGrid& grid,
                  const PipelineParams& base);

/// Index of the winning cell under the rule above.
std::size_t select_cell(std::span<const SweepCell> cells);

inline constexpr std::string_view kMetricsHeader = "method,rank,lambda,C,repeat,split,metric,value";

/// CSV rows (no header) for every cell, per repeat and averaged ("mean").
std::string metrics_rows(const SweepResult& result, Task task);

}  // namespace nmfa

#endif  // NMFALPHA_EVAL_HARNESS_HPP_
