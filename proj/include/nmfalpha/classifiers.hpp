#ifndef NMFALPHA_CLASSIFIERS_HPP_
#define NMFALPHA_CLASSIFIERS_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nmfalpha/matrix.hpp"

namespace nmfa {

struct SupportMatrix;

enum class Task { binary, multiway, multilabel };

/// Label assignment for a set of examples. Classes are stored by internal
/// index 0..num_classes-1; `class_ids` maps them back to the ids found in
/// the data files. Binary tasks use index 0 for -1 and index 1 for +1.
struct Labels {
  Task task = Task::binary;
  std::size_t num_classes = 0;
  std::vector<int> class_ids;
  /// Sorted internal class indices per example (exactly one unless
  /// multilabel).
  std::vector<std::vector<std::size_t>> sets;

  std::size_t size() const { return sets.size(); }
  std::size_t single(std::size_t example) const;
  bool has(std::size_t example, std::size_t cls) const;
  Labels subset(std::span<const std::size_t> examples) const;

  /// Builds labels from raw ids. The class universe is the sorted set of
  /// ids that occur (binary: always {-1, +1}).
  static Labels from_ids(Task task, const std::vector<std::vector<int>>& ids);
};

/// Read-only column access to either raw data or a reduced representation.
/// Columns are examples.
class FeatureView {
 public:
  FeatureView(const NonNegMatrix& x) : sparse_(&x) {}  // NOLINT: implicit by design
  FeatureView(const Dense& z) : dense_(&z) {}          // NOLINT

  /// Same columns multiplied by `factor`.
  FeatureView scaled(double factor) const {
    FeatureView v = *this;
    v.scale_ *= factor;
    return v;
  }
  double scale() const { return scale_; }

  std::size_t dim() const { return sparse_ ? sparse_->rows() : dense_->rows(); }
  std::size_t count() const { return sparse_ ? sparse_->cols() : dense_->cols(); }

  double dot(std::size_t j, std::span<const double> w) const;
  void axpy(std::size_t j, double a, std::span<double> w) const;
  double squared_norm(std::size_t j) const;
  bool all_finite() const;

 private:
  const NonNegMatrix* sparse_ = nullptr;
  const Dense* dense_ = nullptr;
  double scale_ = 1.0;
};

/// Linear classifier with its dual representation w = sum_i alpha_i y_i x_i.
/// Example indices refer to columns of the FeatureView it was trained on.
struct LinearModel {
  std::vector<double> w;
  double bias = 0.0;
  /// Nonzero dual coefficients only.
  std::map<std::size_t, double> alphas;
  /// +1 / -1 for every example the model was trained on.
  std::map<std::size_t, int> labels;
  /// Box bound on alpha; infinite for the perceptron.
  double C = std::numeric_limits<double>::infinity();
  bool converged = false;

  double decision(const FeatureView& x, std::size_t j) const { return x.dot(j, w) + bias; }
};

struct SvmOptions {
  /// Stop when every projected gradient is at most this in magnitude.
  double tolerance = 1e-4;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 1;
};

/// Soft-margin L1-hinge SVM by dual coordinate descent. The bias is learned
/// through an appended constant feature of value 1 that is not part of w.
LinearModel train_linear_svm(const FeatureView& x, std::span<const int> y, double C,
                             const SvmOptions& options = {});
/// Same, restricted to the listed columns; y is parallel to `examples`.
LinearModel train_linear_svm(const FeatureView& x, std::span<const std::size_t> examples,
                             std::span<const int> y, double C, const SvmOptions& options = {});

/// Mistake-driven perceptron with a constant bias feature; alpha_i counts
/// the updates made on example i. Examples are visited in index order.
LinearModel train_perceptron(const FeatureView& x, std::span<const int> y, std::size_t epochs);
LinearModel train_perceptron(const FeatureView& x, std::span<const std::size_t> examples,
                             std::span<const int> y, std::size_t epochs);

struct WeightDecomposition {
  std::vector<double> w_plus;
  std::vector<double> w_minus;
};

/// w+ = X alpha+, w- = X alpha- (bias excluded).
WeightDecomposition decompose_weights(const LinearModel& model, const NonNegMatrix& x);

/// Reconstructed components (VH) alpha+- for every classifier in S.
std::vector<WeightDecomposition> reconstruct_weights(const Dense& v, const Dense& h,
                                                     const SupportMatrix& s);

enum class SupportSource { svm, perceptron };

struct EnsembleOptions {
  SupportSource source = SupportSource::svm;
  SvmOptions svm;
  std::size_t perceptron_epochs = 100;
  /// Multiply all features by one constant so the training columns have
  /// unit mean squared norm; the constant bias feature then sits on the
  /// same scale as the data.
  bool normalize_scale = true;
};

struct EnsembleMember {
  LinearModel model;
  std::size_t positive_class = 0;
  /// Empty for one-vs-rest members.
  std::optional<std::size_t> negative_class;
  /// False when the subproblem lacked one of its classes.
  bool trained = false;
};

/// binary: one model; multiway: one-vs-one over all c(c-1)/2 pairs (a < b,
/// class a positive); multilabel: one-vs-rest per label.
struct ClassifierEnsemble {
  Task task = Task::binary;
  std::size_t num_classes = 0;
  std::size_t dimension = 0;
  /// Factor applied to every feature before the members see it.
  double feature_scale = 1.0;
  std::vector<EnsembleMember> members;
};

/// Factor c for which the columns of x.scaled(c) have unit mean squared
/// norm; 1 for all-zero input.
double unit_scale(const FeatureView& x);

ClassifierEnsemble train_ensemble(const FeatureView& x, const Labels& labels, double C,
                                  const EnsembleOptions& options = {});

/// Decision value of every member on column j (0 for untrained members).
std::vector<double> decision_values(const ClassifierEnsemble& ensemble, const FeatureView& x,
                                    std::size_t j);

/// Predicted class sets. binary: positive iff w.z + b >= 0; multiway:
/// one-vs-one vote, ties broken by summed decision values then lowest class
/// index; multilabel: every label whose decision value is >= 0.
std::vector<std::vector<std::size_t>> predict(const ClassifierEnsemble& ensemble,
                                              const FeatureView& x);

}  // namespace nmfa

#endif  // NMFALPHA_CLASSIFIERS_HPP_
