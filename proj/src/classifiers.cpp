#include "nmfalpha/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "nmfalpha/log.hpp"
#include "nmfalpha/nmf_semi.hpp"

namespace nmfa {

// ---------------------------------------------------------------------------
// Labels

std::size_t Labels::single(std::size_t example) const {
  if (sets.at(example).size() != 1) throw DomainError("example does not carry exactly one label");
  return sets[example].front();
}

bool Labels::has(std::size_t example, std::size_t cls) const {
  const auto& set = sets.at(example);
  return std::binary_search(set.begin(), set.end(), cls);
}

Labels Labels::subset(std::span<const std::size_t> examples) const {
  Labels out;
  out.task = task;
  out.num_classes = num_classes;
  out.class_ids = class_ids;
  out.sets.reserve(examples.size());
  for (std::size_t e : examples) out.sets.push_back(sets.at(e));
  return out;
}

Labels Labels::from_ids(Task task, const std::vector<std::vector<int>>& ids) {
  Labels out;
  out.task = task;
  if (task == Task::binary) {
    out.class_ids = {-1, 1};
  } else {
    std::set<int> universe;
    for (const auto& example : ids) universe.insert(example.begin(), example.end());
    out.class_ids.assign(universe.begin(), universe.end());
  }
  out.num_classes = out.class_ids.size();
  out.sets.reserve(ids.size());
  for (std::size_t e = 0; e < ids.size(); ++e) {
    const auto& example = ids[e];
    if (task != Task::multilabel && example.size() != 1) {
      throw DomainError("example " + std::to_string(e) + " must carry exactly one label");
    }
    std::vector<std::size_t> set;
    for (int id : example) {
      if (task == Task::binary && id != 1 && id != -1) {
        throw DomainError("binary labels must be +1 or -1 (example " + std::to_string(e) + ")");
      }
      const auto it = std::lower_bound(out.class_ids.begin(), out.class_ids.end(), id);
      set.push_back(static_cast<std::size_t>(it - out.class_ids.begin()));
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    out.sets.push_back(std::move(set));
  }
  return out;
}

// ---------------------------------------------------------------------------
// FeatureView

double FeatureView::dot(std::size_t j, std::span<const double> w) const {
  double acc = 0.0;
  if (sparse_) {
    sparse_->for_each_in_column(j, [&](std::size_t i, double x) { acc += w[i] * x; });
  } else {
    for (std::size_t i = 0; i < dense_->rows(); ++i) acc += w[i] * (*dense_)(i, j);
  }
  return scale_ * acc;
}

void FeatureView::axpy(std::size_t j, double a, std::span<double> w) const {
  a *= scale_;
  if (sparse_) {
    sparse_->for_each_in_column(j, [&](std::size_t i, double x) { w[i] += a * x; });
  } else {
    for (std::size_t i = 0; i < dense_->rows(); ++i) w[i] += a * (*dense_)(i, j);
  }
}

double FeatureView::squared_norm(std::size_t j) const {
  double acc = 0.0;
  if (sparse_) {
    sparse_->for_each_in_column(j, [&](std::size_t, double x) { acc += x * x; });
  } else {
    for (std::size_t i = 0; i < dense_->rows(); ++i) acc += (*dense_)(i, j) * (*dense_)(i, j);
  }
  return scale_ * scale_ * acc;
}

bool FeatureView::all_finite() const {
  // NonNegMatrix validates finiteness on construction.
  return sparse_ ? true : nmfa::all_finite(*dense_);
}

// ---------------------------------------------------------------------------
// Training

namespace {

void check_training_set(const FeatureView& x, std::span<const std::size_t> examples,
                        std::span<const int> y) {
  if (examples.size() != y.size()) throw DimensionError("labels and examples differ in length");
  bool positive = false, negative = false;
  for (std::size_t t = 0; t < examples.size(); ++t) {
    if (examples[t] >= x.count()) throw IndexError("training example out of range");
    if (y[t] == 1) {
      positive = true;
    } else if (y[t] == -1) {
      negative = true;
    } else {
      throw DomainError("labels must be +1 or -1");
    }
  }
  if (!positive || !negative) throw DegenerateLabelError("training set holds a single class");
  if (!x.all_finite()) throw DomainError("features must be finite");
}

std::vector<std::size_t> all_columns(const FeatureView& x) {
  std::vector<std::size_t> out(x.count());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

}  // namespace

LinearModel train_linear_svm(const FeatureView& x, std::span<const int> y, double C,
                             const SvmOptions& options) {
  const auto columns = all_columns(x);
  return train_linear_svm(x, columns, y, C, options);
}

LinearModel train_linear_svm(const FeatureView& x, std::span<const std::size_t> examples,
                             std::span<const int> y, double C, const SvmOptions& options) {
  if (!(C > 0.0)) throw ParameterError("C must be positive");
  check_training_set(x, examples, y);

  const std::size_t m = examples.size();
  LinearModel model;
  model.C = C;
  model.w.assign(x.dim(), 0.0);
  std::vector<double> alpha(m, 0.0);
  std::vector<double> diag(m);
  for (std::size_t t = 0; t < m; ++t) diag[t] = x.squared_norm(examples[t]) + 1.0;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);

  for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double violation = 0.0;
    for (std::size_t t : order) {
      const double gradient = y[t] * (x.dot(examples[t], model.w) + model.bias) - 1.0;
      double projected = gradient;
      if (alpha[t] == 0.0) {
        projected = std::min(gradient, 0.0);
      } else if (alpha[t] == C) {
        projected = std::max(gradient, 0.0);
      }
      violation = std::max(violation, std::abs(projected));
      if (projected == 0.0) continue;
      const double previous = alpha[t];
      alpha[t] = std::min(std::max(previous - gradient / diag[t], 0.0), C);
      const double delta = (alpha[t] - previous) * y[t];
      if (delta == 0.0) continue;
      x.axpy(examples[t], delta, model.w);
      model.bias += delta;
    }
    if (violation <= options.tolerance) {
      model.converged = true;
      break;
    }
  }

  for (std::size_t t = 0; t < m; ++t) {
    model.labels[examples[t]] = y[t];
    if (alpha[t] > 0.0) model.alphas[examples[t]] = alpha[t];
  }
  return model;
}

LinearModel train_perceptron(const FeatureView& x, std::span<const int> y, std::size_t epochs) {
  const auto columns = all_columns(x);
  return train_perceptron(x, columns, y, epochs);
}

LinearModel train_perceptron(const FeatureView& x, std::span<const std::size_t> examples,
                             std::span<const int> y, std::size_t epochs) {
  if (examples.size() != y.size()) throw DimensionError("labels and examples differ in length");
  if (examples.empty()) throw ParameterError("perceptron needs at least one example");
  for (std::size_t t = 0; t < examples.size(); ++t) {
    if (examples[t] >= x.count()) throw IndexError("training example out of range");
    if (y[t] != 1 && y[t] != -1) throw DomainError("labels must be +1 or -1");
  }

  const std::size_t m = examples.size();
  LinearModel model;
  model.w.assign(x.dim(), 0.0);
  std::vector<double> mistakes(m, 0.0);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    bool clean = true;
    for (std::size_t t = 0; t < m; ++t) {
      if (y[t] * (x.dot(examples[t], model.w) + model.bias) > 0.0) continue;
      clean = false;
      mistakes[t] += 1.0;
      x.axpy(examples[t], static_cast<double>(y[t]), model.w);
      model.bias += y[t];
    }
    if (clean) {
      model.converged = true;
      break;
    }
  }
  for (std::size_t t = 0; t < m; ++t) {
    model.labels[examples[t]] = y[t];
    if (mistakes[t] > 0.0) model.alphas[examples[t]] = mistakes[t];
  }
  return model;
}

// ---------------------------------------------------------------------------
// Weight decomposition

WeightDecomposition decompose_weights(const LinearModel& model, const NonNegMatrix& x) {
  WeightDecomposition out{std::vector<double>(x.rows(), 0.0), std::vector<double>(x.rows(), 0.0)};
  for (const auto& [example, alpha] : model.alphas) {
    if (example >= x.cols()) throw IndexError("model references a column outside the data");
    const auto label = model.labels.find(example);
    if (label == model.labels.end()) throw IndexError("model has no label for a support vector");
    auto& target = label->second > 0 ? out.w_plus : out.w_minus;
    x.for_each_in_column(example, [&](std::size_t i, double value) { target[i] += alpha * value; });
  }
  return out;
}

std::vector<WeightDecomposition> reconstruct_weights(const Dense& v, const Dense& h,
                                                     const SupportMatrix& s) {
  if (v.cols() != h.rows() || s.S.rows() != h.cols()) {
    throw DimensionError("reconstruct_weights: factor and support shapes disagree");
  }
  const auto apply = [&](std::size_t column) {
    std::vector<double> coeff(h.rows(), 0.0);
    s.S.for_each_in_column(column, [&](std::size_t j, double alpha) {
      for (std::size_t k = 0; k < h.rows(); ++k) coeff[k] += h(k, j) * alpha;
    });
    std::vector<double> out(v.rows(), 0.0);
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t k = 0; k < v.cols(); ++k) out[i] += v(i, k) * coeff[k];
    return out;
  };
  std::vector<WeightDecomposition> out;
  out.reserve(s.p);
  for (std::size_t tau = 0; tau < s.p; ++tau) out.push_back({apply(tau), apply(s.p + tau)});
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

namespace {

LinearModel train_member(const FeatureView& x, std::span<const std::size_t> examples,
                         std::span<const int> y, double C, const EnsembleOptions& options) {
  if (options.source == SupportSource::perceptron) {
    return train_perceptron(x, examples, y, options.perceptron_epochs);
  }
  return train_linear_svm(x, examples, y, C, options.svm);
}

EnsembleMember untrained(std::size_t dim, std::size_t positive, std::optional<std::size_t> negative) {
  EnsembleMember member;
  member.model.w.assign(dim, 0.0);
  member.positive_class = positive;
  member.negative_class = negative;
  member.trained = false;
  return member;
}

}  // namespace

double unit_scale(const FeatureView& x) {
  double total = 0.0;
  for (std::size_t j = 0; j < x.count(); ++j) total += x.squared_norm(j);
  if (!(total > 0.0)) return 1.0;
  return std::sqrt(static_cast<double>(x.count()) / total);
}

ClassifierEnsemble train_ensemble(const FeatureView& x, const Labels& labels, double C,
                                  const EnsembleOptions& options) {
  if (labels.size() != x.count()) throw DimensionError("one label set per column is required");
  ClassifierEnsemble ensemble;
  ensemble.task = labels.task;
  ensemble.num_classes = labels.num_classes;
  ensemble.dimension = x.dim();
  const std::size_t count = x.count();
  if (options.normalize_scale) ensemble.feature_scale = unit_scale(x);
  const FeatureView view = x.scaled(ensemble.feature_scale);

  switch (labels.task) {
    case Task::binary: {
      std::vector<std::size_t> examples(count);
      std::vector<int> y(count);
      for (std::size_t e = 0; e < count; ++e) {
        examples[e] = e;
        y[e] = labels.single(e) == 1 ? 1 : -1;
      }
      EnsembleMember member;
      member.model = train_member(view, examples, y, C, options);
      member.positive_class = 1;
      member.negative_class = 0;
      member.trained = true;
      ensemble.members.push_back(std::move(member));
      break;
    }
    case Task::multiway: {
      const std::size_t c = labels.num_classes;
      for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = a + 1; b < c; ++b) {
          std::vector<std::size_t> examples;
          std::vector<int> y;
          bool seen_a = false, seen_b = false;
          for (std::size_t e = 0; e < count; ++e) {
            const std::size_t cls = labels.single(e);
            if (cls == a) {
              examples.push_back(e);
              y.push_back(1);
              seen_a = true;
            } else if (cls == b) {
              examples.push_back(e);
              y.push_back(-1);
              seen_b = true;
            }
          }
          if (!seen_a || !seen_b) {
            warn("skipping classes " + std::to_string(labels.class_ids[a]) + " vs " +
                 std::to_string(labels.class_ids[b]) + ": one side has no labeled examples");
            ensemble.members.push_back(untrained(x.dim(), a, b));
            continue;
          }
          EnsembleMember member;
          member.model = train_member(view, examples, y, C, options);
          member.positive_class = a;
          member.negative_class = b;
          member.trained = true;
          ensemble.members.push_back(std::move(member));
        }
      }
      break;
    }
    case Task::multilabel: {
      std::vector<std::size_t> examples(count);
      std::iota(examples.begin(), examples.end(), std::size_t{0});
      for (std::size_t label = 0; label < labels.num_classes; ++label) {
        std::vector<int> y(count);
        std::size_t positives = 0;
        for (std::size_t e = 0; e < count; ++e) {
          y[e] = labels.has(e, label) ? 1 : -1;
          positives += y[e] > 0;
        }
        if (positives == 0 || positives == count) {
          warn("skipping label " + std::to_string(labels.class_ids[label]) +
               ": labeled examples are all on one side");
          ensemble.members.push_back(untrained(x.dim(), label, std::nullopt));
          continue;
        }
        EnsembleMember member;
        member.model = train_member(view, examples, y, C, options);
        member.positive_class = label;
        member.trained = true;
        ensemble.members.push_back(std::move(member));
      }
      break;
    }
  }
  return ensemble;
}

std::vector<double> decision_values(const ClassifierEnsemble& ensemble, const FeatureView& x,
                                    std::size_t j) {
  std::vector<double> out(ensemble.members.size(), 0.0);
  const FeatureView view = x.scaled(ensemble.feature_scale);
  for (std::size_t t = 0; t < ensemble.members.size(); ++t) {
    if (ensemble.members[t].trained) out[t] = ensemble.members[t].model.decision(view, j);
  }
  return out;
}

std::vector<std::vector<std::size_t>> predict(const ClassifierEnsemble& ensemble,
                                              const FeatureView& x) {
  if (x.dim() != ensemble.dimension) {
    throw DimensionError("predict: feature dimension " + std::to_string(x.dim()) +
                         " differs from training dimension " +
                         std::to_string(ensemble.dimension));
  }
  std::vector<std::vector<std::size_t>> out(x.count());
  for (std::size_t j = 0; j < x.count(); ++j) {
    const auto scores = decision_values(ensemble, x, j);
    switch (ensemble.task) {
      case Task::binary:
        out[j] = {scores.at(0) >= 0.0 ? std::size_t{1} : std::size_t{0}};
        break;
      case Task::multiway: {
        std::vector<std::size_t> votes(ensemble.num_classes, 0);
        std::vector<double> margin(ensemble.num_classes, 0.0);
        for (std::size_t t = 0; t < ensemble.members.size(); ++t) {
          const auto& member = ensemble.members[t];
          if (!member.trained) continue;
          const std::size_t a = member.positive_class;
          const std::size_t b = *member.negative_class;
          ++votes[scores[t] >= 0.0 ? a : b];
          margin[a] += scores[t];
          margin[b] -= scores[t];
        }
        std::size_t best = 0;
        for (std::size_t cls = 1; cls < ensemble.num_classes; ++cls) {
          if (votes[cls] > votes[best] ||
              (votes[cls] == votes[best] && margin[cls] > margin[best])) {
            best = cls;
          }
        }
        out[j] = {best};
        break;
      }
      case Task::multilabel:
        for (std::size_t t = 0; t < ensemble.members.size(); ++t) {
          if (ensemble.members[t].trained && scores[t] >= 0.0) {
            out[j].push_back(ensemble.members[t].positive_class);
          }
        }
        std::sort(out[j].begin(), out[j].end());
        break;
    }
  }
  return out;
}

}  // namespace nmfa
