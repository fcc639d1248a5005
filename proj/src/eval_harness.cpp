#include "nmfalpha/eval_harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "nmfalpha/baselines.hpp"
#include "nmfalpha/geometry.hpp"
#include "nmfalpha/log.hpp"
#include "nmfalpha/nmf_semi.hpp"

namespace nmfa {

namespace {

constexpr std::uint64_t kValidationFoldSalt = 0x5bd1e995u;
constexpr std::uint64_t kTestFoldSalt = 0x27d4eb2fu;

void check_sorted_unique(const std::vector<std::size_t>& idx, std::size_t n, const char* what) {
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] >= n) throw IndexError(std::string(what) + " index out of range");
    if (t > 0 && idx[t] <= idx[t - 1]) {
      throw IndexError(std::string(what) + " indices must be sorted and distinct");
    }
  }
}

// Groups pool members by their label set; strata ordered by that set.
std::map<std::vector<std::size_t>, std::vector<std::size_t>> strata_of(
    const Labels& labels, std::span<const std::size_t> pool) {
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> strata;
  for (std::size_t j : pool) strata[labels.sets.at(j)].push_back(j);
  return strata;
}

// Draws `count` members spread over the strata by largest remainder.
std::vector<std::size_t> stratified_draw(const Labels& labels, std::span<const std::size_t> pool,
                                         std::size_t count, std::mt19937_64& rng) {
  auto strata = strata_of(labels, pool);
  const double total = static_cast<double>(pool.size());

  struct Quota {
    std::vector<std::size_t>* members;
    std::size_t take;
    double remainder;
    std::size_t order;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [key, members] : strata) {
    const double exact = static_cast<double>(count) * static_cast<double>(members.size()) / total;
    const auto take = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({&members, take, exact - static_cast<double>(take), quotas.size()});
    assigned += take;
  }
  std::vector<Quota*> by_remainder;
  for (auto& q : quotas) by_remainder.push_back(&q);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [](const Quota* a, const Quota* b) { return a->remainder > b->remainder; });
  for (std::size_t t = 0; assigned < count && t < by_remainder.size(); ++t) {
    if (by_remainder[t]->take < by_remainder[t]->members->size()) {
      ++by_remainder[t]->take;
      ++assigned;
    }
  }

  std::vector<std::size_t> chosen;
  for (auto& q : quotas) {
    std::shuffle(q.members->begin(), q.members->end(), rng);
    chosen.insert(chosen.end(), q.members->begin(),
                  q.members->begin() + static_cast<std::ptrdiff_t>(q.take));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<std::size_t> complement(std::span<const std::size_t> pool,
                                    std::span<const std::size_t> chosen) {
  std::vector<std::size_t> rest;
  std::set_difference(pool.begin(), pool.end(), chosen.begin(), chosen.end(),
                      std::back_inserter(rest));
  return rest;
}

std::size_t round_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

// Shortest text that parses back to the same double.
std::string format_number(double value) {
  char buffer[32];
  const auto res = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, res.ptr);
}

}  // namespace

std::vector<std::size_t> Splits::training() const {
  std::vector<std::size_t> merged;
  std::merge(train_labeled.begin(), train_labeled.end(), train_unlabeled.begin(),
             train_unlabeled.end(), std::back_inserter(merged));
  return merged;
}

void LabeledDataset::validate() const {
  if (!X) throw ParameterError("dataset has no data matrix");
  const std::size_t n = X->cols();
  if (labels.size() != n) {
    throw DimensionError("dataset has " + std::to_string(n) + " columns but " +
                         std::to_string(labels.size()) + " label sets");
  }
  check_sorted_unique(splits.train_labeled, n, "train_labeled");
  check_sorted_unique(splits.train_unlabeled, n, "train_unlabeled");
  check_sorted_unique(splits.validation, n, "validation");
  check_sorted_unique(splits.test, n, "test");
  std::vector<bool> seen(n, false);
  for (const auto* mask :
       {&splits.train_labeled, &splits.train_unlabeled, &splits.validation, &splits.test}) {
    for (std::size_t j : *mask) {
      if (seen[j]) throw IndexError("split masks overlap at column " + std::to_string(j));
      seen[j] = true;
    }
  }
}

std::vector<LabeledDataset> make_splits(const LabeledDataset& base, double labeled_fraction,
                                        std::uint64_t seed, std::size_t num_repeats) {
  base.validate();
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
    throw ParameterError("labeled fraction must lie in (0, 1]");
  }
  if (num_repeats == 0) throw ParameterError("at least one repeat is required");
  const std::vector<std::size_t> pool = base.splits.training();
  if (pool.empty()) throw ParameterError("no training columns to label");
  const std::size_t m = std::clamp<std::size_t>(round_count(labeled_fraction, pool.size()), 1,
                                                pool.size());

  std::vector<LabeledDataset> out;
  for (std::size_t rep = 0; rep < num_repeats; ++rep) {
    std::seed_seq sequence{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(rep)};
    std::mt19937_64 rng(sequence);
    LabeledDataset copy = base;
    copy.splits.train_labeled = stratified_draw(base.labels, pool, m, rng);
    copy.splits.train_unlabeled = complement(pool, copy.splits.train_labeled);

    if (base.labels.task != Task::multilabel) {
      std::vector<bool> present(base.labels.num_classes, false);
      for (std::size_t j : copy.splits.train_labeled) present[base.labels.single(j)] = true;
      for (std::size_t c = 0; c < present.size(); ++c) {
        if (!present[c]) {
          warn("repeat " + std::to_string(rep) + ": class " +
               std::to_string(base.labels.class_ids[c]) + " has no labeled example");
        }
      }
    }
    out.push_back(std::move(copy));
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Labels& labels, std::span<const std::size_t> pool, double fraction,
    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ParameterError("holdout fraction must lie in [0, 1)");
  std::vector<std::size_t> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> held = stratified_draw(labels, sorted, round_count(fraction, sorted.size()), rng);
  return {complement(sorted, held), std::move(held)};
}

// ---------------------------------------------------------------------------
// Metrics

double accuracy(const LabelSets& predicted, const LabelSets& truth) {
  if (predicted.size() != truth.size()) throw DimensionError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) hits += predicted[t] == truth[t] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

FMeasures f_measures(const LabelSets& predicted, const LabelSets& truth, std::size_t num_labels) {
  if (num_labels == 0) throw ParameterError("f_measures: no labels");
  if (predicted.size() != truth.size()) throw DimensionError("f_measures: length mismatch");
  std::vector<std::size_t> tp(num_labels, 0), fp(num_labels, 0), fn(num_labels, 0);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    std::vector<bool> in_truth(num_labels, false);
    for (std::size_t l : truth[t]) in_truth.at(l) = true;
    std::vector<bool> in_pred(num_labels, false);
    for (std::size_t l : predicted[t]) in_pred.at(l) = true;
    for (std::size_t l = 0; l < num_labels; ++l) {
      if (in_pred[l] && in_truth[l]) ++tp[l];
      else if (in_pred[l]) ++fp[l];
      else if (in_truth[l]) ++fn[l];
    }
  }
  const auto f1 = [](std::size_t a, std::size_t b, std::size_t c) {
    const std::size_t denom = 2 * a + b + c;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(a) / static_cast<double>(denom);
  };
  FMeasures out;
  std::size_t all_tp = 0, all_fp = 0, all_fn = 0;
  for (std::size_t l = 0; l < num_labels; ++l) {
    out.macro += f1(tp[l], fp[l], fn[l]);
    all_tp += tp[l];
    all_fp += fp[l];
    all_fn += fn[l];
  }
  out.macro /= static_cast<double>(num_labels);
  out.micro = f1(all_tp, all_fp, all_fn);
  out.combined = 0.5 * (out.macro + out.micro);
  return out;
}

// ---------------------------------------------------------------------------
// Methods

std::string_view method_name(Method method) {
  switch (method) {
    case Method::raw: return "raw";
    case Method::pca: return "pca";
    case Method::lda: return "lda";
    case Method::nmf: return "nmf";
    case Method::nmf_alpha: return "nmf_alpha";
    case Method::ssnmf_lee: return "ssnmf_lee";
    case Method::cnmf_liu: return "cnmf_liu";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::raw, Method::pca, Method::lda, Method::nmf, Method::nmf_alpha,
                   Method::ssnmf_lee, Method::cnmf_liu}) {
    if (method_name(m) == name) return m;
  }
  throw ParameterError("unknown method '" + std::string(name) + "'");
}

bool uses_lambda(Method method) {
  return method == Method::nmf_alpha || method == Method::ssnmf_lee;
}

bool uses_rank(Method method) { return method != Method::raw && method != Method::lda; }

namespace {

FeatureView view_of(const Features& f) {
  return std::visit([](const auto& m) { return FeatureView(m); }, f);
}

struct SplitData {
  std::vector<std::size_t> training;
  std::vector<std::size_t> labeled_positions;  // rows of train_labeled within training
  NonNegMatrix x_train;
  NonNegMatrix x_labeled;
  NonNegMatrix x_validation;
  NonNegMatrix x_test;
  Labels labeled_labels;
};

SplitData gather(const LabeledDataset& data) {
  data.validate();
  SplitData s;
  s.training = data.splits.training();
  for (std::size_t j : data.splits.train_labeled) {
    const auto it = std::lower_bound(s.training.begin(), s.training.end(), j);
    s.labeled_positions.push_back(static_cast<std::size_t>(it - s.training.begin()));
  }
  const NonNegMatrix& x = *data.X;
  s.x_train = x.select_columns(s.training);
  s.x_labeled = x.select_columns(data.splits.train_labeled);
  s.x_validation = x.select_columns(data.splits.validation);
  s.x_test = x.select_columns(data.splits.test);
  s.labeled_labels = data.labels.subset(data.splits.train_labeled);
  return s;
}

// Z for training columns and folded-in held-out columns of an NMF-family fit.
void embed_nmf(const SplitData& s, const Factorization& fit, bool frobenius,
               const PipelineParams& params, Representation& out) {
  const Dense root = spd_sqrt(SymmetricPSD(transpose_product(fit.V, fit.V))).matrix();
  const auto fold = [&](const NonNegMatrix& x, std::uint64_t salt) {
    const std::uint64_t seed = params.fit.seed ^ salt;
    const Dense h = frobenius
                        ? fold_in_frobenius(x, fit.V, params.fold_in_iterations, seed, params.fit.exec)
                        : fold_in(x, fit.V, params.fold_in_iterations, seed, params.fit.exec);
    return product(root, h);
  };
  const Dense z_train = product(root, fit.H);
  out.labeled = z_train.select_columns(s.labeled_positions);
  out.validation = fold(s.x_validation, kValidationFoldSalt);
  out.test = fold(s.x_test, kTestFoldSalt);
  out.rank = fit.rank;
  out.loss_trace = fit.loss_trace;
}

std::size_t classes_present(const Labels& labels) {
  std::vector<bool> present(labels.num_classes, false);
  for (const auto& set : labels.sets)
    for (std::size_t c : set) present[c] = true;
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

Metrics score(const ClassifierEnsemble& ensemble, const Features& features, const Labels& truth) {
  Metrics m;
  if (truth.size() == 0) return m;
  const LabelSets predicted = predict(ensemble, view_of(features));
  m.accuracy = accuracy(predicted, truth.sets);
  m.f = f_measures(predicted, truth.sets, truth.num_classes);
  m.primary = truth.task == Task::multilabel ? m.f.combined : m.accuracy;
  return m;
}

}  // namespace

Representation reduce(const LabeledDataset& data, Method method, const PipelineParams& params) {
  const SplitData s = gather(data);
  Representation out;
  switch (method) {
    case Method::raw:
      out.labeled = s.x_labeled;
      out.validation = s.x_validation;
      out.test = s.x_test;
      out.rank = data.X->rows();
      return out;
    case Method::pca: {
      const PcaModel model = pca_fit(s.x_train, params.rank);
      out.labeled = pca_project(model, s.x_labeled);
      out.validation = pca_project(model, s.x_validation);
      out.test = pca_project(model, s.x_test);
      out.rank = params.rank;
      return out;
    }
    case Method::lda: {
      const std::size_t classes = classes_present(s.labeled_labels);
      const std::size_t rank = std::min(params.rank, classes > 0 ? classes - 1 : 0);
      const LdaModel model = lda_fit(s.x_labeled, s.labeled_labels, std::max<std::size_t>(rank, 1));
      out.labeled = lda_project(model, s.x_labeled);
      out.validation = lda_project(model, s.x_validation);
      out.test = lda_project(model, s.x_test);
      out.rank = model.projections.cols();
      return out;
    }
    case Method::nmf: {
      embed_nmf(s, factorize(s.x_train, params.rank, params.fit), false, params, out);
      return out;
    }
    case Method::nmf_alpha: {
      const ClassifierEnsemble support = train_ensemble(
          s.x_labeled, s.labeled_labels, params.support_C.value_or(params.C), params.support);
      std::vector<LinearModel> models;
      for (const auto& member : support.members) models.push_back(member.model);
      const SupportMatrix sm = build_support_matrix(models, s.training.size(), s.labeled_positions);
      embed_nmf(s, semi_factorize(s.x_train, sm, params.rank, params.lambda, params.fit), false,
                params, out);
      return out;
    }
    case Method::ssnmf_lee: {
      const LabelMatrix y = make_label_matrix(s.labeled_labels, s.labeled_positions);
      embed_nmf(s, ssnmf_lee_factorize(s.x_train, y, params.rank, params.lambda, params.fit).fit,
                true, params, out);
      return out;
    }
    case Method::cnmf_liu: {
      const LabelMatrix y = make_label_matrix(s.labeled_labels, s.labeled_positions);
      embed_nmf(s, cnmf_liu_factorize(s.x_train, y, params.rank, params.fit).fit, true, params,
                out);
      return out;
    }
  }
  throw ParameterError("unknown method");
}

Evaluation evaluate(const LabeledDataset& data, const Representation& reduced, double C,
                    const SvmOptions& svm) {
  const Labels labeled = data.labels.subset(data.splits.train_labeled);
  EnsembleOptions options;
  options.svm = svm;
  const ClassifierEnsemble ensemble = train_ensemble(view_of(reduced.labeled), labeled, C, options);
  Evaluation out;
  out.validation = score(ensemble, reduced.validation, data.labels.subset(data.splits.validation));
  out.test = score(ensemble, reduced.test, data.labels.subset(data.splits.test));
  return out;
}

Evaluation run_pipeline(const LabeledDataset& data, Method method, const PipelineParams& params) {
  return evaluate(data, reduce(data, method, params), params.C, params.svm);
}

// ---------------------------------------------------------------------------
// Sweeps

SweepGrid SweepGrid::truncated(std::size_t d, std::size_t n) const {
  SweepGrid out = *this;
  const std::size_t cap = std::min(d, n);
  out.ranks.clear();
  for (std::size_t r : ranks)
    if (r <= cap) out.ranks.push_back(r);
  if (out.ranks.empty() && !ranks.empty()) {
    out.ranks.push_back(std::min(cap, *std::min_element(ranks.begin(), ranks.end())));
  }
  return out;
}

std::size_t select_cell(std::span<const SweepCell> cells) {
  if (cells.empty()) throw ParameterError("select_cell: no cells");
  std::size_t best = 0;
  for (std::size_t t = 1; t < cells.size(); ++t) {
    const SweepCell& a = cells[t];
    const SweepCell& b = cells[best];
    const double va = a.mean.validation.primary;
    const double vb = b.mean.validation.primary;
    if (va > vb) {
      best = t;
    } else if (va == vb) {
      if (std::tie(a.rank, a.lambda, a.C) < std::tie(b.rank, b.lambda, b.C)) best = t;
    }
  }
  return best;
}

namespace {

Metrics mean_of(std::span<const Metrics> runs) {
  Metrics m;
  for (const Metrics& r : runs) {
    m.accuracy += r.accuracy;
    m.f.macro += r.f.macro;
    m.f.micro += r.f.micro;
    m.f.combined += r.f.combined;
    m.primary += r.primary;
  }
  const double k = static_cast<double>(runs.size());
  m.accuracy /= k;
  m.f.macro /= k;
  m.f.micro /= k;
  m.f.combined /= k;
  m.primary /= k;
  return m;
}

}  // namespace

SweepResult sweep(std::span<const LabeledDataset> repeats, Method method, const SweepGrid& grid,
                  const PipelineParams& base) {
  if (repeats.empty()) throw ParameterError("sweep: no datasets");
  if (grid.Cs.empty() || (uses_rank(method) && grid.ranks.empty()) ||
      (uses_lambda(method) && grid.lambdas.empty())) {
    throw ParameterError("sweep: empty grid");
  }
  const std::vector<std::size_t> ranks =
      uses_rank(method) ? grid.ranks
                        : std::vector<std::size_t>{method == Method::lda
                                                       ? std::numeric_limits<std::size_t>::max()
                                                       : repeats[0].X->rows()};
  const std::vector<double> lambdas = uses_lambda(method) ? grid.lambdas : std::vector<double>{0.0};
  const std::size_t nr = ranks.size(), nl = lambdas.size(), nc = grid.Cs.size();
  const std::size_t reps = repeats.size();

  SweepResult result;
  result.method = method;
  result.cells.resize(nr * nl * nc);
  for (std::size_t ri = 0; ri < nr; ++ri)
    for (std::size_t li = 0; li < nl; ++li)
      for (std::size_t ci = 0; ci < nc; ++ci) {
        SweepCell& cell = result.cells[(ri * nl + li) * nc + ci];
        cell.rank = ranks[ri];
        cell.lambda = lambdas[li];
        cell.C = grid.Cs[ci];
        cell.runs.resize(reps);
      }

  // One job per (rank, lambda, repeat); every C reuses the same reduction.
  const std::size_t jobs = nr * nl * reps;
  std::vector<std::exception_ptr> failures(jobs);
  std::vector<double> final_losses(jobs, 0.0);
  std::vector<std::size_t> effective_rank(jobs, 0);

#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t rep = job % reps;
    const std::size_t li = (job / reps) % nl;
    const std::size_t ri = job / (reps * nl);
    try {
      PipelineParams params = base;
      params.rank = ranks[ri];
      params.lambda = lambdas[li];
      const Representation reduced = reduce(repeats[rep], method, params);
      effective_rank[job] = reduced.rank;
      final_losses[job] = reduced.loss_trace.empty() ? 0.0 : reduced.loss_trace.back();
      for (std::size_t ci = 0; ci < nc; ++ci) {
        result.cells[(ri * nl + li) * nc + ci].runs[rep] =
            evaluate(repeats[rep], reduced, grid.Cs[ci], base.svm);
      }
    } catch (...) {
      failures[job] = std::current_exception();
    }
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  for (std::size_t ri = 0; ri < nr; ++ri)
    for (std::size_t li = 0; li < nl; ++li) {
      double loss = 0.0;
      for (std::size_t rep = 0; rep < reps; ++rep) loss += final_losses[(ri * nl + li) * reps + rep];
      for (std::size_t ci = 0; ci < nc; ++ci) {
        SweepCell& cell = result.cells[(ri * nl + li) * nc + ci];
        cell.rank = effective_rank[(ri * nl + li) * reps];
        cell.final_loss = loss / static_cast<double>(reps);
        std::vector<Metrics> val, test;
        for (const Evaluation& e : cell.runs) {
          val.push_back(e.validation);
          test.push_back(e.test);
        }
        cell.mean.validation = mean_of(val);
        cell.mean.test = mean_of(test);
      }
    }
  result.selected = select_cell(result.cells);
  return result;
}

std::string metrics_rows(const SweepResult& result, Task task) {
  std::ostringstream out;
  const auto emit = [&](const SweepCell& cell, const std::string& repeat, const Evaluation& e) {
    for (const auto& [split, m] : {std::pair<const char*, const Metrics*>{"validation", &e.validation},
                                   std::pair<const char*, const Metrics*>{"test", &e.test}}) {
      const std::string prefix = std::string(method_name(result.method)) + "," +
                                 std::to_string(cell.rank) + "," + format_number(cell.lambda) + "," +
                                 format_number(cell.C) + "," + repeat + "," + split + ",";
      if (task == Task::multilabel) {
        out << prefix << "macro_f," << format_number(m->f.macro) << '\n';
        out << prefix << "micro_f," << format_number(m->f.micro) << '\n';
        out << prefix << "combined_f," << format_number(m->f.combined) << '\n';
      } else {
        out << prefix << "accuracy," << format_number(m->accuracy) << '\n';
      }
    }
  };
  for (const SweepCell& cell : result.cells) {
    for (std::size_t rep = 0; rep < cell.runs.size(); ++rep) emit(cell, std::to_string(rep), cell.runs[rep]);
    emit(cell, "mean", cell.mean);
  }
  return out.str();
}

}  // namespace nmfa
