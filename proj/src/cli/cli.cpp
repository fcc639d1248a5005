#include "nmfalpha/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include "nmfalpha/baselines.hpp"
#include "nmfalpha/classifiers.hpp"
#include "nmfalpha/eval_harness.hpp"
#include "nmfalpha/geometry.hpp"
#include "nmfalpha/io.hpp"
#include "nmfalpha/kernels.hpp"
#include "nmfalpha/log.hpp"
#include "nmfalpha/nmf_semi.hpp"
#include "nmfalpha/nmf_unsup.hpp"

namespace nmfa::cli {

namespace {

using io::format_double;

constexpr std::uint64_t kFoldInSalt = 0x9e3779b97f4a7c15ull;

Task parse_task(const std::string& name) {
  if (name == "binary") return Task::binary;
  if (name == "multiway") return Task::multiway;
  if (name == "multilabel") return Task::multilabel;
  throw ParameterError("unknown task '" + name + "'");
}

std::string task_name(Task task) {
  switch (task) {
    case Task::binary: return "binary";
    case Task::multiway: return "multiway";
    case Task::multilabel: return "multilabel";
  }
  return "binary";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ParseError("write to '" + path + "' failed");
}

Dense row_block(std::span<const double> values) {
  return Dense(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Dense index_block(std::span<const std::size_t> idx) {
  Dense b(1, idx.size());
  for (std::size_t t = 0; t < idx.size(); ++t) b(0, t) = static_cast<double>(idx[t]);
  return b;
}

void print_trace(std::ostream& out, const Factorization& fit) {
  for (std::size_t t = 0; t < fit.loss_trace.size(); ++t)
    out << "trace " << t << ' ' << format_double(fit.loss_trace[t]) << '\n';
  out << "iterations = " << fit.iterations_run << '\n';
  out << "final_loss = " << format_double(fit.loss_trace.back()) << '\n';
}

io::ModelArchive factorization_archive(const std::string& kind, const Factorization& fit,
                                       const FitOptions& options, std::size_t d, std::size_t n) {
  io::ModelArchive a;
  a.kind = kind;
  a.set("seed", std::to_string(fit.seed));
  a.set("rank", std::to_string(fit.rank));
  a.set("rows", std::to_string(d));
  a.set("cols", std::to_string(n));
  a.set("max_iterations", std::to_string(options.max_iterations));
  a.set("relative_tolerance", format_double(options.relative_tolerance));
  a.set("loss_record_stride", std::to_string(options.loss_record_stride));
  a.set("iterations_run", std::to_string(fit.iterations_run));
  a.add_block("V", fit.V);
  a.add_block("H", fit.H);
  a.add_block("loss_trace", row_block(fit.loss_trace));
  return a;
}

Labels labels_for(Task task, const std::vector<std::vector<int>>& ids) {
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (task != Task::multilabel && ids[j].empty()) {
      throw ParseError("example " + std::to_string(j + 1) + " has no label");
    }
  }
  return Labels::from_ids(task, ids);
}

void add_fit_flags(CLI::App* app, FitOptions& fit) {
  app->add_option("--max-iter", fit.max_iterations, "Iteration budget")->capture_default_str();
  app->add_option("--tol", fit.relative_tolerance, "Relative loss change that stops the fit")
      ->capture_default_str();
  app->add_option("--stride", fit.loss_record_stride, "Record every k-th loss")->capture_default_str();
}

// Representation of `x` under a saved reducer (nmf family, pca, lda).
Dense reduce_with(const io::ModelArchive& model, const NonNegMatrix& x, std::size_t iterations,
                  std::uint64_t seed) {
  if (io::is_factorization_kind(model.kind)) {
    const Dense& v = model.block("V");
    if (x.rows() > v.rows()) throw DimensionError("input has more features than the model basis");
    const NonNegMatrix padded = x.with_rows(v.rows());
    const bool frobenius = model.kind == "ssnmf" || model.kind == "cnmf";
    const Dense h = frobenius ? fold_in_frobenius(padded, v, iterations, seed ^ kFoldInSalt)
                              : fold_in(padded, v, iterations, seed ^ kFoldInSalt);
    return inner_product_embedding(v, h);
  }
  if (model.kind == "pca") {
    PcaModel pca{model.block("components"), model.block("mean").column(0), {}};
    if (x.rows() > pca.components.rows()) throw DimensionError("input has more features than the model");
    return pca_project(pca, x.with_rows(pca.components.rows()));
  }
  if (model.kind == "lda") {
    LdaModel lda{model.block("projections")};
    if (x.rows() > lda.projections.rows()) throw DimensionError("input has more features than the model");
    return lda_project(lda, x.with_rows(lda.projections.rows()));
  }
  throw ParameterError("archive kind '" + model.kind + "' is not a reducer");
}

std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> ids;
  for (const auto& part : io::split_list(text))
    ids.push_back(static_cast<int>(io::parse_integer(part, "class id")));
  return ids;
}

io::ModelArchive ensemble_archive(const ClassifierEnsemble& e, const Labels& labels, double C) {
  io::ModelArchive a;
  a.kind = e.task == Task::binary ? "svm" : "ensemble";
  a.set("task", task_name(e.task));
  a.set("num_classes", std::to_string(e.num_classes));
  std::string ids;
  for (std::size_t c = 0; c < labels.class_ids.size(); ++c)
    ids += (c ? "," : "") + std::to_string(labels.class_ids[c]);
  a.set("class_ids", ids);
  a.set("dimension", std::to_string(e.dimension));
  a.set("C", format_double(C));
  a.set("feature_scale", format_double(e.feature_scale));
  const std::size_t p = e.members.size();
  Dense w(p, e.dimension), bias(1, p), pairs(p, 2), trained(1, p);
  for (std::size_t t = 0; t < p; ++t) {
    const auto& m = e.members[t];
    for (std::size_t i = 0; i < e.dimension && i < m.model.w.size(); ++i) w(t, i) = m.model.w[i];
    bias(0, t) = m.model.bias;
    pairs(t, 0) = static_cast<double>(m.positive_class);
    pairs(t, 1) = m.negative_class ? static_cast<double>(*m.negative_class) : -1.0;
    trained(0, t) = m.trained ? 1.0 : 0.0;
  }
  a.add_block("W", std::move(w));
  a.add_block("bias", std::move(bias));
  a.add_block("pairs", std::move(pairs));
  a.add_block("trained", std::move(trained));
  return a;
}

ClassifierEnsemble ensemble_from(const io::ModelArchive& a) {
  if (a.kind != "svm" && a.kind != "ensemble") {
    throw ParameterError("archive kind '" + a.kind + "' is not a classifier");
  }
  ClassifierEnsemble e;
  e.task = parse_task(a.require("task"));
  e.num_classes = static_cast<std::size_t>(io::parse_integer(a.require("num_classes"), "num_classes"));
  e.dimension = static_cast<std::size_t>(io::parse_integer(a.require("dimension"), "dimension"));
  e.feature_scale = io::parse_double(a.require("feature_scale"), "feature_scale");
  if (!(e.feature_scale > 0.0)) throw DomainError("feature_scale must be positive");
  const Dense& w = a.block("W");
  const Dense& bias = a.block("bias");
  const Dense& pairs = a.block("pairs");
  const Dense& trained = a.block("trained");
  if (w.cols() != e.dimension || bias.cols() != w.rows() || pairs.rows() != w.rows() ||
      trained.cols() != w.rows()) {
    throw DimensionError("classifier archive blocks disagree in shape");
  }
  for (std::size_t t = 0; t < w.rows(); ++t) {
    EnsembleMember m;
    const auto row = w.row(t);
    m.model.w.assign(row.begin(), row.end());
    m.model.bias = bias(0, t);
    m.positive_class = static_cast<std::size_t>(pairs(t, 0));
    if (pairs(t, 1) >= 0) m.negative_class = static_cast<std::size_t>(pairs(t, 1));
    m.trained = trained(0, t) != 0.0;
    e.members.push_back(std::move(m));
  }
  return e;
}

// train columns, then validation, then test, in one matrix.
LabeledDataset build_dataset(const std::string& train, const std::string& validation,
                             const std::string& test, double validation_fraction, Task task,
                             std::uint64_t seed) {
  std::vector<std::string> paths{train};
  if (!validation.empty()) paths.push_back(validation);
  paths.push_back(test);
  std::vector<std::size_t> offsets;
  io::SparseDataset parsed = io::parse_sparse_files(paths, &offsets);
  const std::size_t n = parsed.X.cols();

  LabeledDataset data;
  data.labels = labels_for(task, parsed.label_ids);
  data.X = std::make_shared<const NonNegMatrix>(std::move(parsed.X));
  const std::size_t test_start = offsets.back();
  const std::size_t train_end = offsets[1];
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < train_end; ++j) pool.push_back(j);
  for (std::size_t j = test_start; j < n; ++j) data.splits.test.push_back(j);
  if (!validation.empty()) {
    for (std::size_t j = train_end; j < test_start; ++j) data.splits.validation.push_back(j);
    data.splits.train_unlabeled = pool;
  } else {
    auto [kept, held] = stratified_holdout(data.labels, pool, validation_fraction, seed);
    data.splits.train_unlabeled = std::move(kept);
    data.splits.validation = std::move(held);
  }
  return data;
}

struct EvalSetup {
  std::vector<std::string> methods{"nmf_alpha"};
  std::string train, validation, test;
  double validation_fraction = 0.2;
  std::string task = "binary";
  double labels_fraction = 1.0;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  SweepGrid grid;
  PipelineParams params;
  std::string classifier = "svm";
  std::optional<double> support_C;
};

void apply_classifier(EvalSetup& s) {
  if (s.classifier == "svm") s.params.support.source = SupportSource::svm;
  else if (s.classifier == "perceptron") s.params.support.source = SupportSource::perceptron;
  else throw ParameterError("classifier must be svm or perceptron");
  s.params.support_C = s.support_C;
}

// Runs every method over the grid; returns (csv, summary).
std::pair<std::string, std::string> run_sweeps(EvalSetup& s, std::ostream& out) {
  apply_classifier(s);
  s.params.fit.seed = s.seed;
  const Task task = parse_task(s.task);
  const LabeledDataset base =
      build_dataset(s.train, s.validation, s.test, s.validation_fraction, task, s.seed);
  const std::vector<LabeledDataset> repeats =
      make_splits(base, s.labels_fraction, s.seed, s.repeats);
  const SweepGrid grid = s.grid.truncated(base.X->rows(), base.splits.training().size());

  out << "seed = " << s.seed << '\n';
  out << "examples = " << base.X->cols() << " (train " << base.splits.training().size()
      << ", labeled " << repeats[0].splits.train_labeled.size() << ", validation "
      << base.splits.validation.size() << ", test " << base.splits.test.size() << ")\n";

  std::string csv = std::string(kMetricsHeader) + "\n";
  std::string summary = "method,rank,lambda,C,validation,test\n";
  for (const std::string& name : s.methods) {
    const Method method = parse_method(name);
    const SweepResult result = sweep(repeats, method, grid, s.params);
    csv += metrics_rows(result, task);
    const SweepCell& best = result.cells[result.selected];
    const std::string line = std::string(method_name(method)) + "," + std::to_string(best.rank) +
                             "," + io::format_shortest(best.lambda) + "," + io::format_shortest(best.C) + "," +
                             io::format_shortest(best.mean.validation.primary) + "," +
                             io::format_shortest(best.mean.test.primary);
    summary += line + "\n";
    out << "selected " << line << '\n';
  }
  return {csv, summary};
}

template <class T>
std::vector<T> parse_numbers(const std::string& text, const char* what) {
  std::vector<T> values;
  for (const auto& part : io::split_list(text)) {
    if constexpr (std::is_floating_point_v<T>) values.push_back(io::parse_double(part, what));
    else {
      const long long v = io::parse_integer(part, what);
      if (v <= 0) throw ParameterError(std::string(what) + " must be positive");
      values.push_back(static_cast<T>(v));
    }
  }
  if (values.empty()) throw ParameterError(std::string("empty list for ") + what);
  return values;
}

// Config keys mirror the eval flags; paths are relative to the config file.
EvalSetup setup_from_config(const std::string& path, std::string& output_dir) {
  const auto cfg = io::load_config(path);
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : dir / fp).string();
  };
  static const std::set<std::string> known{
      "train", "validation", "test", "validation_fraction", "task", "methods", "labels_fraction",
      "ranks", "lambdas", "Cs", "repeats", "seed", "max_iterations", "tolerance",
      "fold_in_iterations", "classifier", "support_C", "output_dir"};
  for (const auto& [k, v] : cfg)
    if (!known.count(k)) throw ParseError(path + ": unknown key '" + k + "'");
  const auto need = [&](const std::string& k) {
    auto it = cfg.find(k);
    if (it == cfg.end()) throw ParseError(path + ": missing key '" + k + "'");
    return it->second;
  };
  EvalSetup s;
  s.train = resolve(need("train"));
  s.test = resolve(need("test"));
  s.task = need("task");
  output_dir = resolve(need("output_dir"));
  for (const auto& [k, v] : cfg) {
    if (k == "validation") s.validation = resolve(v);
    else if (k == "validation_fraction") s.validation_fraction = io::parse_double(v, k);
    else if (k == "methods") s.methods = io::split_list(v);
    else if (k == "labels_fraction") s.labels_fraction = io::parse_double(v, k);
    else if (k == "ranks") s.grid.ranks = parse_numbers<std::size_t>(v, "ranks");
    else if (k == "lambdas") s.grid.lambdas = parse_numbers<double>(v, "lambdas");
    else if (k == "Cs") s.grid.Cs = parse_numbers<double>(v, "Cs");
    else if (k == "repeats") s.repeats = parse_numbers<std::size_t>(v, "repeats").at(0);
    else if (k == "seed") s.seed = static_cast<std::uint64_t>(io::parse_integer(v, k));
    else if (k == "max_iterations") s.params.fit.max_iterations = parse_numbers<std::size_t>(v, k.c_str()).at(0);
    else if (k == "tolerance") s.params.fit.relative_tolerance = io::parse_double(v, k);
    else if (k == "fold_in_iterations") s.params.fold_in_iterations = parse_numbers<std::size_t>(v, k.c_str()).at(0);
    else if (k == "classifier") s.classifier = v;
    else if (k == "support_C") s.support_C = io::parse_double(v, k);
  }
  if (s.methods.empty()) throw ParseError(path + ": methods is empty");
  return s;
}

void apply_thread_cap(std::ostream& err) {
  const char* env = std::getenv("NMFALPHA_THREADS");
  if (!env || !*env) return;
  try {
    const long long threads = io::parse_integer(env, "NMFALPHA_THREADS");
    if (threads <= 0) throw ParseError("NMFALPHA_THREADS must be positive");
    kernels::set_max_threads(static_cast<int>(threads));
  } catch (const Error& e) {
    err << "warning: ignoring NMFALPHA_THREADS: " << e.what() << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised nonnegative matrix factorization"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::uint64_t seed = 0;
  FitOptions fit;
  std::string input, output, model_path, reducer_path, task = "binary";
  std::size_t rank = 0;
  double lambda = 1.0, labels_fraction = 1.0, svm_c = 1.0;
  std::string classifier = "svm";
  std::size_t perceptron_epochs = 100;
  std::size_t fold_iterations = 100;
  std::size_t instances = 100;
  std::string config;
  EvalSetup eval_setup;
  std::size_t eval_rank = 16;
  double eval_lambda = 1.0, eval_c = 1.0;

  auto* factorize_cmd = app.add_subcommand("factorize", "Unsupervised I-divergence NMF");
  factorize_cmd->add_option("--input", input, "Sparse label-line data")->required()->check(CLI::ExistingFile);
  factorize_cmd->add_option("--rank", rank, "Rank r")->required()->check(CLI::PositiveNumber);
  factorize_cmd->add_option("--seed", seed)->capture_default_str();
  factorize_cmd->add_option("--out", output, "Archive path")->required();
  add_fit_flags(factorize_cmd, fit);

  auto* semi_cmd = app.add_subcommand("semi", "NMF preserving classifier weight components");
  semi_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  semi_cmd->add_option("--labels-fraction", labels_fraction)->capture_default_str();
  semi_cmd->add_option("--task", task)->required()->check(CLI::IsMember({"binary", "multiway", "multilabel"}));
  semi_cmd->add_option("--rank", rank)->required()->check(CLI::PositiveNumber);
  semi_cmd->add_option("--lambda", lambda)->required();
  semi_cmd->add_option("--classifier", classifier)->check(CLI::IsMember({"svm", "perceptron"}))->capture_default_str();
  semi_cmd->add_option("--svm-c", svm_c)->capture_default_str();
  semi_cmd->add_option("--perceptron-epochs", perceptron_epochs)->capture_default_str();
  semi_cmd->add_option("--seed", seed)->capture_default_str();
  semi_cmd->add_option("--out", output)->required();
  add_fit_flags(semi_cmd, fit);

  std::string baseline_method;
  auto* baseline_cmd = app.add_subcommand("baseline", "Fit a comparison reducer (pca, lda, ssnmf_lee, cnmf_liu)");
  baseline_cmd->add_option("--method", baseline_method)->required()->check(CLI::IsMember({"pca", "lda", "ssnmf_lee", "cnmf_liu"}));
  baseline_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  baseline_cmd->add_option("--task", task)->check(CLI::IsMember({"binary", "multiway", "multilabel"}))->capture_default_str();
  baseline_cmd->add_option("--labels-fraction", labels_fraction)->capture_default_str();
  baseline_cmd->add_option("--rank", rank)->required()->check(CLI::PositiveNumber);
  baseline_cmd->add_option("--lambda", lambda)->capture_default_str();
  baseline_cmd->add_option("--seed", seed)->capture_default_str();
  baseline_cmd->add_option("--out", output)->required();
  add_fit_flags(baseline_cmd, fit);

  auto* embed_cmd = app.add_subcommand("embed", "Map examples through a saved reducer");
  embed_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", output, "CSV, one line per example")->required();
  embed_cmd->add_option("--fold-in-iters", fold_iterations)->capture_default_str();
  embed_cmd->add_option("--seed", seed)->capture_default_str();

  auto* train_cmd = app.add_subcommand("svm-train", "Train linear SVMs on raw or reduced data");
  train_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--task", task)->required()->check(CLI::IsMember({"binary", "multiway", "multilabel"}));
  train_cmd->add_option("--C", svm_c)->capture_default_str();
  train_cmd->add_option("--reducer", reducer_path)->check(CLI::ExistingFile);
  train_cmd->add_option("--fold-in-iters", fold_iterations)->capture_default_str();
  train_cmd->add_option("--seed", seed)->capture_default_str();
  train_cmd->add_option("--out", output)->required();

  auto* predict_cmd = app.add_subcommand("predict", "Predict labels with a saved classifier");
  predict_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--reducer", reducer_path)->check(CLI::ExistingFile);
  predict_cmd->add_option("--fold-in-iters", fold_iterations)->capture_default_str();
  predict_cmd->add_option("--seed", seed)->capture_default_str();
  predict_cmd->add_option("--out", output, "One predicted label field per line")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Reduce, classify and score one configuration");
  eval_cmd->add_option("--train", eval_setup.train)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--validation", eval_setup.validation)->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", eval_setup.test)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--validation-fraction", eval_setup.validation_fraction)->capture_default_str();
  eval_cmd->add_option("--task", eval_setup.task)->required()->check(CLI::IsMember({"binary", "multiway", "multilabel"}));
  eval_cmd->add_option("--method", eval_setup.methods, "One or more methods")->capture_default_str();
  eval_cmd->add_option("--labels-fraction", eval_setup.labels_fraction)->capture_default_str();
  eval_cmd->add_option("--rank", eval_rank)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--lambda", eval_lambda)->capture_default_str();
  eval_cmd->add_option("--C", eval_c)->capture_default_str();
  eval_cmd->add_option("--repeats", eval_setup.repeats)->capture_default_str();
  eval_cmd->add_option("--classifier", eval_setup.classifier)->check(CLI::IsMember({"svm", "perceptron"}))->capture_default_str();
  eval_cmd->add_option("--fold-in-iters", eval_setup.params.fold_in_iterations)->capture_default_str();
  eval_cmd->add_option("--seed", eval_setup.seed)->capture_default_str();
  eval_cmd->add_option("--out", output, "Metrics CSV")->required();
  add_fit_flags(eval_cmd, eval_setup.params.fit);

  auto* sweep_cmd = app.add_subcommand("sweep", "Validation-driven grid sweep from a config file");
  sweep_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* verify_cmd = app.add_subcommand("verify", "Self-checks of the semi-supervised updates");
  verify_cmd->add_option("--seed", seed)->capture_default_str();
  verify_cmd->add_option("--instances", instances)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  apply_thread_cap(err);
  const WarningSink previous = set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(std::move(sink)); }
  } restore{previous};

  try {
    fit.seed = seed;
    if (*factorize_cmd) {
      out << "seed = " << seed << '\n';
      const io::SparseDataset data = io::parse_sparse_dataset(input);
      const Factorization f = factorize(data.X, rank, fit);
      io::ModelArchive a = factorization_archive("nmf", f, fit, data.X.rows(), data.X.cols());
      io::save_model(output, a);
      print_trace(out, f);
    } else if (*semi_cmd) {
      out << "seed = " << seed << '\n';
      const io::SparseDataset data = io::parse_sparse_dataset(input);
      const Task t = parse_task(task);
      LabeledDataset base;
      base.labels = labels_for(t, data.label_ids);
      base.X = std::make_shared<const NonNegMatrix>(data.X);
      for (std::size_t j = 0; j < data.X.cols(); ++j) base.splits.train_unlabeled.push_back(j);
      const LabeledDataset split = make_splits(base, labels_fraction, seed, 1).front();
      const auto& labeled = split.splits.train_labeled;

      EnsembleOptions options;
      options.source = classifier == "svm" ? SupportSource::svm : SupportSource::perceptron;
      options.perceptron_epochs = perceptron_epochs;
      const NonNegMatrix x_labeled = data.X.select_columns(labeled);
      const ClassifierEnsemble ensemble =
          train_ensemble(x_labeled, base.labels.subset(labeled), svm_c, options);
      std::vector<LinearModel> models;
      for (const auto& m : ensemble.members) models.push_back(m.model);
      const SupportMatrix s = build_support_matrix(models, data.X.cols(), labeled);
      out << "labeled = " << labeled.size() << " of " << data.X.cols() << ", classifiers = " << s.p
          << '\n';

      const Factorization f = semi_factorize(data.X, s, rank, lambda, fit);
      io::ModelArchive a = factorization_archive("nmf_alpha", f, fit, data.X.rows(), data.X.cols());
      a.set("task", task);
      a.set("lambda", format_double(lambda));
      a.set("classifier", classifier);
      a.set("svm_c", format_double(svm_c));
      a.set("labels_fraction", format_double(labels_fraction));
      a.set("classifiers", std::to_string(s.p));
      a.add_block("labeled", index_block(labeled));
      io::save_model(output, a);
      print_trace(out, f);
    } else if (*baseline_cmd) {
      out << "seed = " << seed << '\n';
      const io::SparseDataset data = io::parse_sparse_dataset(input);
      io::ModelArchive a;
      if (baseline_method == "pca") {
        const PcaModel m = pca_fit(data.X, rank);
        a.kind = "pca";
        a.set("rank", std::to_string(rank));
        a.add_block("components", m.components);
        a.add_block("mean", Dense(m.mean.size(), 1, m.mean));
        a.add_block("variances", row_block(m.variances));
      } else {
        LabeledDataset base;
        base.labels = labels_for(parse_task(task), data.label_ids);
        base.X = std::make_shared<const NonNegMatrix>(data.X);
        for (std::size_t j = 0; j < data.X.cols(); ++j) base.splits.train_unlabeled.push_back(j);
        const auto labeled = make_splits(base, labels_fraction, seed, 1).front().splits.train_labeled;
        const Labels labeled_labels = base.labels.subset(labeled);
        if (baseline_method == "lda") {
          const LdaModel m = lda_fit(data.X.select_columns(labeled), labeled_labels, rank);
          a.kind = "lda";
          a.set("rank", std::to_string(rank));
          a.add_block("projections", m.projections);
        } else {
          const LabelMatrix y = make_label_matrix(labeled_labels, labeled);
          if (baseline_method == "ssnmf_lee") {
            const SsnmfResult r = ssnmf_lee_factorize(data.X, y, rank, lambda, fit);
            a = factorization_archive("ssnmf", r.fit, fit, data.X.rows(), data.X.cols());
            a.set("lambda", format_double(lambda));
            a.add_block("U", r.U);
            print_trace(out, r.fit);
          } else {
            const CnmfResult r = cnmf_liu_factorize(data.X, y, rank, fit);
            a = factorization_archive("cnmf", r.fit, fit, data.X.rows(), data.X.cols());
            a.add_block("Q", r.factors.Q);
            a.add_block("H_unlabeled", r.factors.H_unlabeled);
            print_trace(out, r.fit);
          }
          a.add_block("labeled", index_block(labeled));
        }
        a.set("task", task);
        a.set("labels_fraction", format_double(labels_fraction));
      }
      a.set("seed", std::to_string(seed));
      io::save_model(output, a);
    } else if (*embed_cmd) {
      out << "seed = " << seed << '\n';
      const io::ModelArchive model = io::load_model(model_path);
      const io::SparseDataset data = io::parse_sparse_dataset(input);
      const Dense z = reduce_with(model, data.X, fold_iterations, seed);
      std::string csv;
      for (std::size_t j = 0; j < z.cols(); ++j) {
        for (std::size_t k = 0; k < z.rows(); ++k) csv += (k ? "," : "") + format_double(z(k, j));
        csv += '\n';
      }
      write_file(output, csv);
      out << "embedded " << z.cols() << " examples into " << z.rows() << " dimensions\n";
    } else if (*train_cmd || *predict_cmd) {
      out << "seed = " << seed << '\n';
      const io::SparseDataset data = io::parse_sparse_dataset(input);
      std::optional<Dense> reduced;
      if (!reducer_path.empty()) reduced = reduce_with(io::load_model(reducer_path), data.X, fold_iterations, seed);
      const FeatureView features = reduced ? FeatureView(*reduced) : FeatureView(data.X);

      if (*train_cmd) {
        const Task t = parse_task(task);
        const Labels labels = labels_for(t, data.label_ids);
        EnsembleOptions options;
        options.svm.seed = seed;
        const ClassifierEnsemble e = train_ensemble(features, labels, svm_c, options);
        io::ModelArchive a = ensemble_archive(e, labels, svm_c);
        a.set("seed", std::to_string(seed));
        if (!reducer_path.empty()) a.set("reducer", std::filesystem::path(reducer_path).filename().string());
        io::save_model(output, a);
        std::size_t trained = 0;
        for (const auto& m : e.members) trained += m.trained ? 1 : 0;
        out << "trained " << trained << " of " << e.members.size() << " classifiers\n";
      } else {
        const io::ModelArchive a = io::load_model(model_path);
        ClassifierEnsemble e = ensemble_from(a);
        const std::vector<int> class_ids = parse_id_list(a.require("class_ids"));
        if (features.dim() > e.dimension) throw DimensionError("input has more features than the classifier");
        std::optional<NonNegMatrix> padded;
        FeatureView view = features;
        if (!reduced && features.dim() < e.dimension) {
          padded = data.X.with_rows(e.dimension);
          view = FeatureView(*padded);
        }
        if (view.dim() != e.dimension) throw DimensionError("feature dimension differs from the classifier");
        const LabelSets predicted = predict(e, view);
        std::string lines;
        for (const auto& set : predicted) {
          std::string field;
          for (std::size_t c : set) {
            const int id = class_ids.at(c);
            if (!field.empty()) field += ',';
            if (e.task == Task::binary && id > 0) field += '+';
            field += std::to_string(id);
          }
          lines += field + '\n';
        }
        write_file(output, lines);

        // Score when every example carries known labels.
        bool scorable = true;
        LabelSets truth;
        for (const auto& ids : data.label_ids) {
          std::vector<std::size_t> set;
          for (int id : ids) {
            const auto it = std::find(class_ids.begin(), class_ids.end(), id);
            if (it == class_ids.end()) scorable = false;
            else set.push_back(static_cast<std::size_t>(it - class_ids.begin()));
          }
          if (ids.empty() && e.task != Task::multilabel) scorable = false;
          std::sort(set.begin(), set.end());
          truth.push_back(std::move(set));
        }
        if (scorable) {
          out << "accuracy = " << format_double(accuracy(predicted, truth)) << '\n';
          if (e.task == Task::multilabel) {
            const FMeasures f = f_measures(predicted, truth, e.num_classes);
            out << "macro_f = " << format_double(f.macro) << "\nmicro_f = " << format_double(f.micro)
                << "\ncombined_f = " << format_double(f.combined) << '\n';
          }
        }
      }
    } else if (*eval_cmd) {
      eval_setup.grid.ranks = {eval_rank};
      eval_setup.grid.lambdas = {eval_lambda};
      eval_setup.grid.Cs = {eval_c};
      auto [csv, summary] = run_sweeps(eval_setup, out);
      write_file(output, csv);
    } else if (*sweep_cmd) {
      std::string output_dir;
      EvalSetup s = setup_from_config(config, output_dir);
      std::filesystem::create_directories(output_dir);
      auto [csv, summary] = run_sweeps(s, out);
      write_file((std::filesystem::path(output_dir) / "metrics.csv").string(), csv);
      write_file((std::filesystem::path(output_dir) / "selected.csv").string(), summary);
    } else if (*verify_cmd) {
      out << "seed = " << seed << '\n';
      bool all = true;
      for (const CheckResult& c : self_checks(seed, instances)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.instances << " instances)";
        if (!c.passed) out << ": " << c.detail;
        out << '\n';
        all = all && c.passed;
      }
      out << (all ? "PASS" : "FAIL") << '\n';
      return all ? kSuccess : kDataError;
    }
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kSuccess;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace nmfa::cli
