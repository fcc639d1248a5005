#include "nmfalpha/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "nmf_internal.hpp"
#include "nmfalpha/log.hpp"

namespace nmfa {

namespace detail {
Dense uniform_block(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
}

namespace {

using kernels::Exec;

void check_label_matrix(const NonNegMatrix& x, const LabelMatrix& y) {
  if (y.Y.cols() != y.columns.size()) {
    throw DimensionError("label matrix has " + std::to_string(y.Y.cols()) + " columns for " +
                         std::to_string(y.columns.size()) + " labeled examples");
  }
  std::vector<std::size_t> sorted = y.columns;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw IndexError("labeled columns contain duplicates");
  }
  if (!sorted.empty() && sorted.back() >= x.cols()) {
    throw IndexError("labeled column exceeds data columns");
  }
}

// Squared-loss multiplicative step for V: V <- V * (X H^T) / (V H H^T).
void frobenius_v_step(Exec exec, const kernels::Pattern& pattern, Dense& v, const Dense& h) {
  Dense numer, hht, denom;
  kernels::ratio_times_ht(exec, pattern, pattern.values(), h, numer);
  kernels::gemm_nt(exec, h, h, hht);
  kernels::gemm(exec, v, hht, denom);
  kernels::scale(exec, v, numer, denom);
}

double squared_distance(const Dense& a, const Dense& b) {
  double total = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double e = a.values()[t] - b.values()[t];
    total += e * e;
  }
  return total;
}

Dense labeled_block(const Dense& h, std::span<const std::size_t> columns) {
  return h.select_columns(columns);
}

}  // namespace

LabelMatrix make_label_matrix(const Labels& labels, std::span<const std::size_t> columns) {
  if (labels.size() != columns.size()) {
    throw DimensionError("one label set per labeled column is required");
  }
  LabelMatrix out{Dense(labels.num_classes, columns.size()),
                  std::vector<std::size_t>(columns.begin(), columns.end())};
  for (std::size_t t = 0; t < labels.size(); ++t)
    for (std::size_t c : labels.sets[t]) out.Y(c, t) = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Regression-coupled SSNMF

double ssnmf_lee_objective(const NonNegMatrix& x, const LabelMatrix& y, const Dense& v,
                           const Dense& h, const Dense& u, double lambda) {
  detail::check_shapes(x, v, h);
  check_label_matrix(x, y);
  const kernels::Pattern pattern(x);
  double total = kernels::squared_residual(Exec::serial, pattern, v, h);
  if (y.Y.cols() > 0) {
    const Dense fit = product(u, labeled_block(h, y.columns));
    total += lambda * squared_distance(y.Y, fit);
  }
  return total;
}

SsnmfResult ssnmf_lee_factorize(const NonNegMatrix& x, const LabelMatrix& y, std::size_t rank,
                                double lambda, const FitOptions& options) {
  options.validate();
  check_label_matrix(x, y);
  if (rank == 0) throw DimensionError("ssnmf_lee_factorize: rank must be at least 1");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  detail::warn_on_rank(x.rows(), x.cols(), rank);

  const Exec exec = options.exec;
  std::mt19937_64 rng(options.seed);
  Dense v = detail::uniform_block(x.rows(), rank, rng);
  Dense h = detail::uniform_block(rank, x.cols(), rng);
  Dense u = detail::uniform_block(y.Y.rows(), rank, rng);
  const kernels::Pattern pattern(x);
  const std::size_t m = y.columns.size();

  const auto objective = [&]() {
    double total = kernels::squared_residual(exec, pattern, v, h);
    if (m > 0) total += lambda * squared_distance(y.Y, product(u, labeled_block(h, y.columns)));
    return total;
  };

  SsnmfResult result;
  result.fit.rank = rank;
  result.fit.seed = options.seed;
  double loss = objective();
  result.fit.loss_trace.push_back(loss);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    frobenius_v_step(exec, pattern, v, h);

    // H <- H * (V^T X + lambda [U^T Y]_L) / (V^T V H + lambda [U^T U H_L]_L)
    Dense numer, vtv, denom;
    kernels::vt_times_ratio(exec, pattern, pattern.values(), v, numer);
    kernels::gemm_tn(exec, v, v, vtv);
    kernels::gemm(exec, vtv, h, denom);
    if (m > 0 && lambda > 0.0) {
      const Dense uty = transpose_product(u, y.Y);
      const Dense utu = transpose_product(u, u);
      const Dense coupled = product(utu, labeled_block(h, y.columns));
      for (std::size_t t = 0; t < m; ++t) {
        const std::size_t j = y.columns[t];
        for (std::size_t k = 0; k < rank; ++k) {
          numer(k, j) += lambda * uty(k, t);
          denom(k, j) += lambda * coupled(k, t);
        }
      }
    }
    kernels::scale(exec, h, numer, denom);

    // U <- U * (Y H_L^T) / (U H_L H_L^T)
    if (m > 0) {
      const Dense hl = labeled_block(h, y.columns);
      Dense u_numer, hlhl, u_denom;
      kernels::gemm_nt(exec, y.Y, hl, u_numer);
      kernels::gemm_nt(exec, hl, hl, hlhl);
      kernels::gemm(exec, u, hlhl, u_denom);
      kernels::scale(exec, u, u_numer, u_denom);
    }

    const double next = objective();
    result.fit.iterations_run = it;
    const bool done = detail::converged(loss, next, options.relative_tolerance) ||
                      it == options.max_iterations;
    if (it % options.loss_record_stride == 0 || done) result.fit.loss_trace.push_back(next);
    loss = next;
    if (done) break;
  }
  result.fit.V = std::move(v);
  result.fit.H = std::move(h);
  result.U = std::move(u);
  return result;
}

// ---------------------------------------------------------------------------
// Constrained NMF

Dense cnmf_assemble(const CnmfFactors& factors, const Dense& y, std::size_t n) {
  const std::size_t r = factors.Q.rows();
  Dense h(r, n);
  const Dense qy = product(factors.Q, y);
  for (std::size_t t = 0; t < factors.labeled_columns.size(); ++t)
    for (std::size_t k = 0; k < r; ++k) h(k, factors.labeled_columns[t]) = qy(k, t);
  for (std::size_t t = 0; t < factors.unlabeled_columns.size(); ++t)
    for (std::size_t k = 0; k < r; ++k)
      h(k, factors.unlabeled_columns[t]) = factors.H_unlabeled(k, t);
  return h;
}

CnmfResult cnmf_liu_factorize(const NonNegMatrix& x, const LabelMatrix& y, std::size_t rank,
                              const FitOptions& options) {
  options.validate();
  check_label_matrix(x, y);
  if (rank == 0) throw DimensionError("cnmf_liu_factorize: rank must be at least 1");
  detail::warn_on_rank(x.rows(), x.cols(), rank);

  const Exec exec = options.exec;
  const std::size_t n = x.cols();
  const std::size_t classes = y.Y.rows();

  CnmfFactors factors;
  factors.labeled_columns = y.columns;
  std::vector<bool> is_labeled(n, false);
  for (std::size_t j : y.columns) is_labeled[j] = true;
  for (std::size_t j = 0; j < n; ++j)
    if (!is_labeled[j]) factors.unlabeled_columns.push_back(j);

  std::mt19937_64 rng(options.seed);
  Dense v = detail::uniform_block(x.rows(), rank, rng);
  factors.Q = detail::uniform_block(rank, classes, rng);
  factors.H_unlabeled = detail::uniform_block(rank, factors.unlabeled_columns.size(), rng);
  Dense h = cnmf_assemble(factors, y.Y, n);
  const kernels::Pattern pattern(x);
  const std::size_t m = y.columns.size();

  CnmfResult result;
  result.fit.rank = rank;
  result.fit.seed = options.seed;
  double loss = kernels::squared_residual(exec, pattern, v, h);
  result.fit.loss_trace.push_back(loss);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    frobenius_v_step(exec, pattern, v, h);

    // P <- P * (V^T X A^T) / (V^T V P A A^T), written through H = P A.
    Dense g, vtv, k_mat;
    kernels::vt_times_ratio(exec, pattern, pattern.values(), v, g);
    kernels::gemm_tn(exec, v, v, vtv);
    kernels::gemm(exec, vtv, h, k_mat);

    if (m > 0) {
      const Dense q_numer = product(g.select_columns(y.columns), y.Y.transposed());
      const Dense q_denom = product(k_mat.select_columns(y.columns), y.Y.transposed());
      kernels::scale(exec, factors.Q, q_numer, q_denom);
    }
    if (!factors.unlabeled_columns.empty()) {
      const Dense u_numer = g.select_columns(factors.unlabeled_columns);
      const Dense u_denom = k_mat.select_columns(factors.unlabeled_columns);
      kernels::scale(exec, factors.H_unlabeled, u_numer, u_denom);
    }
    h = cnmf_assemble(factors, y.Y, n);

    const double next = kernels::squared_residual(exec, pattern, v, h);
    result.fit.iterations_run = it;
    const bool done = detail::converged(loss, next, options.relative_tolerance) ||
                      it == options.max_iterations;
    if (it % options.loss_record_stride == 0 || done) result.fit.loss_trace.push_back(next);
    loss = next;
    if (done) break;
  }
  result.fit.V = std::move(v);
  result.fit.H = std::move(h);
  result.factors = std::move(factors);
  return result;
}

Dense fold_in_frobenius(const NonNegMatrix& x, const Dense& v, std::size_t iterations,
                        std::uint64_t seed, Exec exec) {
  if (v.rows() != x.rows()) throw DimensionError("fold_in: basis rows differ from data rows");
  if (x.cols() == 0) return Dense(v.cols(), 0);
  std::mt19937_64 rng(seed);
  Dense h = detail::uniform_block(v.cols(), x.cols(), rng);
  const kernels::Pattern pattern(x);
  Dense numer, vtv, denom;
  kernels::vt_times_ratio(exec, pattern, pattern.values(), v, numer);
  kernels::gemm_tn(exec, v, v, vtv);
  for (std::size_t it = 0; it < iterations; ++it) {
    kernels::gemm(exec, vtv, h, denom);
    kernels::scale(exec, h, numer, denom);
  }
  return h;
}

// ---------------------------------------------------------------------------
// PCA

namespace {

using EigenMatrix = Eigen::MatrixXd;

// Columns ordered by decreasing eigenvalue.
void sorted_eigen(const EigenMatrix& m, Eigen::VectorXd& values, EigenMatrix& vectors) {
  Eigen::SelfAdjointEigenSolver<EigenMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
  values = solver.eigenvalues().reverse();
  vectors = solver.eigenvectors().rowwise().reverse();
}

void fix_sign(std::span<double> column_values) {
  std::size_t biggest = 0;
  for (std::size_t i = 1; i < column_values.size(); ++i)
    if (std::abs(column_values[i]) > std::abs(column_values[biggest])) biggest = i;
  if (column_values[biggest] < 0)
    for (double& value : column_values) value = -value;
}

// Replaces numerically empty columns of `basis` by unit vectors orthogonal
// to everything before them.
void complete_orthonormal(Dense& basis, std::size_t first_missing) {
  const std::size_t d = basis.rows();
  std::size_t candidate = 0;
  for (std::size_t c = first_missing; c < basis.cols(); ++c) {
    while (candidate < d) {
      std::vector<double> e(d, 0.0);
      e[candidate++] = 1.0;
      for (std::size_t prev = 0; prev < c; ++prev) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += basis(i, prev) * e[i];
        for (std::size_t i = 0; i < d; ++i) e[i] -= dot * basis(i, prev);
      }
      double norm = 0.0;
      for (double value : e) norm += value * value;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (std::size_t i = 0; i < d; ++i) basis(i, c) = e[i] / norm;
        break;
      }
    }
  }
}

// G_ab = x_a . x_b over columns, from a row-wise scatter of the entries.
Dense column_gram(const NonNegMatrix& x) {
  std::vector<std::vector<std::pair<std::size_t, double>>> by_row(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j)
    x.for_each_in_column(j, [&](std::size_t i, double value) { by_row[i].emplace_back(j, value); });
  Dense gram(x.cols(), x.cols());
  for (const auto& entries : by_row)
    for (const auto& [a, xa] : entries)
      for (const auto& [b, xb] : entries) gram(a, b) += xa * xb;
  return gram;
}

}  // namespace

PcaModel pca_fit(const NonNegMatrix& x, std::size_t rank) {
  const std::size_t d = x.rows();
  const std::size_t n = x.cols();
  if (rank == 0 || rank > std::min(d, n)) {
    throw ParameterError("pca: rank must be in [1, min(d, n)]");
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    x.for_each_in_column(j, [&](std::size_t i, double value) { model.mean[i] += value; });
  for (double& value : model.mean) value /= static_cast<double>(n);
  const auto& mu = model.mean;

  model.components = Dense(d, rank);
  model.variances.assign(rank, 0.0);
  Eigen::VectorXd values;
  EigenMatrix vectors;

  if (d <= n) {
    EigenMatrix cov = EigenMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::pair<std::size_t, double>> entries;
      x.for_each_in_column(j, [&](std::size_t i, double value) { entries.emplace_back(i, value); });
      for (const auto& [a, xa] : entries)
        for (const auto& [b, xb] : entries)
          cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += xa * xb;
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -=
            static_cast<double>(n) * mu[a] * mu[b];
    sorted_eigen(cov, values, vectors);
    for (std::size_t c = 0; c < rank; ++c) {
      for (std::size_t i = 0; i < d; ++i)
        model.components(i, c) = vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      model.variances[c] = std::max(values(static_cast<Eigen::Index>(c)), 0.0) / static_cast<double>(n);
    }
  } else {
    // Centered Gram: K_ij = x_i.x_j - mu.x_i - mu.x_j + mu.mu
    std::vector<double> projection(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      x.for_each_in_column(j, [&](std::size_t i, double value) { projection[j] += mu[i] * value; });
    double mu_norm = 0.0;
    for (double value : mu) mu_norm += value * value;
    const Dense gram = column_gram(x);
    EigenMatrix k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            gram(a, b) - projection[a] - projection[b] + mu_norm;
    sorted_eigen(k, values, vectors);
    const double top = std::max(values(0), 0.0);
    std::size_t filled = rank;
    for (std::size_t c = 0; c < rank; ++c) {
      const double lambda = values(static_cast<Eigen::Index>(c));
      if (!(lambda > 1e-12 * top) || top == 0.0) {
        filled = c;
        break;
      }
      // u = X_c a / sqrt(lambda) with X_c a = X a - mu (1^T a)
      double coefficient_sum = 0.0;
      std::vector<double> u(d, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double a = vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
        coefficient_sum += a;
        x.for_each_in_column(j, [&](std::size_t i, double value) { u[i] += a * value; });
      }
      const double inv = 1.0 / std::sqrt(lambda);
      for (std::size_t i = 0; i < d; ++i) model.components(i, c) = (u[i] - mu[i] * coefficient_sum) * inv;
      model.variances[c] = lambda / static_cast<double>(n);
    }
    if (filled < rank) complete_orthonormal(model.components, filled);
  }

  for (std::size_t c = 0; c < rank; ++c) {
    std::vector<double> column = model.components.column(c);
    fix_sign(column);
    for (std::size_t i = 0; i < d; ++i) model.components(i, c) = column[i];
  }
  return model;
}

Dense pca_project(const PcaModel& model, const NonNegMatrix& x) {
  const std::size_t d = model.components.rows();
  const std::size_t r = model.components.cols();
  if (x.rows() != d) throw DimensionError("pca_project: dimension mismatch");
  std::vector<double> offset(r, 0.0);
  for (std::size_t c = 0; c < r; ++c)
    for (std::size_t i = 0; i < d; ++i) offset[c] += model.components(i, c) * model.mean[i];
  Dense out(r, x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    x.for_each_in_column(j, [&](std::size_t i, double value) {
      for (std::size_t c = 0; c < r; ++c) out(c, j) += model.components(i, c) * value;
    });
    for (std::size_t c = 0; c < r; ++c) out(c, j) -= offset[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// LDA

LdaModel lda_fit(const NonNegMatrix& x, const Labels& labels, std::size_t rank) {
  if (labels.size() != x.cols()) throw DimensionError("lda: one label set per column is required");
  const std::size_t d = x.rows();
  const std::size_t m = x.cols();

  // (example, class) memberships; multilabel examples appear once per label.
  std::vector<std::pair<std::size_t, std::size_t>> members;
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t c : labels.sets[t]) members.emplace_back(t, c);
  std::vector<std::size_t> class_count(labels.num_classes, 0);
  for (const auto& [t, c] : members) ++class_count[c];
  const auto present = static_cast<std::size_t>(
      std::count_if(class_count.begin(), class_count.end(), [](std::size_t c) { return c > 0; }));
  if (present < 2) throw DegenerateLabelError("lda needs at least two classes");
  if (rank == 0 || rank > present - 1) {
    throw ParameterError("lda: rank must be in [1, classes - 1] = [1, " +
                         std::to_string(present - 1) + "]");
  }

  // Orthonormal basis B (d x q) of the span of the labeled examples. Both
  // scatter matrices live in this span and the ridge term is isotropic, so
  // the leading generalized eigenvectors do too.
  const Dense gram = column_gram(x);
  EigenMatrix g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram(a, b);
  Eigen::VectorXd g_values;
  EigenMatrix g_vectors;
  sorted_eigen(g, g_values, g_vectors);
  const double top = std::max(g_values(0), 0.0);
  std::size_t q = 0;
  while (q < m && top > 0.0 && g_values(static_cast<Eigen::Index>(q)) > 1e-12 * top) ++q;
  if (q == 0) throw DegenerateLabelError("lda: labeled examples are all zero");

  // Coordinates of each example in the basis: y_t = Lambda^{1/2} U^T e_t.
  EigenMatrix coords(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < q; ++c) {
    const double root = std::sqrt(g_values(static_cast<Eigen::Index>(c)));
    for (std::size_t t = 0; t < m; ++t)
      coords(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) =
          root * g_vectors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
  }

  const auto qi = static_cast<Eigen::Index>(q);
  Eigen::VectorXd overall = Eigen::VectorXd::Zero(qi);
  std::vector<Eigen::VectorXd> means(labels.num_classes, Eigen::VectorXd::Zero(qi));
  for (const auto& [t, c] : members) {
    means[c] += coords.col(static_cast<Eigen::Index>(t));
    overall += coords.col(static_cast<Eigen::Index>(t));
  }
  overall /= static_cast<double>(members.size());
  for (std::size_t c = 0; c < labels.num_classes; ++c)
    if (class_count[c] > 0) means[c] /= static_cast<double>(class_count[c]);

  EigenMatrix within = EigenMatrix::Zero(qi, qi);
  for (const auto& [t, c] : members) {
    const Eigen::VectorXd diff = coords.col(static_cast<Eigen::Index>(t)) - means[c];
    within += diff * diff.transpose();
  }
  EigenMatrix between = EigenMatrix::Zero(qi, qi);
  for (std::size_t c = 0; c < labels.num_classes; ++c) {
    if (class_count[c] == 0) continue;
    const Eigen::VectorXd diff = means[c] - overall;
    between += static_cast<double>(class_count[c]) * diff * diff.transpose();
  }
  double ridge = 1e-6 * within.trace() / static_cast<double>(d);
  if (!(ridge > 0.0)) ridge = 1e-12;
  within += ridge * EigenMatrix::Identity(qi, qi);

  Eigen::GeneralizedSelfAdjointEigenSolver<EigenMatrix> solver(between, within);
  if (solver.info() != Eigen::Success) throw DomainError("lda: generalized eigensolver failed");
  const EigenMatrix directions = solver.eigenvectors().rowwise().reverse();

  // Map back: w = B v with B = X U Lambda^{-1/2}.
  LdaModel model{Dense(d, rank)};
  for (std::size_t c = 0; c < rank; ++c) {
    std::vector<double> mix(m, 0.0);
    for (std::size_t b = 0; b < q; ++b) {
      const double scaled = directions(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) /
                            std::sqrt(g_values(static_cast<Eigen::Index>(b)));
      for (std::size_t t = 0; t < m; ++t)
        mix[t] += g_vectors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) * scaled;
    }
    std::vector<double> w(d, 0.0);
    for (std::size_t t = 0; t < m; ++t)
      x.for_each_in_column(t, [&](std::size_t i, double value) { w[i] += mix[t] * value; });
    double norm = 0.0;
    for (double value : w) norm += value * value;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& value : w) value /= norm;
    fix_sign(w);
    for (std::size_t i = 0; i < d; ++i) model.projections(i, c) = w[i];
  }
  return model;
}

Dense lda_project(const LdaModel& model, const NonNegMatrix& x) {
  const std::size_t d = model.projections.rows();
  const std::size_t r = model.projections.cols();
  if (x.rows() != d) throw DimensionError("lda_project: dimension mismatch");
  Dense out(r, x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j)
    x.for_each_in_column(j, [&](std::size_t i, double value) {
      for (std::size_t c = 0; c < r; ++c) out(c, j) += model.projections(i, c) * value;
    });
  return out;
}

}  // namespace nmfa
