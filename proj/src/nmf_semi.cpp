#include "nmfalpha/nmf_semi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "nmf_internal.hpp"

namespace nmfa {

namespace detail {

void unsup_v_step(kernels::Exec exec, DivergenceWorkspace& ws, Dense& v, const Dense& h);
void unsup_h_step(kernels::Exec exec, DivergenceWorkspace& ws, const Dense& v, Dense& h);

namespace {

double supervision_divergence(const Dense& xs, const Dense& vhs) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    for (std::size_t l = 0; l < xs.cols(); ++l) {
      const double target = xs(i, l);
      const double approx = vhs(i, l);
      if (target == 0.0) {
        total += approx;
      } else {
        total += target * std::log(target / std::max(approx, kDivergenceFloor)) - target + approx;
      }
    }
  }
  return total;
}

/// Terms of the update that involve S. XS is fixed for the whole fit; HS
/// follows H and VHS follows both blocks.
class SupervisionWorkspace {
 public:
  SupervisionWorkspace(const NonNegMatrix& x, const SupportMatrix& s)
      : s_(s.S), xs_(product(x, s.S)), rows_(s.S.rows()), row_sums_(s.S.rows(), 0.0) {
    for (std::size_t l = 0; l < s_.cols(); ++l) {
      s_.for_each_in_column(l, [&](std::size_t j, double value) {
        rows_[j].emplace_back(l, value);
        row_sums_[j] += value;
      });
    }
    for (std::size_t j = 0; j < rows_.size(); ++j)
      if (!rows_[j].empty()) support_rows_.push_back(j);
  }

  bool empty() const { return s_.cols() == 0; }

  void refresh_h(const Dense& h) { hs_ = product(h, s_); }

  /// Requires refresh_h for the current H. Returns D(XS, VHS).
  double refresh_v(kernels::Exec exec, const Dense& v) {
    kernels::gemm(exec, v, hs_, vhs_);
    q_ = Dense(xs_.rows(), xs_.cols());
    for (std::size_t i = 0; i < xs_.rows(); ++i)
      for (std::size_t l = 0; l < xs_.cols(); ++l)
        q_(i, l) = xs_(i, l) / std::max(vhs_(i, l), kDivergenceFloor);
    return supervision_divergence(xs_, vhs_);
  }

  /// (V^T Q S^T)_kj restricted to rows of S with support.
  Dense h_extra(kernels::Exec exec, const Dense& v) const {
    Dense t;
    kernels::gemm_tn(exec, v, q_, t);
    Dense extra(v.cols(), s_.rows());
    for (std::size_t j : support_rows_) {
      for (const auto& [l, value] : rows_[j])
        for (std::size_t k = 0; k < v.cols(); ++k) extra(k, j) += t(k, l) * value;
    }
    return extra;
  }

  const Dense& hs() const { return hs_; }
  const Dense& q() const { return q_; }
  const std::vector<double>& row_sums_of_s() const { return row_sums_; }

 private:
  const NonNegMatrix& s_;
  Dense xs_;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
  std::vector<double> row_sums_;
  std::vector<std::size_t> support_rows_;
  Dense hs_;
  Dense vhs_;
  Dense q_;
};

void semi_v_step(kernels::Exec exec, DivergenceWorkspace& ws, SupervisionWorkspace& sup,
                 double lambda, Dense& v, const Dense& h) {
  if (sup.empty()) {
    unsup_v_step(exec, ws, v, h);
    return;
  }
  kernels::ratio_times_ht(exec, ws.pattern, ws.ratio, h, ws.numer);
  Dense extra;
  kernels::gemm_nt(exec, sup.q(), sup.hs(), extra);
  const auto h_sums = row_sums(h);
  const auto hs_sums = row_sums(sup.hs());
  ws.denom = Dense(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t k = 0; k < v.cols(); ++k) {
      ws.numer(i, k) += lambda * extra(i, k);
      ws.denom(i, k) = h_sums[k] + lambda * hs_sums[k];
    }
  }
  kernels::scale(exec, v, ws.numer, ws.denom);
}

void semi_h_step(kernels::Exec exec, DivergenceWorkspace& ws, SupervisionWorkspace& sup,
                 double lambda, const Dense& v, Dense& h) {
  if (sup.empty()) {
    unsup_h_step(exec, ws, v, h);
    return;
  }
  kernels::vt_times_ratio(exec, ws.pattern, ws.ratio, v, ws.numer);
  const Dense extra = sup.h_extra(exec, v);
  const auto v_sums = column_sums(v);
  const auto& s_sums = sup.row_sums_of_s();
  ws.denom = Dense(h.rows(), h.cols());
  for (std::size_t k = 0; k < h.rows(); ++k) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      ws.numer(k, j) += lambda * extra(k, j);
      ws.denom(k, j) = v_sums[k] * (1.0 + lambda * s_sums[j]);
    }
  }
  kernels::scale(exec, h, ws.numer, ws.denom);
}

void check_support(const NonNegMatrix& x, const SupportMatrix& s) {
  if (s.S.rows() != x.cols()) {
    throw DimensionError("support matrix has " + std::to_string(s.S.rows()) +
                         " rows but data has " + std::to_string(x.cols()) + " columns");
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be >= 0");
}

}  // namespace
}  // namespace detail

SupportMatrix build_support_matrix(std::span<const LinearModel> models, std::size_t n,
                                   std::size_t m) {
  if (m > n) throw IndexError("labeled count exceeds example count");
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return build_support_matrix(models, n, rows);
}

SupportMatrix build_support_matrix(std::span<const LinearModel> models, std::size_t n,
                                   std::span<const std::size_t> labeled_rows) {
  std::vector<std::size_t> sorted(labeled_rows.begin(), labeled_rows.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw IndexError("labeled rows contain duplicates");
  }
  if (!sorted.empty() && sorted.back() >= n) throw IndexError("labeled row exceeds example count");

  const std::size_t p = models.size();
  std::vector<std::vector<SparseEntry>> columns(2 * p);
  std::vector<SupportColumn> meta(2 * p);
  for (std::size_t tau = 0; tau < p; ++tau) {
    meta[tau] = {tau, SupportSign::positive};
    meta[p + tau] = {tau, SupportSign::negative};
    const LinearModel& model = models[tau];
    bool any = false;
    for (const auto& [example, alpha] : model.alphas) {
      if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw DomainError("classifier " + std::to_string(tau) + " has a negative coefficient");
      }
      if (example >= labeled_rows.size()) {
        throw IndexError("classifier " + std::to_string(tau) + " references example " +
                         std::to_string(example) + " beyond the " +
                         std::to_string(labeled_rows.size()) + " labeled examples");
      }
      const auto label = model.labels.find(example);
      if (label == model.labels.end()) {
        throw IndexError("classifier " + std::to_string(tau) + " has no label for example " +
                         std::to_string(example));
      }
      if (alpha == 0.0) continue;
      any = true;
      const std::size_t column = label->second > 0 ? tau : p + tau;
      columns[column].push_back({labeled_rows[example], alpha});
    }
    if (!any) warn("classifier " + std::to_string(tau) + " has no support vectors");
  }
  for (auto& column : columns) {
    std::sort(column.begin(), column.end(),
              [](const SparseEntry& a, const SparseEntry& b) { return a.row < b.row; });
  }

  SupportMatrix s;
  s.S = NonNegMatrix::from_columns(n, columns);
  s.p = p;
  s.labeled_count = labeled_rows.size();
  s.labeled_rows = std::move(sorted);
  s.column_meta = std::move(meta);
  return s;
}

SemiLossReport semi_loss(const NonNegMatrix& x, const Dense& v, const Dense& h,
                         const SupportMatrix& s, double lambda, kernels::Exec exec) {
  detail::check_shapes(x, v, h);
  detail::check_support(x, s);
  detail::check_lambda(lambda);
  SemiLossReport report;
  report.lambda = lambda;
  report.reconstruction_term = unsup_loss(x, v, h, exec);
  detail::SupervisionWorkspace sup(x, s);
  sup.refresh_h(h);
  report.supervision_term = sup.refresh_v(exec, v);
  report.total = report.reconstruction_term + lambda * report.supervision_term;
  return report;
}

FactorPair update_semi(const NonNegMatrix& x, const Dense& v, const Dense& h,
                       const SupportMatrix& s, double lambda, kernels::Exec exec) {
  detail::check_shapes(x, v, h);
  detail::check_support(x, s);
  detail::check_lambda(lambda);
  detail::DivergenceWorkspace ws(x);
  detail::SupervisionWorkspace sup(x, s);
  FactorPair next{v, h};

  ws.refresh(exec, next.V, next.H);
  sup.refresh_h(next.H);
  sup.refresh_v(exec, next.V);
  detail::semi_v_step(exec, ws, sup, lambda, next.V, next.H);

  ws.refresh(exec, next.V, next.H);
  sup.refresh_v(exec, next.V);
  detail::semi_h_step(exec, ws, sup, lambda, next.V, next.H);
  return next;
}

Factorization semi_factorize(const NonNegMatrix& x, const SupportMatrix& s, std::size_t rank,
                             double lambda, const FitOptions& options) {
  options.validate();
  detail::check_support(x, s);
  detail::check_lambda(lambda);
  if (rank == 0) throw DimensionError("semi_factorize: rank must be at least 1");
  detail::warn_on_rank(x.rows(), x.cols(), rank);

  auto [v, h] = init_factors(x.rows(), x.cols(), rank, options.seed);
  detail::DivergenceWorkspace ws(x);
  detail::SupervisionWorkspace sup(x, s);
  const auto exec = options.exec;

  const auto total_loss = [&]() {
    const double reconstruction = ws.refresh(exec, v, h);
    sup.refresh_h(h);
    const double supervision = sup.refresh_v(exec, v);
    return reconstruction + lambda * supervision;
  };

  Factorization fit;
  fit.rank = rank;
  fit.seed = options.seed;
  double loss = total_loss();
  fit.loss_trace.push_back(loss);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    detail::semi_v_step(exec, ws, sup, lambda, v, h);
    ws.refresh(exec, v, h);
    sup.refresh_v(exec, v);
    detail::semi_h_step(exec, ws, sup, lambda, v, h);
    const double next = total_loss();
    fit.iterations_run = it;
    const bool done = detail::converged(loss, next, options.relative_tolerance) ||
                      it == options.max_iterations;
    if (it % options.loss_record_stride == 0 || done) fit.loss_trace.push_back(next);
    loss = next;
    if (done) break;
  }
  fit.V = std::move(v);
  fit.H = std::move(h);
  return fit;
}

// ---------------------------------------------------------------------------
// Verification tools: plain loops, no kernels.

namespace {

struct PlainProducts {
  Dense vh;   // d x n
  Dense xs;   // d x L
  Dense hs;   // r x L
  Dense vhs;  // d x L
};

PlainProducts plain_products(const NonNegMatrix& x, const Dense& v, const Dense& h,
                             const NonNegMatrix& s) {
  const std::size_t d = x.rows(), n = x.cols(), r = v.cols(), L = s.cols();
  PlainProducts out{Dense(d, n), Dense(d, L), Dense(r, L), Dense(d, L)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < r; ++k) out.vh(i, j) += v(i, k) * h(k, j);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t j = 0; j < n; ++j) {
      const double sjl = s.at(j, l);
      if (sjl == 0.0) continue;
      for (std::size_t i = 0; i < d; ++i) out.xs(i, l) += x.at(i, j) * sjl;
      for (std::size_t k = 0; k < r; ++k) out.hs(k, l) += h(k, j) * sjl;
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t k = 0; k < r; ++k) out.vhs(i, l) += v(i, k) * out.hs(k, l);
  return out;
}

void check_auxiliary_size(const NonNegMatrix& x, std::size_t r, std::size_t L) {
  const double cells = static_cast<double>(x.rows()) * static_cast<double>(x.cols()) *
                       static_cast<double>(r) * static_cast<double>(std::max<std::size_t>(L, 1));
  if (cells > static_cast<double>(kMaxAuxiliaryCells)) {
    throw ParameterError("auxiliary bound is limited to d*n*r*2p <= 1e7 cells");
  }
}

// a log(a / b) with the 0 log 0 = 0 convention.
double xlogx_ratio(double a, double b) {
  if (a == 0.0) return 0.0;
  return a * std::log(a / b);
}

}  // namespace

AuxiliaryWeights canonical_weights(const NonNegMatrix& x, const Dense& v, const Dense& h,
                                   const SupportMatrix& s) {
  detail::check_shapes(x, v, h);
  detail::check_support(x, s);
  const std::size_t d = x.rows(), n = x.cols(), r = v.cols(), L = s.S.cols();
  check_auxiliary_size(x, r, L);
  const PlainProducts pp = plain_products(x, v, h, s.S);

  AuxiliaryWeights w;
  w.eta.assign(d * n * r, 0.0);
  w.psi.assign(d * L * n * r, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < r; ++k)
        w.eta[(i * n + j) * r + k] = v(i, k) * h(k, j) / std::max(pp.vh(i, j), kDivergenceFloor);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t l = 0; l < L; ++l) {
      const double denom = pp.vhs(i, l);
      if (denom == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double sjl = s.S.at(j, l);
        if (sjl == 0.0) continue;
        for (std::size_t k = 0; k < r; ++k)
          w.psi[((i * L + l) * n + j) * r + k] = v(i, k) * h(k, j) * sjl / denom;
      }
    }
  }
  return w;
}

BoundReport auxiliary_bound(const NonNegMatrix& x, const Dense& v, const Dense& h,
                            const SupportMatrix& s, double lambda,
                            const AuxiliaryWeights& weights) {
  detail::check_shapes(x, v, h);
  detail::check_support(x, s);
  detail::check_lambda(lambda);
  const std::size_t d = x.rows(), n = x.cols(), r = v.cols(), L = s.S.cols();
  check_auxiliary_size(x, r, L);
  if (weights.eta.size() != d * n * r || weights.psi.size() != d * L * n * r) {
    throw DimensionError("auxiliary weights do not match the problem size");
  }
  const PlainProducts pp = plain_products(x, v, h, s.S);

  double reconstruction = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double xij = x.at(i, j);
      for (std::size_t k = 0; k < r; ++k) {
        const double eta = weights.eta[(i * n + j) * r + k];
        reconstruction += xlogx_ratio(xij * eta, v(i, k) * h(k, j));
      }
      reconstruction += pp.vh(i, j) - xij;
    }
  }

  double supervision = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t l = 0; l < L; ++l) {
      const double target = pp.xs(i, l);
      for (std::size_t j = 0; j < n; ++j) {
        const double sjl = s.S.at(j, l);
        for (std::size_t k = 0; k < r; ++k) {
          const double psi = weights.psi[((i * L + l) * n + j) * r + k];
          if (target * psi == 0.0) continue;
          supervision += xlogx_ratio(target * psi, v(i, k) * h(k, j) * sjl);
        }
      }
      supervision += pp.vhs(i, l) - target;
    }
  }

  BoundReport report;
  report.bound = reconstruction + lambda * supervision;
  report.loss = semi_loss(x, v, h, s, lambda).total;
  return report;
}

BoundReport auxiliary_bound(const NonNegMatrix& x, const Dense& v, const Dense& h,
                            const SupportMatrix& s, double lambda) {
  return auxiliary_bound(x, v, h, s, lambda, canonical_weights(x, v, h, s));
}

Dense closed_form_v_step(const NonNegMatrix& x, const Dense& v, const Dense& h,
                         const SupportMatrix& s, double lambda) {
  detail::check_shapes(x, v, h);
  detail::check_support(x, s);
  detail::check_lambda(lambda);
  const std::size_t d = x.rows(), n = x.cols(), r = v.cols(), L = s.S.cols();
  const PlainProducts pp = plain_products(x, v, h, s.S);

  Dense out(d, r);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      double numer = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double eta = v(i, k) * h(k, j) / std::max(pp.vh(i, j), kDivergenceFloor);
        numer += x.at(i, j) * eta;
      }
      double supervised = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        const double denom = std::max(pp.vhs(i, l), kDivergenceFloor);
        for (std::size_t j = 0; j < n; ++j) {
          const double psi = v(i, k) * h(k, j) * s.S.at(j, l) / denom;
          supervised += pp.xs(i, l) * psi;
        }
      }
      double h_mass = 0.0;
      for (std::size_t j = 0; j < n; ++j) h_mass += h(k, j);
      double hs_mass = 0.0;
      for (std::size_t l = 0; l < L; ++l) hs_mass += pp.hs(k, l);
      out(i, k) = (numer + lambda * supervised) / std::max(h_mass + lambda * hs_mass, kDivergenceFloor);
    }
  }
  return out;
}

}  // namespace nmfa
