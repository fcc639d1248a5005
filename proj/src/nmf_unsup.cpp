#include "nmfalpha/nmf_unsup.hpp"

#include <random>

#include "nmf_internal.hpp"

namespace nmfa {

namespace detail {

// V_ik <- V_ik * sum_j H_kj X_ij/(VH)_ij / sum_j H_kj, with ws.ratio valid
// for the incoming (V, H).
void unsup_v_step(kernels::Exec exec, DivergenceWorkspace& ws, Dense& v, const Dense& h) {
  kernels::ratio_times_ht(exec, ws.pattern, ws.ratio, h, ws.numer);
  const auto h_sums = row_sums(h);
  ws.denom = Dense(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t k = 0; k < v.cols(); ++k) ws.denom(i, k) = h_sums[k];
  kernels::scale(exec, v, ws.numer, ws.denom);
}

// H_kj <- H_kj * sum_i V_ik X_ij/(VH)_ij / sum_i V_ik, with ws.ratio valid
// for (V, H).
void unsup_h_step(kernels::Exec exec, DivergenceWorkspace& ws, const Dense& v, Dense& h) {
  kernels::vt_times_ratio(exec, ws.pattern, ws.ratio, v, ws.numer);
  const auto v_sums = column_sums(v);
  ws.denom = Dense(h.rows(), h.cols());
  for (std::size_t k = 0; k < h.rows(); ++k)
    for (std::size_t j = 0; j < h.cols(); ++j) ws.denom(k, j) = v_sums[k];
  kernels::scale(exec, h, ws.numer, ws.denom);
}

Dense uniform_block(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.1, 1.1);
  Dense out(rows, cols);
  for (double& value : out.values()) value = dist(rng);
  return out;
}

}  // namespace detail

void FitOptions::validate() const {
  if (max_iterations == 0) throw ParameterError("max_iterations must be at least 1");
  if (!(relative_tolerance >= 0.0)) throw ParameterError("relative_tolerance must be >= 0");
  if (loss_record_stride == 0) throw ParameterError("loss_record_stride must be at least 1");
}

FactorPair init_factors(std::size_t d, std::size_t n, std::size_t r, std::uint64_t seed) {
  if (d == 0 || n == 0 || r == 0) throw DimensionError("init_factors: zero dimension");
  std::mt19937_64 rng(seed);
  FactorPair pair;
  pair.V = detail::uniform_block(d, r, rng);
  pair.H = detail::uniform_block(r, n, rng);
  return pair;
}

double unsup_loss(const NonNegMatrix& x, const Dense& v, const Dense& h, kernels::Exec exec) {
  detail::check_shapes(x, v, h);
  detail::DivergenceWorkspace ws(x);
  return ws.refresh(exec, v, h);
}

FactorPair update_unsup(const NonNegMatrix& x, const Dense& v, const Dense& h,
                        kernels::Exec exec) {
  detail::check_shapes(x, v, h);
  detail::DivergenceWorkspace ws(x);
  FactorPair next{v, h};
  ws.refresh(exec, next.V, next.H);
  detail::unsup_v_step(exec, ws, next.V, next.H);
  ws.refresh(exec, next.V, next.H);
  detail::unsup_h_step(exec, ws, next.V, next.H);
  return next;
}

Factorization factorize(const NonNegMatrix& x, std::size_t rank, const FitOptions& options) {
  options.validate();
  if (rank == 0) throw DimensionError("factorize: rank must be at least 1");
  detail::warn_on_rank(x.rows(), x.cols(), rank);

  auto [v, h] = init_factors(x.rows(), x.cols(), rank, options.seed);
  detail::DivergenceWorkspace ws(x);
  const auto exec = options.exec;

  Factorization fit;
  fit.rank = rank;
  fit.seed = options.seed;
  double loss = ws.refresh(exec, v, h);
  fit.loss_trace.push_back(loss);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    detail::unsup_v_step(exec, ws, v, h);
    ws.refresh(exec, v, h);
    detail::unsup_h_step(exec, ws, v, h);
    const double next = ws.refresh(exec, v, h);
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

Dense fold_in(const NonNegMatrix& x, const Dense& v, std::size_t iterations, std::uint64_t seed,
              kernels::Exec exec) {
  if (v.rows() != x.rows()) throw DimensionError("fold_in: basis rows differ from data rows");
  if (v.cols() == 0) throw DimensionError("fold_in: empty basis");
  if (x.cols() == 0) return Dense(v.cols(), 0);
  std::mt19937_64 rng(seed);
  Dense h = detail::uniform_block(v.cols(), x.cols(), rng);
  detail::DivergenceWorkspace ws(x);
  for (std::size_t it = 0; it < iterations; ++it) {
    ws.refresh(exec, v, h);
    detail::unsup_h_step(exec, ws, v, h);
  }
  return h;
}

}  // namespace nmfa
