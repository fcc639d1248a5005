#include <algorithm>
#include <cmath>
#include <numeric>

#include "checks.hpp"

namespace nmfa::kernels::parallel {

using detail::check_factors;
using detail::expect;
using detail::prepare;

namespace {

using Index = std::ptrdiff_t;

double ordered_sum(const std::vector<double>& partials) {
  return std::accumulate(partials.begin(), partials.end(), 0.0);
}

}  // namespace

double reconstruction_ratio(const Pattern& x, const Dense& v, const Dense& h,
                            std::span<double> ratio) {
  check_factors(x, v, h);
  expect(ratio.size() == x.nnz(), "ratio buffer length");
  const std::size_t r = v.cols();
  const auto col_ptr = x.col_ptr();
  const auto rows = x.row_index();
  const auto vals = x.values();
  const Index n = static_cast<Index>(x.cols());
  std::vector<double> partial(x.cols(), 0.0);
  const Dense ht = h.transposed();

#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (Index jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const auto h_col = ht.row(j);
    double local = 0.0;
    for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
      const auto v_row = v.row(rows[p]);
      double vh = 0.0;
      for (std::size_t k = 0; k < r; ++k) vh += v_row[k] * h_col[k];
      const double w = std::max(vh, kDivergenceFloor);
      ratio[p] = vals[p] / w;
      local += vals[p] * std::log(vals[p] / w) - vals[p];
    }
    partial[j] = local;
  }
  return ordered_sum(partial);
}

void ratio_times_ht(const Pattern& x, std::span<const double> ratio, const Dense& h, Dense& out) {
  expect(h.cols() == x.cols(), "H cols vs data cols");
  expect(ratio.size() == x.nnz(), "ratio buffer length");
  const std::size_t r = h.rows();
  prepare(out, x.rows(), r);
  const Dense ht = h.transposed();
  const auto row_ptr = x.row_ptr();
  const auto row_pos = x.row_pos();
  const auto row_col = x.row_col();
  const Index d = static_cast<Index>(x.rows());

#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (Index ii = 0; ii < d; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto out_row = out.row(i);
    for (std::size_t s = row_ptr[i]; s < row_ptr[i + 1]; ++s) {
      const double rho = ratio[row_pos[s]];
      const auto h_col = ht.row(row_col[s]);
      for (std::size_t k = 0; k < r; ++k) out_row[k] += rho * h_col[k];
    }
  }
}

void vt_times_ratio(const Pattern& x, std::span<const double> ratio, const Dense& v, Dense& out) {
  expect(v.rows() == x.rows(), "V rows vs data rows");
  expect(ratio.size() == x.nnz(), "ratio buffer length");
  const std::size_t r = v.cols();
  prepare(out, r, x.cols());
  const auto col_ptr = x.col_ptr();
  const auto rows = x.row_index();
  const Index n = static_cast<Index>(x.cols());

#pragma omp parallel num_threads(max_threads())
  {
    std::vector<double> acc(r);
#pragma omp for schedule(static)
    for (Index jj = 0; jj < n; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
        const auto v_row = v.row(rows[p]);
        for (std::size_t k = 0; k < r; ++k) acc[k] += v_row[k] * ratio[p];
      }
      for (std::size_t k = 0; k < r; ++k) out(k, j) = acc[k];
    }
  }
}

double squared_residual(const Pattern& x, const Dense& v, const Dense& h) {
  check_factors(x, v, h);
  const std::size_t r = v.cols();
  const std::size_t d = x.rows();
  const auto col_ptr = x.col_ptr();
  const auto rows = x.row_index();
  const auto vals = x.values();
  const Index n = static_cast<Index>(x.cols());
  const Dense ht = h.transposed();
  std::vector<double> partial(x.cols(), 0.0);

#pragma omp parallel num_threads(max_threads())
  {
    std::vector<double> residual(d);
#pragma omp for schedule(static)
    for (Index jj = 0; jj < n; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      const auto h_col = ht.row(j);
      for (std::size_t i = 0; i < d; ++i) {
        const auto v_row = v.row(i);
        double vh = 0.0;
        for (std::size_t k = 0; k < r; ++k) vh += v_row[k] * h_col[k];
        residual[i] = -vh;
      }
      for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) residual[rows[p]] += vals[p];
      double local = 0.0;
      for (double e : residual) local += e * e;
      partial[j] = local;
    }
  }
  return ordered_sum(partial);
}

void gemm(const Dense& a, const Dense& b, Dense& out) {
  expect(a.cols() == b.rows(), "gemm inner dimension");
  prepare(out, a.rows(), b.cols());
  const Index m = static_cast<Index>(a.rows());

#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (Index ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
}

void gemm_tn(const Dense& a, const Dense& b, Dense& out) {
  expect(a.rows() == b.rows(), "gemm_tn shared dimension");
  prepare(out, a.cols(), b.cols());
  const Index m = static_cast<Index>(a.cols());

#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (Index ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto out_row = out.row(i);
    for (std::size_t t = 0; t < a.rows(); ++t) {
      const double ati = a(t, i);
      const auto b_row = b.row(t);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += ati * b_row[j];
    }
  }
}

void gemm_nt(const Dense& a, const Dense& b, Dense& out) {
  expect(a.cols() == b.cols(), "gemm_nt shared dimension");
  prepare(out, a.rows(), b.rows());
  const Index m = static_cast<Index>(a.rows());

#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (Index ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto b_row = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
}

void scale(Dense& f, const Dense& numer, const Dense& denom) {
  expect(f.rows() == numer.rows() && f.cols() == numer.cols(), "scale numerator shape");
  expect(f.rows() == denom.rows() && f.cols() == denom.cols(), "scale denominator shape");
  const Index m = static_cast<Index>(f.rows());

#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (Index ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto f_row = f.row(i);
    const auto n_row = numer.row(i);
    const auto d_row = denom.row(i);
    for (std::size_t j = 0; j < f.cols(); ++j)
      f_row[j] *= n_row[j] / std::max(d_row[j], kDivergenceFloor);
  }
}

}  // namespace nmfa::kernels::parallel
