#include <algorithm>
#include <cmath>

#include "checks.hpp"

namespace nmfa::kernels::serial {

using detail::check_factors;
using detail::expect;
using detail::prepare;

double reconstruction_ratio(const Pattern& x, const Dense& v, const Dense& h,
                            std::span<double> ratio) {
  check_factors(x, v, h);
  expect(ratio.size() == x.nnz(), "ratio buffer length");
  const std::size_t r = v.cols();
  const auto col_ptr = x.col_ptr();
  const auto rows = x.row_index();
  const auto vals = x.values();
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
      const std::size_t i = rows[p];
      double vh = 0.0;
      for (std::size_t k = 0; k < r; ++k) vh += v(i, k) * h(k, j);
      const double w = std::max(vh, kDivergenceFloor);
      ratio[p] = vals[p] / w;
      total += vals[p] * std::log(vals[p] / w) - vals[p];
    }
  }
  return total;
}

void ratio_times_ht(const Pattern& x, std::span<const double> ratio, const Dense& h, Dense& out) {
  expect(h.cols() == x.cols(), "H cols vs data cols");
  expect(ratio.size() == x.nnz(), "ratio buffer length");
  const std::size_t r = h.rows();
  prepare(out, x.rows(), r);
  const auto col_ptr = x.col_ptr();
  const auto rows = x.row_index();
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
      auto out_row = out.row(rows[p]);
      for (std::size_t k = 0; k < r; ++k) out_row[k] += ratio[p] * h(k, j);
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
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
      const auto v_row = v.row(rows[p]);
      for (std::size_t k = 0; k < r; ++k) out(k, j) += v_row[k] * ratio[p];
    }
  }
}

double squared_residual(const Pattern& x, const Dense& v, const Dense& h) {
  check_factors(x, v, h);
  const std::size_t r = v.cols();
  const auto col_ptr = x.col_ptr();
  const auto rows = x.row_index();
  const auto vals = x.values();
  std::vector<double> residual(x.rows());
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double vh = 0.0;
      for (std::size_t k = 0; k < r; ++k) vh += v(i, k) * h(k, j);
      residual[i] = -vh;
    }
    for (std::size_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) residual[rows[p]] += vals[p];
    for (double e : residual) total += e * e;
  }
  return total;
}

void gemm(const Dense& a, const Dense& b, Dense& out) {
  expect(a.cols() == b.rows(), "gemm inner dimension");
  prepare(out, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
}

void gemm_tn(const Dense& a, const Dense& b, Dense& out) {
  expect(a.rows() == b.rows(), "gemm_tn shared dimension");
  prepare(out, a.cols(), b.cols());
  for (std::size_t t = 0; t < a.rows(); ++t)
    for (std::size_t i = 0; i < a.cols(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(t, i) * b(t, j);
}

void gemm_nt(const Dense& a, const Dense& b, Dense& out) {
  expect(a.cols() == b.cols(), "gemm_nt shared dimension");
  prepare(out, a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(j, k);
}

void scale(Dense& f, const Dense& numer, const Dense& denom) {
  expect(f.rows() == numer.rows() && f.cols() == numer.cols(), "scale numerator shape");
  expect(f.rows() == denom.rows() && f.cols() == denom.cols(), "scale denominator shape");
  for (std::size_t i = 0; i < f.rows(); ++i)
    for (std::size_t j = 0; j < f.cols(); ++j)
      f(i, j) *= numer(i, j) / std::max(denom(i, j), kDivergenceFloor);
}

}  // namespace nmfa::kernels::serial
