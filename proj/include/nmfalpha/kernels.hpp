#ifndef NMFALPHA_KERNELS_HPP_
#define NMFALPHA_KERNELS_HPP_

// Inner loops of the multiplicative updates. Every kernel exists twice:
//
//   serial::   straightforward loops over the compressed columns, kept as the
//              reference the tests and the benchmark compare against;
//   parallel:: OpenMP versions that partition over output rows or columns.
//
// A parallel kernel computes each output entry on one thread with a fixed
// summation order, so its result does not depend on the thread count.
// Reductions go through per-column partials summed in column order.

#include <cstddef>
#include <span>
#include <vector>

#include "nmfalpha/matrix.hpp"

namespace nmfa::kernels {

enum class Exec { serial, parallel };

/// Nonzero pattern of a data matrix, indexed both by column (CSC) and by
/// row. Built once per fit.
class Pattern {
 public:
  explicit Pattern(const NonNegMatrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> col_ptr() const { return col_ptr_; }
  std::span<const std::size_t> row_index() const { return row_index_; }
  std::span<const double> values() const { return values_; }

  /// Row view: entries of row i are positions row_pos()[row_ptr()[i] ..
  /// row_ptr()[i+1]) into the CSC arrays, in increasing column order.
  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> row_pos() const { return row_pos_; }
  std::span<const std::size_t> row_col() const { return row_col_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> row_index_;
  std::vector<double> values_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> row_pos_;
  std::vector<std::size_t> row_col_;
};

/// Number of worker threads a parallel kernel may use.
int max_threads();
/// Caps the worker count; values < 1 restore the OpenMP default.
void set_max_threads(int threads);

namespace serial {

/// ratio[p] = x_p / max((VH)_p, floor) on every stored entry. Returns
/// sum_p [x_p log(x_p / max((VH)_p, floor)) - x_p].
double reconstruction_ratio(const Pattern& x, const Dense& v, const Dense& h,
                            std::span<double> ratio);
/// out (d x r) = R H^T for R with the pattern's sparsity.
void ratio_times_ht(const Pattern& x, std::span<const double> ratio, const Dense& h, Dense& out);
/// out (r x n) = V^T R.
void vt_times_ratio(const Pattern& x, std::span<const double> ratio, const Dense& v, Dense& out);
/// sum_ij (x_ij - (VH)_ij)^2 over all d x n entries.
double squared_residual(const Pattern& x, const Dense& v, const Dense& h);
void gemm(const Dense& a, const Dense& b, Dense& out);
void gemm_tn(const Dense& a, const Dense& b, Dense& out);
void gemm_nt(const Dense& a, const Dense& b, Dense& out);
/// f_ij *= numer_ij / max(denom_ij, floor).
void scale(Dense& f, const Dense& numer, const Dense& denom);

}  // namespace serial

namespace parallel {

double reconstruction_ratio(const Pattern& x, const Dense& v, const Dense& h,
                            std::span<double> ratio);
void ratio_times_ht(const Pattern& x, std::span<const double> ratio, const Dense& h, Dense& out);
void vt_times_ratio(const Pattern& x, std::span<const double> ratio, const Dense& v, Dense& out);
double squared_residual(const Pattern& x, const Dense& v, const Dense& h);
void gemm(const Dense& a, const Dense& b, Dense& out);
void gemm_tn(const Dense& a, const Dense& b, Dense& out);
void gemm_nt(const Dense& a, const Dense& b, Dense& out);
void scale(Dense& f, const Dense& numer, const Dense& denom);

}  // namespace parallel

// Dispatch on an execution policy.
double reconstruction_ratio(Exec exec, const Pattern& x, const Dense& v, const Dense& h,
                            std::span<double> ratio);
void ratio_times_ht(Exec exec, const Pattern& x, std::span<const double> ratio, const Dense& h,
                    Dense& out);
void vt_times_ratio(Exec exec, const Pattern& x, std::span<const double> ratio, const Dense& v,
                    Dense& out);
double squared_residual(Exec exec, const Pattern& x, const Dense& v, const Dense& h);
void gemm(Exec exec, const Dense& a, const Dense& b, Dense& out);
void gemm_tn(Exec exec, const Dense& a, const Dense& b, Dense& out);
void gemm_nt(Exec exec, const Dense& a, const Dense& b, Dense& out);
void scale(Exec exec, Dense& f, const Dense& numer, const Dense& denom);

}  // namespace nmfa::kernels

#endif  // NMFALPHA_KERNELS_HPP_
