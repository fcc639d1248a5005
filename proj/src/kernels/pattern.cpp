#include <string>

#include "nmfalpha/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nmfa::kernels {

Pattern::Pattern(const NonNegMatrix& x) : rows_(x.rows()), cols_(x.cols()) {
  col_ptr_.reserve(cols_ + 1);
  col_ptr_.push_back(0);
  for (std::size_t j = 0; j < cols_; ++j) {
    x.for_each_in_column(j, [&](std::size_t i, double value) {
      row_index_.push_back(i);
      values_.push_back(value);
    });
    col_ptr_.push_back(row_index_.size());
  }

  // Counting sort by row; walking columns in order keeps each row's entries
  // sorted by column.
  row_ptr_.assign(rows_ + 1, 0);
  for (std::size_t i : row_index_) ++row_ptr_[i + 1];
  for (std::size_t i = 0; i < rows_; ++i) row_ptr_[i + 1] += row_ptr_[i];
  row_pos_.resize(values_.size());
  row_col_.resize(values_.size());
  std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      const std::size_t slot = fill[row_index_[p]]++;
      row_pos_[slot] = p;
      row_col_[slot] = j;
    }
  }
}

namespace {
int g_thread_cap = 0;
}

int max_threads() {
#ifdef _OPENMP
  const int available = omp_get_max_threads();
  return g_thread_cap > 0 && g_thread_cap < available ? g_thread_cap : available;
#else
  return 1;
#endif
}

void set_max_threads(int threads) { g_thread_cap = threads > 0 ? threads : 0; }

double reconstruction_ratio(Exec exec, const Pattern& x, const Dense& v, const Dense& h,
                            std::span<double> ratio) {
  return exec == Exec::serial ? serial::reconstruction_ratio(x, v, h, ratio)
                              : parallel::reconstruction_ratio(x, v, h, ratio);
}

void ratio_times_ht(Exec exec, const Pattern& x, std::span<const double> ratio, const Dense& h,
                    Dense& out) {
  exec == Exec::serial ? serial::ratio_times_ht(x, ratio, h, out)
                       : parallel::ratio_times_ht(x, ratio, h, out);
}

void vt_times_ratio(Exec exec, const Pattern& x, std::span<const double> ratio, const Dense& v,
                    Dense& out) {
  exec == Exec::serial ? serial::vt_times_ratio(x, ratio, v, out)
                       : parallel::vt_times_ratio(x, ratio, v, out);
}

double squared_residual(Exec exec, const Pattern& x, const Dense& v, const Dense& h) {
  return exec == Exec::serial ? serial::squared_residual(x, v, h)
                              : parallel::squared_residual(x, v, h);
}

void gemm(Exec exec, const Dense& a, const Dense& b, Dense& out) {
  exec == Exec::serial ? serial::gemm(a, b, out) : parallel::gemm(a, b, out);
}

void gemm_tn(Exec exec, const Dense& a, const Dense& b, Dense& out) {
  exec == Exec::serial ? serial::gemm_tn(a, b, out) : parallel::gemm_tn(a, b, out);
}

void gemm_nt(Exec exec, const Dense& a, const Dense& b, Dense& out) {
  exec == Exec::serial ? serial::gemm_nt(a, b, out) : parallel::gemm_nt(a, b, out);
}

void scale(Exec exec, Dense& f, const Dense& numer, const Dense& denom) {
  exec == Exec::serial ? serial::scale(f, numer, denom) : parallel::scale(f, numer, denom);
}

}  // namespace nmfa::kernels
