#ifndef NMFALPHA_MATRIX_HPP_
#define NMFALPHA_MATRIX_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "nmfalpha/errors.hpp"

namespace nmfa {

/// Floor applied to every divergence denominator ((VH)_ij, (VHS)_il, update
/// normalizers). Factors themselves are never clamped.
inline constexpr double kDivergenceFloor = 1e-12;

/// Row-major real matrix. Entries may be negative; this type carries Z, w,
/// PCA/LDA projections and the factor blocks V and H.
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols, double fill = 0.0);
  Dense(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Dense identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::vector<double> column(std::size_t j) const;
  Dense transposed() const;
  Dense select_columns(std::span<const std::size_t> columns) const;

  bool operator==(const Dense& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct SparseEntry {
  std::size_t row;
  double value;
};

/// Nonnegative d x n data matrix, stored either dense or as compressed
/// columns. Columns are examples. Immutable once built.
class NonNegMatrix {
 public:
  /// Storage is chosen sparse below this fill fraction by `from_columns_auto`.
  static constexpr double kSparseDensityThreshold = 0.25;

  NonNegMatrix() = default;

  static NonNegMatrix from_dense(Dense values);
  /// Each column must be sorted by row index without duplicates. Explicit
  /// zeros are dropped.
  static NonNegMatrix from_columns(std::size_t rows,
                                   const std::vector<std::vector<SparseEntry>>& columns);
  static NonNegMatrix from_columns_auto(std::size_t rows,
                                        const std::vector<std::vector<SparseEntry>>& columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_sparse() const { return sparse_; }
  /// Number of strictly positive entries.
  std::size_t nnz() const;

  double at(std::size_t i, std::size_t j) const;

  /// Calls f(row, value) for each strictly positive entry of column j in
  /// increasing row order.
  template <class F>
  void for_each_in_column(std::size_t j, F&& f) const {
    if (sparse_) {
      for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) f(row_idx_[p], vals_[p]);
    } else {
      for (std::size_t i = 0; i < rows_; ++i) {
        const double x = dense_(i, j);
        if (x > 0.0) f(i, x);
      }
    }
  }

  Dense to_dense() const;
  NonNegMatrix to_sparse() const;
  NonNegMatrix to_dense_storage() const;
  NonNegMatrix select_columns(std::span<const std::size_t> columns) const;
  /// Same data embedded in a taller matrix (new rows are zero).
  NonNegMatrix with_rows(std::size_t rows) const;

  double squared_frobenius() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool sparse_ = false;
  Dense dense_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> row_idx_;
  std::vector<double> vals_;
};

Dense product(const Dense& a, const Dense& b);
Dense product(const NonNegMatrix& a, const Dense& b);
Dense product(const Dense& a, const NonNegMatrix& b);
Dense product(const NonNegMatrix& a, const NonNegMatrix& b);
/// a^T b without forming the transpose.
Dense transpose_product(const Dense& a, const Dense& b);

/// Generalized KL divergence sum_ij [x log(x/w) - x + w] with 0 log 0 = 0.
/// w is floored at kDivergenceFloor inside the logarithm only.
double i_divergence(const NonNegMatrix& x, const Dense& w);
double i_divergence(const NonNegMatrix& x, const NonNegMatrix& w);
/// Same measure for plain vectors (w+ against its reconstruction).
double i_divergence(std::span<const double> x, std::span<const double> w);

double frobenius_norm(const Dense& a);
bool all_nonnegative(const Dense& a);
bool all_finite(const Dense& a);

}  // namespace nmfa

#endif  // NMFALPHA_MATRIX_HPP_
