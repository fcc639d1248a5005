#include "nmfalpha/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nmfa {

namespace {

void require_same_shape(std::size_t r1, std::size_t c1, std::size_t r2, std::size_t c2,
                        const char* what) {
  if (r1 != r2 || c1 != c2) {
    throw DimensionError(std::string(what) + ": shape " + std::to_string(r1) + "x" +
                         std::to_string(c1) + " vs " + std::to_string(r2) + "x" +
                         std::to_string(c2));
  }
}

void require_inner(std::size_t inner_a, std::size_t inner_b) {
  if (inner_a != inner_b) {
    throw DimensionError("product: inner dimensions " + std::to_string(inner_a) + " and " +
                         std::to_string(inner_b) + " differ");
  }
}

double divergence_term(double x, double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw DomainError("i_divergence: reconstruction entry is negative or not finite");
  }
  if (x == 0.0) return w;
  return x * std::log(x / std::max(w, kDivergenceFloor)) - x + w;
}

}  // namespace

Dense::Dense(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Dense::Dense(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("Dense: " + std::to_string(values_.size()) + " values for a " +
                         std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
}

Dense Dense::identity(std::size_t n) {
  Dense m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Dense::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Dense Dense::transposed() const {
  Dense t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Dense Dense::select_columns(std::span<const std::size_t> columns) const {
  Dense out(rows_, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] >= cols_) throw IndexError("select_columns: column out of range");
    for (std::size_t i = 0; i < rows_; ++i) out(i, c) = (*this)(i, columns[c]);
  }
  return out;
}

NonNegMatrix NonNegMatrix::from_dense(Dense values) {
  for (double v : values.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("NonNegMatrix: entries must be finite and nonnegative");
    }
  }
  NonNegMatrix m;
  m.rows_ = values.rows();
  m.cols_ = values.cols();
  m.sparse_ = false;
  m.dense_ = std::move(values);
  return m;
}

NonNegMatrix NonNegMatrix::from_columns(std::size_t rows,
                                        const std::vector<std::vector<SparseEntry>>& columns) {
  NonNegMatrix m;
  m.rows_ = rows;
  m.cols_ = columns.size();
  m.sparse_ = true;
  m.col_ptr_.reserve(columns.size() + 1);
  m.col_ptr_.push_back(0);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    bool first = true;
    std::size_t previous = 0;
    for (const SparseEntry& e : columns[j]) {
      if (e.row >= rows) throw IndexError("NonNegMatrix: row index out of range");
      if (!first && e.row <= previous) {
        throw DomainError("NonNegMatrix: column " + std::to_string(j) +
                          " row indices not strictly increasing");
      }
      if (!(e.value >= 0.0) || !std::isfinite(e.value)) {
        throw DomainError("NonNegMatrix: entries must be finite and nonnegative");
      }
      first = false;
      previous = e.row;
      if (e.value > 0.0) {
        m.row_idx_.push_back(e.row);
        m.vals_.push_back(e.value);
      }
    }
    m.col_ptr_.push_back(m.row_idx_.size());
  }
  return m;
}

NonNegMatrix NonNegMatrix::from_columns_auto(
    std::size_t rows, const std::vector<std::vector<SparseEntry>>& columns) {
  NonNegMatrix m = from_columns(rows, columns);
  const double cells = static_cast<double>(rows) * static_cast<double>(columns.size());
  if (cells > 0 && static_cast<double>(m.nnz()) / cells >= kSparseDensityThreshold) {
    return m.to_dense_storage();
  }
  return m;
}

std::size_t NonNegMatrix::nnz() const {
  if (sparse_) return vals_.size();
  return static_cast<std::size_t>(
      std::count_if(dense_.values().begin(), dense_.values().end(), [](double v) { return v > 0.0; }));
}

double NonNegMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) throw IndexError("NonNegMatrix::at out of range");
  if (!sparse_) return dense_(i, j);
  const auto begin = row_idx_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j]);
  const auto end = row_idx_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j + 1]);
  const auto it = std::lower_bound(begin, end, i);
  if (it != end && *it == i) return vals_[static_cast<std::size_t>(it - row_idx_.begin())];
  return 0.0;
}

Dense NonNegMatrix::to_dense() const {
  if (!sparse_) return dense_;
  Dense out(rows_, cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    for_each_in_column(j, [&](std::size_t i, double x) { out(i, j) = x; });
  return out;
}

NonNegMatrix NonNegMatrix::to_sparse() const {
  if (sparse_) return *this;
  std::vector<std::vector<SparseEntry>> columns(cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    for_each_in_column(j, [&](std::size_t i, double x) { columns[j].push_back({i, x}); });
  return from_columns(rows_, columns);
}

NonNegMatrix NonNegMatrix::to_dense_storage() const {
  if (!sparse_) return *this;
  return from_dense(to_dense());
}

NonNegMatrix NonNegMatrix::select_columns(std::span<const std::size_t> columns) const {
  for (std::size_t c : columns)
    if (c >= cols_) throw IndexError("select_columns: column out of range");
  if (!sparse_) return from_dense(dense_.select_columns(columns));
  NonNegMatrix m;
  m.rows_ = rows_;
  m.cols_ = columns.size();
  m.sparse_ = true;
  m.col_ptr_.push_back(0);
  for (std::size_t c : columns) {
    for (std::size_t p = col_ptr_[c]; p < col_ptr_[c + 1]; ++p) {
      m.row_idx_.push_back(row_idx_[p]);
      m.vals_.push_back(vals_[p]);
    }
    m.col_ptr_.push_back(m.row_idx_.size());
  }
  return m;
}

NonNegMatrix NonNegMatrix::with_rows(std::size_t rows) const {
  if (rows < rows_) throw DimensionError("with_rows: cannot shrink a matrix");
  if (rows == rows_) return *this;
  if (!sparse_) {
    Dense out(rows, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(i, j) = dense_(i, j);
    return from_dense(std::move(out));
  }
  NonNegMatrix m = *this;
  m.rows_ = rows;
  return m;
}

double NonNegMatrix::squared_frobenius() const {
  double total = 0.0;
  for (std::size_t j = 0; j < cols_; ++j)
    for_each_in_column(j, [&](std::size_t, double x) { total += x * x; });
  return total;
}

Dense product(const Dense& a, const Dense& b) {
  require_inner(a.cols(), b.rows());
  Dense out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Dense product(const NonNegMatrix& a, const Dense& b) {
  require_inner(a.cols(), b.rows());
  Dense out(a.rows(), b.cols());
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const auto b_row = b.row(k);
    a.for_each_in_column(k, [&](std::size_t i, double aik) {
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    });
  }
  return out;
}

Dense product(const Dense& a, const NonNegMatrix& b) {
  require_inner(a.cols(), b.rows());
  Dense out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    b.for_each_in_column(j, [&](std::size_t k, double bkj) {
      for (std::size_t i = 0; i < a.rows(); ++i) out(i, j) += a(i, k) * bkj;
    });
  }
  return out;
}

Dense product(const NonNegMatrix& a, const NonNegMatrix& b) {
  require_inner(a.cols(), b.rows());
  Dense out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    b.for_each_in_column(j, [&](std::size_t k, double bkj) {
      a.for_each_in_column(k, [&](std::size_t i, double aik) { out(i, j) += aik * bkj; });
    });
  }
  return out;
}

Dense transpose_product(const Dense& a, const Dense& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("transpose_product: row counts " + std::to_string(a.rows()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  Dense out(a.cols(), b.cols());
  for (std::size_t t = 0; t < a.rows(); ++t) {
    const auto a_row = a.row(t);
    const auto b_row = b.row(t);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ati = a_row[i];
      if (ati == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += ati * b_row[j];
    }
  }
  return out;
}

double i_divergence(const NonNegMatrix& x, const Dense& w) {
  require_same_shape(x.rows(), x.cols(), w.rows(), w.cols(), "i_divergence");
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) total += divergence_term(x.at(i, j), w(i, j));
  return total;
}

double i_divergence(const NonNegMatrix& x, const NonNegMatrix& w) {
  require_same_shape(x.rows(), x.cols(), w.rows(), w.cols(), "i_divergence");
  return i_divergence(x, w.to_dense());
}

double i_divergence(std::span<const double> x, std::span<const double> w) {
  if (x.size() != w.size()) throw DimensionError("i_divergence: vector lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0)) throw DomainError("i_divergence: negative data entry");
    total += divergence_term(x[i], w[i]);
  }
  return total;
}

double frobenius_norm(const Dense& a) {
  double total = 0.0;
  for (double v : a.values()) total += v * v;
  return std::sqrt(total);
}

bool all_nonnegative(const Dense& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return v >= 0.0; });
}

bool all_finite(const Dense& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace nmfa
