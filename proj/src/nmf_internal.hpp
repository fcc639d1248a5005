#ifndef NMFALPHA_SRC_NMF_INTERNAL_HPP_
#define NMFALPHA_SRC_NMF_INTERNAL_HPP_

// Building blocks shared by the unsupervised and semi-supervised fit loops.

#include <cstddef>
#include <string>
#include <vector>

#include "nmfalpha/kernels.hpp"
#include "nmfalpha/log.hpp"
#include "nmfalpha/matrix.hpp"

namespace nmfa::detail {

inline std::vector<double> column_sums(const Dense& a) {
  std::vector<double> sums(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += a(i, j);
  return sums;
}

inline std::vector<double> row_sums(const Dense& a) {
  std::vector<double> sums(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double v : a.row(i)) sums[i] += v;
  return sums;
}

/// sum_ij (VH)_ij without forming VH.
inline double reconstruction_mass(const Dense& v, const Dense& h) {
  const auto v_sums = column_sums(v);
  const auto h_sums = row_sums(h);
  double total = 0.0;
  for (std::size_t k = 0; k < v_sums.size(); ++k) total += v_sums[k] * h_sums[k];
  return total;
}

/// Scratch space for the I-divergence updates on one data matrix.
struct DivergenceWorkspace {
  explicit DivergenceWorkspace(const NonNegMatrix& x) : pattern(x), ratio(pattern.nnz()) {}

  /// Refreshes `ratio` for (V, H) and returns D(X, VH).
  double refresh(kernels::Exec exec, const Dense& v, const Dense& h) {
    const double data_part = kernels::reconstruction_ratio(exec, pattern, v, h, ratio);
    return data_part + reconstruction_mass(v, h);
  }

  kernels::Pattern pattern;
  std::vector<double> ratio;
  Dense numer;
  Dense denom;
};

inline void check_shapes(const NonNegMatrix& x, const Dense& v, const Dense& h) {
  if (v.rows() != x.rows() || h.cols() != x.cols() || v.cols() != h.rows()) {
    throw DimensionError("factor shapes " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()) + " and " + std::to_string(h.rows()) + "x" +
                         std::to_string(h.cols()) + " do not fit data " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

inline void warn_on_rank(std::size_t d, std::size_t n, std::size_t r) {
  if (r > d || r > n) {
    warn("rank " + std::to_string(r) + " exceeds min(d, n) = " +
         std::to_string(d < n ? d : n));
  }
}

/// True when the step from `previous` to `current` is below the tolerance.
inline bool converged(double previous, double current, double tolerance) {
  const double change = previous - current;
  return (change < 0 ? -change : change) <= tolerance * (previous < 0 ? -previous : previous);
}

}  // namespace nmfa::detail

#endif  // NMFALPHA_SRC_NMF_INTERNAL_HPP_
