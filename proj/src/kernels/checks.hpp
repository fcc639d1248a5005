#ifndef NMFALPHA_SRC_KERNELS_CHECKS_HPP_
#define NMFALPHA_SRC_KERNELS_CHECKS_HPP_

#include <string>

#include "nmfalpha/kernels.hpp"

namespace nmfa::kernels::detail {

inline void expect(bool ok, const char* what) {
  if (!ok) throw DimensionError(std::string("kernel shape mismatch: ") + what);
}

inline void check_factors(const Pattern& x, const Dense& v, const Dense& h) {
  expect(v.rows() == x.rows(), "V rows vs data rows");
  expect(h.cols() == x.cols(), "H cols vs data cols");
  expect(v.cols() == h.rows(), "V cols vs H rows");
}

inline void prepare(Dense& out, std::size_t rows, std::size_t cols) {
  if (out.rows() != rows || out.cols() != cols) {
    out = Dense(rows, cols);
  } else {
    for (double& value : out.values()) value = 0.0;
  }
}

}  // namespace nmfa::kernels::detail

#endif  // NMFALPHA_SRC_KERNELS_CHECKS_HPP_
