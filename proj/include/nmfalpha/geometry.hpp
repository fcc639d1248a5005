#ifndef NMFALPHA_GEOMETRY_HPP_
#define NMFALPHA_GEOMETRY_HPP_

#include <cstddef>
#include <vector>

#include "nmfalpha/matrix.hpp"
#include "nmfalpha/nmf_unsup.hpp"

namespace nmfa {

/// Square symmetric matrix with no materially negative eigenvalue. The
/// constructor checks symmetry (to 1e-10 relative) and averages away the
/// residual asymmetry.
class SymmetricPSD {
 public:
  explicit SymmetricPSD(const Dense& m);

  std::size_t order() const { return m_.rows(); }
  const Dense& matrix() const { return m_; }

 private:
  Dense m_;
};

/// Eigenvalues in decreasing order; eigenvectors are the columns of
/// `vectors`, each signed so its largest-magnitude entry is nonnegative.
struct EigenDecomposition {
  std::vector<double> values;
  Dense vectors;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass falls below
/// 1e-12 * ||M||_F, at most 100 sweeps. The input must be symmetric.
EigenDecomposition jacobi_eigen(const Dense& m);

/// Q diag(sqrt(max(lambda_i, 0))) Q^T. Eigenvalues below -1e-6 * ||M||_2 are
/// rejected with DomainError.
SymmetricPSD spd_sqrt(const SymmetricPSD& m);

/// Z = (V^T V)^{1/2} H: r x n, same Gram matrix as VH.
Dense inner_product_embedding(const Dense& v, const Dense& h);
Dense inner_product_embedding(const Factorization& fit);

}  // namespace nmfa

#endif  // NMFALPHA_GEOMETRY_HPP_
