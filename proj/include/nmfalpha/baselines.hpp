#ifndef NMFALPHA_BASELINES_HPP_
#define NMFALPHA_BASELINES_HPP_

// Reference dimensionality reducers used for comparison:
//
//   * regression-coupled semi-supervised NMF, squared loss
//       ||X - VH||^2 + lambda ||Y - U H_L||^2
//   * constrained NMF, where labeled coefficients are tied to their class,
//       H = P A, P = [Q  H_unlabeled], H_L = Q Y
//   * PCA and LDA.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nmfalpha/classifiers.hpp"
#include "nmfalpha/matrix.hpp"
#include "nmfalpha/nmf_unsup.hpp"

namespace nmfa {

/// Y (classes x m) with Y(c, t) = 1 iff labeled example t belongs to class c.
/// `columns[t]` is the data column holding labeled example t.
struct LabelMatrix {
  Dense Y;
  std::vector<std::size_t> columns;
};

/// `labels` describes the labeled examples in the order of `columns`.
LabelMatrix make_label_matrix(const Labels& labels, std::span<const std::size_t> columns);

struct SsnmfResult {
  /// Trace holds the squared-loss objective above.
  Factorization fit;
  Dense U;
};

SsnmfResult ssnmf_lee_factorize(const NonNegMatrix& x, const LabelMatrix& y, std::size_t rank,
                                double lambda, const FitOptions& options);

/// Objective of ssnmf_lee_factorize at (V, H, U).
double ssnmf_lee_objective(const NonNegMatrix& x, const LabelMatrix& y, const Dense& v,
                           const Dense& h, const Dense& u, double lambda);

struct CnmfFactors {
  Dense Q;            // r x classes
  Dense H_unlabeled;  // r x (n - m)
  std::vector<std::size_t> labeled_columns;
  std::vector<std::size_t> unlabeled_columns;
};

struct CnmfResult {
  /// H is the assembled P A; trace holds ||X - VH||^2.
  Factorization fit;
  CnmfFactors factors;
};

CnmfResult cnmf_liu_factorize(const NonNegMatrix& x, const LabelMatrix& y, std::size_t rank,
                              const FitOptions& options);

/// Assembles H = P A from the constrained factors.
Dense cnmf_assemble(const CnmfFactors& factors, const Dense& y, std::size_t n);

/// Coefficients for new columns under the squared loss with V frozen.
Dense fold_in_frobenius(const NonNegMatrix& x, const Dense& v, std::size_t iterations,
                        std::uint64_t seed, kernels::Exec exec = kernels::Exec::parallel);

struct PcaModel {
  Dense components;  // d x r, orthonormal columns
  std::vector<double> mean;
  /// Variance captured by each component (eigenvalues of the covariance).
  std::vector<double> variances;
};

/// Top-r principal directions of the column-centered data. Works from the
/// smaller of the d x d covariance and the n x n centered Gram matrix, and
/// never densifies X.
PcaModel pca_fit(const NonNegMatrix& x, std::size_t rank);
/// components^T (x_j - mean) for every column.
Dense pca_project(const PcaModel& model, const NonNegMatrix& x);

struct LdaModel {
  Dense projections;  // d x r, unit-length columns
};

/// Fisher directions from labeled examples only. Within-class scatter is
/// regularized by 1e-6 * trace(S_w) / d on the diagonal. Requires
/// rank <= classes - 1. Multilabel examples count once per label they carry.
LdaModel lda_fit(const NonNegMatrix& x, const Labels& labels, std::size_t rank);
Dense lda_project(const LdaModel& model, const NonNegMatrix& x);

}  // namespace nmfa

#endif  // NMFALPHA_BASELINES_HPP_
