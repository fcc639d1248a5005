#ifndef NMFALPHA_NMF_SEMI_HPP_
#define NMFALPHA_NMF_SEMI_HPP_

// NMF with a supervision term: minimize
//
//   D(X, VH) + lambda * D(XS, VHS)
//
// where S (n x 2p) stacks the nonnegative dual-coefficient vectors alpha+
// and alpha- of p linear classifiers. Both blocks are updated
// multiplicatively; each block update is derived from an auxiliary function
// that is tight at the current iterate, so the loss never increases.

#include <cstddef>
#include <span>
#include <vector>

#include "nmfalpha/classifiers.hpp"
#include "nmfalpha/matrix.hpp"
#include "nmfalpha/nmf_unsup.hpp"

namespace nmfa {

enum class SupportSign { positive, negative };

struct SupportColumn {
  std::size_t classifier = 0;
  SupportSign sign = SupportSign::positive;
};

/// Columns are [alpha+ of classifiers 0..p-1, alpha- of classifiers
/// 0..p-1]. Only rows listed in `labeled_rows` can be nonzero.
struct SupportMatrix {
  NonNegMatrix S;
  std::size_t p = 0;
  std::size_t labeled_count = 0;
  std::vector<std::size_t> labeled_rows;
  std::vector<SupportColumn> column_meta;
};

/// Models index their examples 0..m-1, which are rows 0..m-1 of S.
SupportMatrix build_support_matrix(std::span<const LinearModel> models, std::size_t n,
                                   std::size_t m);
/// Model example t maps to row labeled_rows[t]. Lets the labeled examples
/// sit anywhere among the n columns.
SupportMatrix build_support_matrix(std::span<const LinearModel> models, std::size_t n,
                                   std::span<const std::size_t> labeled_rows);

struct SemiLossReport {
  double reconstruction_term = 0.0;
  double supervision_term = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

SemiLossReport semi_loss(const NonNegMatrix& x, const Dense& v, const Dense& h,
                         const SupportMatrix& s, double lambda,
                         kernels::Exec exec = kernels::Exec::parallel);

/// One step: V from (V, H), then H from (V', H), each block from a snapshot.
FactorPair update_semi(const NonNegMatrix& x, const Dense& v, const Dense& h,
                       const SupportMatrix& s, double lambda,
                       kernels::Exec exec = kernels::Exec::parallel);

/// The loss trace holds SemiLossReport::total. S is never modified.
Factorization semi_factorize(const NonNegMatrix& x, const SupportMatrix& s, std::size_t rank,
                             double lambda, const FitOptions& options);

// ---------------------------------------------------------------------------
// Verification tools. These materialize the Jensen weights and are limited to
// d * n * r * 2p <= kMaxAuxiliaryCells.

inline constexpr std::size_t kMaxAuxiliaryCells = 10'000'000;

/// eta[(i*n + j)*r + k] sums to one over k; psi[((i*L + l)*n + j)*r + k]
/// sums to one over (j, k), with L = 2p.
struct AuxiliaryWeights {
  std::vector<double> eta;
  std::vector<double> psi;
};

/// eta_ijk = V_ik H_kj / (VH)_ij, psi_iljk = V_ik H_kj S_jl / (VHS)_il.
AuxiliaryWeights canonical_weights(const NonNegMatrix& x, const Dense& v, const Dense& h,
                                   const SupportMatrix& s);

struct BoundReport {
  double bound = 0.0;
  double loss = 0.0;
};

/// Upper bound on the loss obtained by applying Jensen's inequality to
/// log (VH)_ij and log (VHS)_il with the given weights, next to the exact loss.
BoundReport auxiliary_bound(const NonNegMatrix& x, const Dense& v, const Dense& h,
                            const SupportMatrix& s, double lambda,
                            const AuxiliaryWeights& weights);
BoundReport auxiliary_bound(const NonNegMatrix& x, const Dense& v, const Dense& h,
                            const SupportMatrix& s, double lambda);

/// Minimizer of the bound over V at the canonical weights, evaluated with
/// plain loops. Equals the V block of update_semi.
Dense closed_form_v_step(const NonNegMatrix& x, const Dense& v, const Dense& h,
                         const SupportMatrix& s, double lambda);

}  // namespace nmfa

#endif  // NMFALPHA_NMF_SEMI_HPP_
