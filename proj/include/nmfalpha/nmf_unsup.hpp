#ifndef NMFALPHA_NMF_UNSUP_HPP_
#define NMFALPHA_NMF_UNSUP_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nmfalpha/kernels.hpp"
#include "nmfalpha/matrix.hpp"

namespace nmfa {

struct FitOptions {
  std::size_t max_iterations = 500;
  /// Stop once |L_prev - L| <= relative_tolerance * |L_prev|.
  double relative_tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// Record every k-th iteration's loss (the last iteration is always kept).
  std::size_t loss_record_stride = 1;
  kernels::Exec exec = kernels::Exec::parallel;

  /// Throws ParameterError on max_iterations == 0, negative tolerance or a
  /// zero stride.
  void validate() const;
};

/// X ~ V H with V (d x r) and H (r x n), both elementwise positive.
struct Factorization {
  Dense V;
  Dense H;
  std::size_t rank = 0;
  /// Loss at initialization followed by the recorded per-iteration losses.
  std::vector<double> loss_trace;
  std::uint64_t seed = 0;
  std::size_t iterations_run = 0;
};

struct FactorPair {
  Dense V;
  Dense H;
};

/// I.i.d. uniform draws from (0.1, 1.1), deterministic in the seed.
FactorPair init_factors(std::size_t d, std::size_t n, std::size_t r, std::uint64_t seed);

/// D(X, VH) evaluated through the same kernels the updates use. Agrees with
/// i_divergence(X, product(V, H)) up to rounding.
double unsup_loss(const NonNegMatrix& x, const Dense& v, const Dense& h,
                  kernels::Exec exec = kernels::Exec::parallel);

/// One multiplicative step: every V entry from (V, H), then every H entry
/// from (V', H).
FactorPair update_unsup(const NonNegMatrix& x, const Dense& v, const Dense& h,
                        kernels::Exec exec = kernels::Exec::parallel);

Factorization factorize(const NonNegMatrix& x, std::size_t rank, const FitOptions& options);

/// Coefficients for new columns with the basis held fixed: `iterations`
/// coefficient updates from a seeded start.
Dense fold_in(const NonNegMatrix& x, const Dense& v, std::size_t iterations, std::uint64_t seed,
              kernels::Exec exec = kernels::Exec::parallel);

}  // namespace nmfa

#endif  // NMFALPHA_NMF_UNSUP_HPP_
