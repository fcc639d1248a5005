#include "nmfalpha/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nmfa {

namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kConvergence = 1e-12;
constexpr std::size_t kMaxSweeps = 100;
constexpr double kNegativeEigenTolerance = 1e-6;

double off_diagonal_norm(const Dense& a) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) total += a(i, j) * a(i, j);
  return std::sqrt(total);
}

}  // namespace

SymmetricPSD::SymmetricPSD(const Dense& m) : m_(m) {
  if (m.rows() != m.cols()) throw DimensionError("SymmetricPSD: matrix is not square");
  const double scale = std::max(frobenius_norm(m), std::numeric_limits<double>::min());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > kSymmetryTolerance * scale) {
        throw DomainError("SymmetricPSD: matrix is not symmetric");
      }
      const double mean = 0.5 * (m(i, j) + m(j, i));
      m_(i, j) = mean;
      m_(j, i) = mean;
    }
  }
}

EigenDecomposition jacobi_eigen(const Dense& m) {
  if (m.rows() != m.cols()) throw DimensionError("jacobi_eigen: matrix is not square");
  const std::size_t n = m.rows();
  Dense a = SymmetricPSD(m).matrix();
  Dense q = Dense::identity(n);
  const double norm = frobenius_norm(a);

  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= kConvergence * norm) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akr = a(k, r);
          a(k, p) = c * akp - s * akr;
          a(k, r) = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double ark = a(r, k);
          a(p, k) = c * apk - s * ark;
          a(r, k) = s * apk + c * ark;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenDecomposition out{std::vector<double>(n), Dense(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    std::size_t biggest = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(q(k, src)) > std::abs(q(biggest, src))) biggest = k;
    const double sign = q(biggest, src) < 0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * q(k, src);
  }
  return out;
}

SymmetricPSD spd_sqrt(const SymmetricPSD& m) {
  const std::size_t n = m.order();
  const EigenDecomposition eig = jacobi_eigen(m.matrix());
  double spectral = 0.0;
  for (double value : eig.values) spectral = std::max(spectral, std::abs(value));
  std::vector<double> roots(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (eig.values[c] < -kNegativeEigenTolerance * spectral) {
      throw DomainError("spd_sqrt: matrix has a negative eigenvalue");
    }
    roots[c] = std::sqrt(std::max(eig.values[c], 0.0));
  }
  Dense out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c)
        acc += eig.vectors(i, c) * roots[c] * eig.vectors(j, c);
      out(i, j) = acc;
    }
  return SymmetricPSD(out);
}

Dense inner_product_embedding(const Dense& v, const Dense& h) {
  if (v.cols() != h.rows()) throw DimensionError("inner_product_embedding: rank mismatch");
  const SymmetricPSD gram(transpose_product(v, v));
  return product(spd_sqrt(gram).matrix(), h);
}

Dense inner_product_embedding(const Factorization& fit) {
  return inner_product_embedding(fit.V, fit.H);
}

}  // namespace nmfa
