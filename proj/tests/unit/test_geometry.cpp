#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nmfalpha/geometry.hpp"
#include "oracles.hpp"

using namespace nmfa;

namespace {

Dense random_spd(std::size_t n, std::mt19937_64& rng) {
  const Dense a = oracle::random_dense(n, n + 2, rng, -1.0, 1.0);
  return oracle::multiply(a, oracle::transpose(a));
}

}  // namespace

TEST(JacobiEigen, Diagonal) {
  Dense m(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 5.0;
  m(2, 2) = 3.0;
  const EigenDecomposition e = jacobi_eigen(m);
  EXPECT_EQ(e.values, (std::vector<double>{5.0, 3.0, 1.0}));
  EXPECT_EQ(e.vectors(1, 0), 1.0);
}

TEST(JacobiEigen, TwoByTwoHandValues) {
  const Dense m(2, 2, std::vector<double>{2.0, 1.0, 1.0, 2.0});
  const EigenDecomposition e = jacobi_eigen(m);
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  EXPECT_NEAR(e.vectors(0, 0), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), std::sqrt(0.5), 1e-14);
}

TEST(JacobiEigen, ReconstructsAndOrthonormal) {
  std::mt19937_64 rng(3);
  for (std::size_t n = 1; n <= 12; ++n) {
    const Dense m = random_spd(n, rng);
    const EigenDecomposition e = jacobi_eigen(m);
    Dense lq = e.vectors;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) lq(i, k) *= e.values[k];
    const Dense back = oracle::multiply(lq, oracle::transpose(e.vectors));
    EXPECT_LT(oracle::relative_frobenius(back, m), 1e-12);
    const Dense qtq = oracle::multiply(oracle::transpose(e.vectors), e.vectors);
    EXPECT_LT(oracle::relative_frobenius(qtq, Dense::identity(n)), 1e-12);
    for (std::size_t k = 1; k < n; ++k) EXPECT_GE(e.values[k - 1], e.values[k]);
  }
}

TEST(JacobiEigen, RejectsAsymmetric) {
  EXPECT_THROW(jacobi_eigen(Dense(2, 2, std::vector<double>{1.0, 2.0, 0.0, 1.0})), DomainError);
  EXPECT_THROW(jacobi_eigen(Dense(2, 3)), DimensionError);
}

TEST(SpdSqrt, SquaresBack) {
  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 10; ++n) {
    const Dense m = random_spd(n, rng);
    const Dense root = spd_sqrt(SymmetricPSD(m)).matrix();
    EXPECT_LT(oracle::relative_frobenius(oracle::multiply(root, root), m), 1e-10);
    EXPECT_LT(oracle::relative_frobenius(root, oracle::transpose(root)), 1e-14);
  }
}

TEST(SpdSqrt, HandValueAndRejections) {
  const Dense m(2, 2, std::vector<double>{4.0, 0.0, 0.0, 9.0});
  const Dense root = spd_sqrt(SymmetricPSD(m)).matrix();
  EXPECT_NEAR(root(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(root(1, 1), 3.0, 1e-14);
  EXPECT_THROW(spd_sqrt(SymmetricPSD(Dense(2, 2, std::vector<double>{1.0, 0.0, 0.0, -1.0}))),
               DomainError);
  EXPECT_THROW(SymmetricPSD(Dense(2, 2, std::vector<double>{1.0, 0.5, 0.0, 1.0})), DomainError);
}

TEST(InnerProductEmbedding, PreservesGram) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 3 + trial, n = 4 + trial % 7, r = 1 + trial % 5;
    const Dense v = oracle::random_dense(d, r, rng, 0.1, 2.0);
    const Dense h = oracle::random_dense(r, n, rng, 0.1, 2.0);
    const Dense z = inner_product_embedding(v, h);
    ASSERT_EQ(z.rows(), r);
    ASSERT_EQ(z.cols(), n);
    const Dense vh = oracle::multiply(v, h);
    const Dense g1 = oracle::multiply(oracle::transpose(vh), vh);
    const Dense g2 = oracle::multiply(oracle::transpose(z), z);
    EXPECT_LT(oracle::relative_frobenius(g2, g1), 1e-10);
  }
}

TEST(InnerProductEmbedding, OrthonormalBasisIsIdentityMap) {
  Dense v(4, 2);
  v(0, 0) = 1.0;
  v(2, 1) = 1.0;
  std::mt19937_64 rng(1);
  const Dense h = oracle::random_dense(2, 5, rng);
  EXPECT_LT(oracle::max_relative_difference(inner_product_embedding(v, h), h), 1e-14);
}

TEST(InnerProductEmbedding, ScaleGaugeInvariant) {
  std::mt19937_64 rng(9);
  const Dense v = oracle::random_dense(6, 3, rng, 0.1, 1.0);
  const Dense h = oracle::random_dense(3, 5, rng, 0.1, 1.0);
  Dense v2 = v, h2 = h;
  const double scales[] = {2.0, 0.25, 7.0};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 3; ++k) v2(i, k) *= scales[k];
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 5; ++j) h2(k, j) /= scales[k];
  const Dense z1 = inner_product_embedding(v, h), z2 = inner_product_embedding(v2, h2);
  const Dense g1 = oracle::multiply(oracle::transpose(z1), z1);
  const Dense g2 = oracle::multiply(oracle::transpose(z2), z2);
  EXPECT_LT(oracle::relative_frobenius(g2, g1), 1e-10);
}
