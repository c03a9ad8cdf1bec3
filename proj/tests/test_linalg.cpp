#include <gtest/gtest.h>

#include <cmath>

#include "geomc/errors.hpp"
#include "geomc/linalg.hpp"
#include "helpers.hpp"

using namespace geomc;
using namespace geomc::testing;

namespace {

DenseMatrix reassemble(const PLUFactors& f) {
  const DenseMatrix lu = f.lower * f.upper;
  DenseMatrix a(f.dim());
  for (std::size_t i = 0; i < f.dim(); ++i)
    for (std::size_t j = 0; j < f.dim(); ++j) a(f.perm[i], j) = lu(i, j);
  return a;
}

int parity(const std::vector<std::size_t>& perm) {
  std::vector<bool> seen(perm.size(), false);
  int sign = 1;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = perm[j]) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

}  // namespace

TEST(DenseMatrix, RejectsNonFiniteAndBadShapes) {
  EXPECT_THROW(DenseMatrix(2, {1.0, NAN, 0.0, 1.0}), NonFiniteValue);
  EXPECT_THROW(DenseMatrix(2, {1.0, INFINITY, 0.0, 1.0}), NonFiniteValue);
  EXPECT_THROW(DenseMatrix(2, {1.0, 2.0, 3.0}), DimensionMismatch);
  EXPECT_THROW(DenseMatrix(0), std::invalid_argument);
}

TEST(Plu, IdentityFactorsTrivially) {
  const PLUFactors f = pluFactorize(DenseMatrix::identity(3));
  EXPECT_EQ(f.perm, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(f.permSign, 1);
  EXPECT_EQ(f.lower, DenseMatrix::identity(3));
  EXPECT_EQ(f.upper, DenseMatrix::identity(3));
}

TEST(Plu, DiagonalDeterminant) {
  const double d[] = {2.0, 3.0};
  const LogAbsDet r = logAbsDetFromPLU(pluFactorize(DenseMatrix::diagonal(d)));
  EXPECT_NEAR(std::exp(r.logAbsDet) * r.sign, 6.0, 1e-14);
}

TEST(Plu, LogDetOfIdentityAndSignedDiagonal) {
  const LogAbsDet id = logAbsDetFromPLU(pluFactorize(DenseMatrix::identity(4)));
  EXPECT_EQ(id.logAbsDet, 0.0);
  EXPECT_EQ(id.sign, 1);
  const double d[] = {2.0, -3.0};
  const LogAbsDet r = logAbsDetFromPLU(pluFactorize(DenseMatrix::diagonal(d)));
  EXPECT_NEAR(r.logAbsDet, std::log(6.0), 1e-15);
  EXPECT_EQ(r.sign, -1);
}

TEST(Plu, ReassemblyOnRandomMatrices) {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const DenseMatrix a = randomMatrix(5, rng);
    const PLUFactors f = pluFactorize(a);
    const DenseMatrix diff = reassemble(f) - a;
    EXPECT_LT(maxAbs(diff) / maxAbs(a), 1e-12);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(f.lower(i, i), 1.0);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) {
        EXPECT_EQ(f.lower(i, j), 0.0);
        EXPECT_EQ(f.upper(j, i), 0.0);
      }
    EXPECT_EQ(f.permSign, parity(f.perm));
  }
}

TEST(Plu, DeterminantMatchesCofactorExpansion) {
  Rng rng(12);
  for (std::size_t m = 1; m <= 6; ++m) {
    for (int t = 0; t < 20; ++t) {
      const DenseMatrix a = randomMatrix(m, rng);
      const double oracle = cofactorDet(a);
      const LogAbsDet r = logAbsDetFromPLU(pluFactorize(a));
      EXPECT_NEAR(r.sign * std::exp(r.logAbsDet) / oracle, 1.0, 1e-10) << "m=" << m;
    }
  }
}

TEST(Plu, SingularMatrixThrows) {
  EXPECT_THROW(pluFactorize(DenseMatrix(2, {1.0, 2.0, 2.0, 4.0})), SingularMatrix);
  EXPECT_THROW(pluFactorize(DenseMatrix(3, 0.0)), SingularMatrix);
}

TEST(Plu, SolveSmallCases) {
  const Vector b = {1.5, -2.0, 0.25};
  EXPECT_EQ(solveFromPLU(pluFactorize(DenseMatrix::identity(3)), b), b);
  const double d[] = {2.0, 4.0};
  const Vector x = solveFromPLU(pluFactorize(DenseMatrix::diagonal(d)), Vector{2.0, 8.0});
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
  EXPECT_THROW(solveFromPLU(pluFactorize(DenseMatrix::identity(3)), Vector{1.0}), DimensionMismatch);
}

TEST(Plu, SolveResidualOnRandomSpd) {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix a = randomSpd(8, rng);
    const Vector b = randomVector(8, rng);
    const Vector x = solveFromPLU(pluFactorize(a), b);
    EXPECT_LT(normInf(subtract(a.apply(x), b)) / normInf(b), 1e-10);
  }
}

TEST(Plu, SolveRecoversKnownSolution) {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix a = randomMatrix(6, rng);
    const Vector x = randomVector(6, rng);
    const Vector back = solveFromPLU(pluFactorize(a), a.apply(x));
    EXPECT_LT(normInf(subtract(back, x)) / normInf(x), 1e-8);
  }
}

TEST(Plu, InverseTimesMatrixIsIdentity) {
  Rng rng(15);
  const DenseMatrix a = randomSpd(5, rng);
  const DenseMatrix prod = inverseFromPLU(pluFactorize(a)) * a;
  EXPECT_LT(maxAbs(prod - DenseMatrix::identity(5)), 1e-12);
}

TEST(Cholesky, HandExpansion) {
  const CholeskyFactors id = choleskyFactorize(DenseMatrix::identity(3));
  EXPECT_EQ(id.lower, DenseMatrix::identity(3));
  const CholeskyFactors f = choleskyFactorize(DenseMatrix(2, {4.0, 2.0, 2.0, 5.0}));
  EXPECT_DOUBLE_EQ(f.lower(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(f.lower(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(f.lower(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(f.lower(1, 1), 2.0);
}

TEST(Cholesky, ReassemblyAndLogDetAgreeWithPlu) {
  Rng rng(16);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix a = randomSpd(7, rng);
    const CholeskyFactors f = choleskyFactorize(a);
    const DenseMatrix llt = f.lower * f.lower.transpose();
    EXPECT_LT(maxAbs(llt - a) / maxAbs(a), 1e-10);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_GT(f.lower(i, i), 0.0);
    EXPECT_NEAR(logDetFromCholesky(f), logAbsDetFromPLU(pluFactorize(a)).logAbsDet, 1e-10);
  }
}

TEST(Cholesky, LowerTimesMatchesMatrixProduct) {
  Rng rng(17);
  const DenseMatrix a = randomSpd(4, rng);
  const CholeskyFactors f = choleskyFactorize(a);
  const Vector y = randomVector(4, rng);
  EXPECT_LT(maxAbsDiff(lowerTimes(f, y), f.lower.apply(y)), 1e-14);
}

TEST(Cholesky, RejectsIndefiniteAndAsymmetric) {
  EXPECT_THROW(choleskyFactorize(DenseMatrix(2, {1.0, 2.0, 2.0, 1.0})), NotPositiveDefinite);
  EXPECT_THROW(choleskyFactorize(DenseMatrix(2, {1.0, 0.5, 0.0, 1.0})), std::invalid_argument);
}

TEST(VectorOps, Basics) {
  const Vector a = {1.0, -2.0, 3.0};
  const Vector b = {0.5, 0.5, -1.0};
  EXPECT_DOUBLE_EQ(dot(a, b), 0.5 - 1.0 - 3.0);
  EXPECT_DOUBLE_EQ(normInf(a), 3.0);
  EXPECT_DOUBLE_EQ(squaredNorm(a), 14.0);
  EXPECT_EQ(axpy(a, 2.0, b), (Vector{2.0, -1.0, 1.0}));
  EXPECT_EQ(subtract(a, b), (Vector{0.5, -2.5, 4.0}));
}
