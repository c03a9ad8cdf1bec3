#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geomc/errors.hpp"

namespace geomc {

using Vector = std::vector<double>;

// Square real matrix, row-major.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t dim, double fill = 0.0);
  // Throws NonFiniteValue on NaN/Inf entries, DimensionMismatch if
  // entries.size() != dim * dim.
  DenseMatrix(std::size_t dim, std::vector<double> rowMajor);

  static DenseMatrix identity(std::size_t dim);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const { return dim_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  std::span<const double> entries() const { return data_; }
  std::span<double> entries() { return data_; }

  Vector apply(std::span<const double> x) const;
  Vector applyTranspose(std::span<const double> x) const;
  DenseMatrix transpose() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double scale);

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
  friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }
  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);

  bool isSymmetric(double tol) const;
  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// A = P * lower * upper, with P the permutation matrix having P[perm[i], i] = 1,
// i.e. row i of lower*upper is row perm[i] of A.
struct PLUFactors {
  std::vector<std::size_t> perm;
  DenseMatrix lower;  // unit diagonal
  DenseMatrix upper;
  int permSign = 1;

  std::size_t dim() const { return perm.size(); }
};

struct LogAbsDet {
  double logAbsDet = 0.0;
  int sign = 1;
};

struct CholeskyFactors {
  DenseMatrix lower;
};

// Pivot magnitudes below this are treated as exact zeros.
inline constexpr double kSingularPivot = 1e-300;

// Partial pivoting by maximum column magnitude. Throws SingularMatrix.
PLUFactors pluFactorize(const DenseMatrix& a);

// Sum of log|U_ii| and the sign of the determinant. Throws SingularMatrix.
LogAbsDet logAbsDetFromPLU(const PLUFactors& f);

// Solves A x = b. Throws SingularMatrix, DimensionMismatch.
Vector solveFromPLU(const PLUFactors& f, std::span<const double> b);

// Column-by-column inverse; used where O(m^3) access to every entry of A^-1
// beats m^2 separate solves.
DenseMatrix inverseFromPLU(const PLUFactors& f);

// Throws NotPositiveDefinite when a diagonal update is <= 0 and
// std::invalid_argument when a is not symmetric to 1e-10.
CholeskyFactors choleskyFactorize(const DenseMatrix& a);

double logDetFromCholesky(const CholeskyFactors& f);

// x = L y for the Cholesky lower factor.
Vector lowerTimes(const CholeskyFactors& f, std::span<const double> y);

double dot(std::span<const double> a, std::span<const double> b);
double normInf(std::span<const double> a);
double squaredNorm(std::span<const double> a);
// a + s * b
Vector axpy(std::span<const double> a, double s, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);

}  // namespace geomc
