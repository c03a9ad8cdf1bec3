#include "geomc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace geomc {

DenseMatrix::DenseMatrix(std::size_t dim, double fill) : dim_(dim), data_(dim * dim, fill) {
  if (dim == 0) throw std::invalid_argument("DenseMatrix: dim must be >= 1");
}

DenseMatrix::DenseMatrix(std::size_t dim, std::vector<double> rowMajor)
    : dim_(dim), data_(std::move(rowMajor)) {
  if (dim == 0) throw std::invalid_argument("DenseMatrix: dim must be >= 1");
  if (data_.size() != dim * dim) {
    throw DimensionMismatch("DenseMatrix: expected " + std::to_string(dim * dim) +
                            " entries, got " + std::to_string(data_.size()));
  }
  for (double x : data_) {
    if (!std::isfinite(x)) throw NonFiniteValue("DenseMatrix: non-finite entry");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t dim) {
  DenseMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector DenseMatrix::apply(std::span<const double> x) const {
  if (x.size() != dim_) throw DimensionMismatch("DenseMatrix::apply: size mismatch");
  Vector y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &data_[i * dim_];
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector DenseMatrix::applyTranspose(std::span<const double> x) const {
  if (x.size() != dim_) throw DimensionMismatch("DenseMatrix::applyTranspose: size mismatch");
  Vector y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &data_[i * dim_];
    for (std::size_t j = 0; j < dim_; ++j) y[j] += row[j] * x[i];
  }
  return y;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (other.dim_ != dim_) throw DimensionMismatch("DenseMatrix +=: size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (other.dim_ != dim_) throw DimensionMismatch("DenseMatrix -=: size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double scale) {
  for (double& x : data_) x *= scale;
  return *this;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.dim_ != b.dim_) throw DimensionMismatch("DenseMatrix *: size mismatch");
  const std::size_t n = a.dim_;
  DenseMatrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data_[k * n];
      double* crow = &c.data_[i * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

bool DenseMatrix::isSymmetric(double tol) const {
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = i + 1; j < dim_; ++j) {
      const double a = (*this)(i, j);
      const double b = (*this)(j, i);
      if (std::abs(a - b) > tol * std::max({1.0, std::abs(a), std::abs(b)})) return false;
    }
  }
  return true;
}

PLUFactors pluFactorize(const DenseMatrix& a) {
  const std::size_t n = a.dim();
  DenseMatrix work = a;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  int sign = 1;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivotRow = col;
    double pivotMag = std::abs(work(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double mag = std::abs(work(r, col));
      if (mag > pivotMag) {
        pivotMag = mag;
        pivotRow = r;
      }
    }
    if (!(pivotMag >= kSingularPivot)) {
      throw SingularMatrix("pluFactorize: pivot magnitude below threshold in column " +
                           std::to_string(col));
    }
    if (pivotRow != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(work(col, j), work(pivotRow, j));
      std::swap(perm[col], perm[pivotRow]);
      sign = -sign;
    }
    const double pivot = work(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = work(r, col) / pivot;
      work(r, col) = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = col + 1; j < n; ++j) work(r, j) -= factor * work(col, j);
    }
  }

  PLUFactors f{std::move(perm), DenseMatrix::identity(n), DenseMatrix(n), sign};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j < i) {
        f.lower(i, j) = work(i, j);
      } else {
        f.upper(i, j) = work(i, j);
      }
    }
  }
  return f;
}

LogAbsDet logAbsDetFromPLU(const PLUFactors& f) {
  LogAbsDet out{0.0, f.permSign};
  for (std::size_t i = 0; i < f.dim(); ++i) {
    const double u = f.upper(i, i);
    if (u == 0.0) throw SingularMatrix("logAbsDetFromPLU: zero diagonal in U");
    out.logAbsDet += std::log(std::abs(u));
    if (u < 0.0) out.sign = -out.sign;
  }
  return out;
}

Vector solveFromPLU(const PLUFactors& f, std::span<const double> b) {
  const std::size_t n = f.dim();
  if (b.size() != n) throw DimensionMismatch("solveFromPLU: size mismatch");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[f.perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= f.lower(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= f.upper(ii, j) * x[j];
    const double u = f.upper(ii, ii);
    if (u == 0.0) throw SingularMatrix("solveFromPLU: zero diagonal in U");
    x[ii] = s / u;
  }
  return x;
}

DenseMatrix inverseFromPLU(const PLUFactors& f) {
  const std::size_t n = f.dim();
  DenseMatrix inv(n);
  Vector e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    const Vector col = solveFromPLU(f, e);
    e[c] = 0.0;
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

CholeskyFactors choleskyFactorize(const DenseMatrix& a) {
  if (!a.isSymmetric(1e-10)) throw std::invalid_argument("choleskyFactorize: matrix not symmetric");
  const std::size_t n = a.dim();
  DenseMatrix l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      throw NotPositiveDefinite("choleskyFactorize: non-positive pivot at index " +
                                std::to_string(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return CholeskyFactors{std::move(l)};
}

double logDetFromCholesky(const CholeskyFactors& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.lower.dim(); ++i) s += std::log(f.lower(i, i));
  return 2.0 * s;
}

Vector lowerTimes(const CholeskyFactors& f, std::span<const double> y) {
  const std::size_t n = f.lower.dim();
  if (y.size() != n) throw DimensionMismatch("lowerTimes: size mismatch");
  Vector x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += f.lower(i, j) * y[j];
    x[i] = s;
  }
  return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double normInf(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double squaredNorm(std::span<const double> a) { return dot(a, a); }

Vector axpy(std::span<const double> a, double s, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("axpy: size mismatch");
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) { return axpy(a, -1.0, b); }

}  // namespace geomc
