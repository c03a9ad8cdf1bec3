#pragma once

#include <cmath>
#include <cstdint>
#include <memory>

#include "geomc/geometry.hpp"
#include "geomc/linalg.hpp"
#include "geomc/models.hpp"
#include "geomc/rng.hpp"

namespace geomc::testing {

inline Vector randomVector(std::size_t m, Rng& rng, double scale = 1.0) {
  Vector v(m);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline DenseMatrix randomMatrix(std::size_t m, Rng& rng) {
  DenseMatrix a(m);
  for (double& x : a.entries()) x = rng.normal();
  return a;
}

// A^T A + Id
inline DenseMatrix randomSpd(std::size_t m, Rng& rng) {
  const DenseMatrix a = randomMatrix(m, rng);
  return a.transpose() * a + DenseMatrix::identity(m);
}

// Laplace expansion along the first row; independent of any factorization.
inline double cofactorDet(const DenseMatrix& a) {
  const std::size_t m = a.dim();
  if (m == 1) return a(0, 0);
  double det = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    DenseMatrix minor(m - 1);
    for (std::size_t i = 1; i < m; ++i) {
      std::size_t cc = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == c) continue;
        minor(i - 1, cc++) = a(i, j);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * a(0, c) * cofactorDet(minor);
  }
  return det;
}

inline double maxAbs(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.entries()) s = std::max(s, std::abs(x));
  return s;
}

inline double maxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

inline std::shared_ptr<const BananaModel> banana() { return BananaModel::fixture(); }

// Draws a point near the bulk of the banana posterior.
inline Vector bananaPoint(Rng& rng) {
  const double t2 = 0.9 * rng.normal();
  return {1.0 - t2 * t2 + 0.3 * rng.normal(), t2};
}

}  // namespace geomc::testing
