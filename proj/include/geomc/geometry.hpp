#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomc/linalg.hpp"

namespace geomc {

// Target distribution together with a Riemannian metric on its support.
// Implementations must be free of observable mutation: chains evaluate a
// shared model concurrently.
class MetricModel {
 public:
  virtual ~MetricModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;

  virtual double logDensity(std::span<const double> q) const = 0;
  virtual Vector gradLogDensity(std::span<const double> q) const = 0;
  // G(q); symmetric positive definite.
  virtual DenseMatrix metric(std::span<const double> q) const = 0;
  // g_k(q), nominally dG/dq^(k). Everything downstream uses exactly what is
  // returned here, so an incorrect implementation propagates faithfully.
  virtual std::vector<DenseMatrix> metricPartials(std::span<const double> q) const = 0;

  // True when G is the identity everywhere.
  virtual bool euclidean() const { return false; }
};

// Same log-density, identity metric. Used to run Euclidean HMC on any model.
class EuclideanView final : public MetricModel {
 public:
  explicit EuclideanView(std::shared_ptr<const MetricModel> base);

  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name(); }
  double logDensity(std::span<const double> q) const override { return base_->logDensity(q); }
  Vector gradLogDensity(std::span<const double> q) const override {
    return base_->gradLogDensity(q);
  }
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;
  bool euclidean() const override { return true; }

 private:
  std::shared_ptr<const MetricModel> base_;
};

// Gamma^k_{ij}, stored as a dense m^3 array.
class ChristoffelSymbols {
 public:
  explicit ChristoffelSymbols(std::size_t dim) : dim_(dim), data_(dim * dim * dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  double& operator()(std::size_t k, std::size_t i, std::size_t j) {
    return data_[(k * dim_ + i) * dim_ + j];
  }
  double operator()(std::size_t k, std::size_t i, std::size_t j) const {
    return data_[(k * dim_ + i) * dim_ + j];
  }

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

// Metric and its factorization at a single position.
struct MetricFactors {
  DenseMatrix metric;
  PLUFactors plu;
  double logDetMetric = 0.0;
};

// Throws NotPositiveDefinite if G(q) is singular or has a non-positive
// determinant, NonFiniteValue if G(q) has non-finite entries.
MetricFactors factorMetric(const MetricModel& model, std::span<const double> q);

// Everything an integrator needs at one position, evaluated once and then
// read-only. Shared between consecutive steps of a trajectory.
class LocalGeometry {
 public:
  LocalGeometry(const MetricModel& model, Vector q);

  const Vector& position() const { return q_; }
  std::size_t dim() const { return q_.size(); }
  const DenseMatrix& metric() const { return factors_.metric; }
  const PLUFactors& metricFactors() const { return factors_.plu; }
  double logDetMetric() const { return factors_.logDetMetric; }
  const std::vector<DenseMatrix>& partials() const { return partials_; }
  const Vector& gradLogDensity() const { return gradLogDensity_; }

  // G^-1 b via the PLU factors.
  Vector solve(std::span<const double> b) const { return solveFromPLU(factors_.plu, b); }
  const DenseMatrix& inverseMetric() const { return inverse_; }

  // Omega_{ij}(eps, q, v) = eps/2 sum_k Gamma^i_{kj} v^(k), contracted straight
  // from the partials in O(m^3).
  DenseMatrix omega(double eps, std::span<const double> v) const;

  // Full m^3 array from the partials held here.
  ChristoffelSymbols christoffel() const;

  // grad U = -grad L + 1/2 tr(G^-1 g_k).
  Vector gradPotential() const;

 private:
  Vector q_;
  MetricFactors factors_;
  std::vector<DenseMatrix> partials_;
  DenseMatrix inverse_;
  Vector gradLogDensity_;
};

ChristoffelSymbols christoffel(const MetricModel& model, std::span<const double> q);

// Omega via a materialized Christoffel array.
DenseMatrix omega(double eps, const MetricModel& model, std::span<const double> q,
                  std::span<const double> v);
DenseMatrix omegaFromChristoffel(double eps, const ChristoffelSymbols& gamma,
                                 std::span<const double> v);

// p = G(q) v
Vector legendre(const MetricModel& model, std::span<const double> q, std::span<const double> v);
// v = G(q)^-1 p
Vector inverseLegendre(const MetricModel& model, std::span<const double> q,
                       std::span<const double> p);

// Potential U = -L + 1/2 log det G and the Hamiltonian H = U + 1/2 p^T G^-1 p.
class RiemannianTarget {
 public:
  explicit RiemannianTarget(std::shared_ptr<const MetricModel> model);

  const MetricModel& model() const { return *model_; }
  std::shared_ptr<const MetricModel> modelPtr() const { return model_; }
  std::size_t dim() const { return model_->dim(); }

  std::shared_ptr<const LocalGeometry> geometryAt(Vector q) const;

  double potential(std::span<const double> q) const;
  double potential(const LocalGeometry& geom) const;
  double kineticEnergy(const LocalGeometry& geom, std::span<const double> p) const;
  double hamiltonian(std::span<const double> q, std::span<const double> p) const;
  double hamiltonian(const LocalGeometry& geom, std::span<const double> p) const;

 private:
  std::shared_ptr<const MetricModel> model_;
};

// Position with momentum and/or velocity. Either representation may be absent;
// when both are present p = G(q) v.
struct PhasePoint {
  Vector q;
  std::optional<Vector> p;
  std::optional<Vector> v;
  std::shared_ptr<const LocalGeometry> geometry;

  static PhasePoint fromMomentum(const RiemannianTarget& target, Vector q, Vector p);
  static PhasePoint fromVelocity(const RiemannianTarget& target, Vector q, Vector v);

  // Returns the cached geometry, evaluating it if absent.
  std::shared_ptr<const LocalGeometry> ensureGeometry(const RiemannianTarget& target) const;
  Vector momentum(const RiemannianTarget& target) const;
  Vector velocity(const RiemannianTarget& target) const;
};

}  // namespace geomc
