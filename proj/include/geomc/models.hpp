#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "geomc/geometry.hpp"
#include "geomc/rng.hpp"
#include "geomc/samples.hpp"

namespace geomc {

class UnstableRegime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class GridUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Independent normals with the given variances; identity metric.
class GaussianModel final : public MetricModel {
 public:
  explicit GaussianModel(Vector variances);

  std::size_t dim() const override { return variances_.size(); }
  std::string name() const override { return "gaussian"; }
  double logDensity(std::span<const double> q) const override;
  Vector gradLogDensity(std::span<const double> q) const override;
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;
  bool euclidean() const override { return true; }

  const Vector& variances() const { return variances_; }

 private:
  Vector variances_;
};

// H = omega^2 |q|^2 / 2 + |p|^2 / 2.
class HarmonicModel final : public MetricModel {
 public:
  explicit HarmonicModel(double omega, std::size_t dim = 1);

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "harmonic"; }
  double logDensity(std::span<const double> q) const override;
  Vector gradLogDensity(std::span<const double> q) const override;
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;
  bool euclidean() const override { return true; }

  double omega() const { return omega_; }

 private:
  double omega_;
  std::size_t dim_;
};

// G(q) = 1/q^2 on q > 0 with U = 0, i.e. H(q, p) = q^2 p^2 / 2.
class GeodesicModel final : public MetricModel {
 public:
  std::size_t dim() const override { return 1; }
  std::string name() const override { return "geodesic"; }
  double logDensity(std::span<const double> q) const override;
  Vector gradLogDensity(std::span<const double> q) const override;
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;

  // Exact flow from (q0, p0) after time t.
  static double exactPosition(double q0, double p0, double t);
  static double exactVelocity(double q0, double p0, double t);
};

// y_i ~ N(theta1 + theta2^2, sigmaSqY), theta ~ N(0, sigmaSqTheta Id).
// Metric: Fisher information of the likelihood plus the prior precision.
class BananaModel final : public MetricModel {
 public:
  BananaModel(std::vector<double> y, double sigmaSqTheta = 2.0, double sigmaSqY = 2.0);

  // Fixture data set: n = 100 draws at theta = (1/2, sqrt(1/2)).
  static std::vector<double> fixtureData();
  static std::shared_ptr<BananaModel> fixture();
  static std::vector<double> generateData(std::size_t n, double theta1, double theta2,
                                          double sigmaSqY, Rng& rng);

  std::size_t dim() const override { return 2; }
  std::string name() const override { return "banana"; }
  double logDensity(std::span<const double> q) const override;
  Vector gradLogDensity(std::span<const double> q) const override;
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;

  std::size_t n() const { return n_; }
  double sigmaSqTheta() const { return sigmaSqTheta_; }
  double sigmaSqY() const { return sigmaSqY_; }
  double meanY() const { return sumY_ / static_cast<double>(n_); }

 private:
  std::vector<double> y_;
  double sigmaSqTheta_;
  double sigmaSqY_;
  std::size_t n_;
  double sumY_ = 0.0;
  double sumSqY_ = 0.0;
};

// Bayesian logistic regression with prior beta ~ N(0, Id / alpha).
// Metric: X^T Lambda(beta) X + alpha Id.
class LogisticModel final : public MetricModel {
 public:
  LogisticModel(std::vector<Vector> x, std::vector<int> y, double alpha = 1.0,
                std::string label = "logistic");

  // Standard-normal features with a leading intercept column; labels drawn
  // from the model at a random coefficient vector.
  static std::shared_ptr<LogisticModel> synthetic(std::size_t n, std::size_t d, Rng& rng,
                                                  double alpha = 1.0);
  // Header row, one observation per row, last column is the 0/1 label.
  static std::shared_ptr<LogisticModel> fromCsv(const std::string& path, double alpha = 1.0);

  std::size_t dim() const override { return d_; }
  std::string name() const override { return label_; }
  double logDensity(std::span<const double> q) const override;
  Vector gradLogDensity(std::span<const double> q) const override;
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;

  std::size_t numObservations() const { return x_.size(); }

 private:
  std::vector<Vector> x_;
  std::vector<int> y_;
  double alpha_;
  std::string label_;
  std::size_t d_;
};

// Multivariate Student-t with scale diag(1, ..., 1, sigmaSqLast) and dof eta.
// Metric: the positive definite term of the negative log-density Hessian,
// (eta + m) / (eta c) Sigma^-1 with c = 1 + x^T Sigma^-1 x / eta.
class StudentTModel final : public MetricModel {
 public:
  StudentTModel(std::size_t dim, double eta, double sigmaSqLast);

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "student-t"; }
  double logDensity(std::span<const double> q) const override;
  Vector gradLogDensity(std::span<const double> q) const override;
  DenseMatrix metric(std::span<const double> q) const override;
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;

  double eta() const { return eta_; }
  const Vector& scaleDiagonal() const { return scale_; }

 private:
  double quadForm(std::span<const double> q) const;

  std::size_t dim_;
  double eta_;
  Vector scale_;
};

// Same density and metric as the base model, but selected metric partials are
// multiplied by (1 + delta). Symmetry is preserved; the partials no longer
// match dG/dq.
class MisspecifiedModel final : public MetricModel {
 public:
  // An empty index list perturbs every partial.
  MisspecifiedModel(std::shared_ptr<const MetricModel> base, double delta,
                    std::vector<std::size_t> indices = {});

  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name(); }
  double logDensity(std::span<const double> q) const override { return base_->logDensity(q); }
  Vector gradLogDensity(std::span<const double> q) const override {
    return base_->gradLogDensity(q);
  }
  DenseMatrix metric(std::span<const double> q) const override { return base_->metric(q); }
  std::vector<DenseMatrix> metricPartials(std::span<const double> q) const override;

  double delta() const { return delta_; }

 private:
  std::shared_ptr<const MetricModel> base_;
  double delta_;
  std::vector<std::size_t> indices_;
};

// Central finite differences of G; a test oracle for analytic partials.
std::vector<DenseMatrix> finiteDifferencePartials(const MetricModel& model,
                                                  std::span<const double> q, double h = 1e-5);
Vector finiteDifferenceGradient(const MetricModel& model, std::span<const double> q,
                                double h = 1e-5);

// I.i.d. reference draws.
SampleMatrix bananaReferenceSampler(const BananaModel& model, std::size_t count, Rng& rng);
SampleMatrix studentTReferenceSampler(const StudentTModel& model, std::size_t count, Rng& rng);
SampleMatrix gaussianReferenceSampler(const GaussianModel& model, std::size_t count, Rng& rng);

// Tabulated theta2 marginal of the banana posterior, sampled by inverse CDF.
class BananaMarginal {
 public:
  explicit BananaMarginal(const BananaModel& model, std::size_t cells = 1 << 16);

  double cdf(double x) const;
  double quantile(double u) const;
  double lower() const { return grid_.front(); }
  double upper() const { return grid_.back(); }
  // Conditional theta1 | theta2 is normal with these moments.
  double conditionalMean(double theta2) const;
  double conditionalVariance() const { return condVar_; }

 private:
  std::vector<double> grid_;
  std::vector<double> cdf_;
  double condVar_ = 0.0;
  double condScale_ = 0.0;
  double meanY_ = 0.0;
};

enum class LeapfrogVariant { Leapfrog, Inverted };

// Stationary one-step E[(q~ - q)^2] on H = omega^2 q^2/2 + p^2/2, derived from
// the propagator matrix of each scheme. Throws UnstableRegime for
// eps^2 omega^2 >= 4.
double oneStepEsjdClosedForm(double omega, double eps, LeapfrogVariant variant);

// 2x2 one-step propagator acting on (q, p).
std::array<double, 4> propagatorMatrix(double omega, double eps, LeapfrogVariant variant);

// Stationary k-step E[(q_k - q)^2] from the k-th power of the propagator.
double kStepEsjdFromPropagators(double omega, double eps, int k, LeapfrogVariant variant);

}  // namespace geomc
