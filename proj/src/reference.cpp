#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geomc/models.hpp"

namespace geomc {

namespace {

// Unnormalized log marginal of theta2: theta1 integrated out analytically,
// ybar - theta1 - t^2 ~ N(0, sigmaSqY/n + sigmaSqTheta) after marginalizing.
struct MarginalLogDensity {
  double meanY, sigmaSqTheta, combinedVar;
  double operator()(double t) const {
    const double r = meanY - t * t;
    return -0.5 * t * t / sigmaSqTheta - 0.5 * r * r / combinedVar;
  }
};

double peakOver(const MarginalLogDensity& f, double radius) {
  double peak = -INFINITY;
  const int points = 4096;
  for (int i = 0; i <= points; ++i) {
    peak = std::max(peak, f(-radius + 2.0 * radius * i / points));
  }
  return peak;
}

}  // namespace

BananaMarginal::BananaMarginal(const BananaModel& model, std::size_t cells) {
  if (cells < 16) throw std::invalid_argument("BananaMarginal: too few cells");
  const double n = static_cast<double>(model.n());
  meanY_ = model.meanY();
  const MarginalLogDensity f{meanY_, model.sigmaSqTheta(), model.sigmaSqY() / n + model.sigmaSqTheta()};
  condVar_ = 1.0 / (1.0 / model.sigmaSqTheta() + n / model.sigmaSqY());
  condScale_ = condVar_ * n / model.sigmaSqY();

  // Grow the symmetric range until the density at its edge is negligible.
  double radius = 1.0;
  double peak = peakOver(f, radius);
  while (f(radius) > peak - 60.0) {
    radius *= 2.0;
    if (radius > 1e6) throw GridUnderflow("BananaMarginal: could not bracket the marginal");
    peak = peakOver(f, radius);
  }

  grid_.resize(cells + 1);
  std::vector<double> pdf(cells + 1);
  const double h = 2.0 * radius / static_cast<double>(cells);
  for (std::size_t i = 0; i <= cells; ++i) {
    grid_[i] = -radius + h * static_cast<double>(i);
    pdf[i] = std::exp(f(grid_[i]) - peak);
  }
  cdf_.assign(cells + 1, 0.0);
  for (std::size_t i = 1; i <= cells; ++i) cdf_[i] = cdf_[i - 1] + 0.5 * h * (pdf[i - 1] + pdf[i]);
  const double total = cdf_.back();
  // Mass beyond the edges is bounded by pdf(edge) times a unit-scale tail.
  if ((pdf.front() + pdf.back()) * std::max(1.0, radius) / total > 1e-10) {
    throw GridUnderflow("BananaMarginal: mass outside grid exceeds 1e-10");
  }
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

double BananaMarginal::cdf(double x) const {
  if (x <= grid_.front()) return 0.0;
  if (x >= grid_.back()) return 1.0;
  const double h = grid_[1] - grid_[0];
  const auto i = std::min(static_cast<std::size_t>((x - grid_[0]) / h), grid_.size() - 2);
  // Linear within a cell; quantile() inverts exactly the same interpolant.
  const double s = std::clamp((x - grid_[i]) / h, 0.0, 1.0);
  return cdf_[i] + s * (cdf_[i + 1] - cdf_[i]);
}

double BananaMarginal::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("BananaMarginal::quantile: u outside [0,1]");
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return grid_.front();
  if (it == cdf_.end()) return grid_.back();
  const std::size_t i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  const double width = cdf_[i + 1] - cdf_[i];
  const double s = width > 0.0 ? (u - cdf_[i]) / width : 0.0;
  return grid_[i] + s * (grid_[i + 1] - grid_[i]);
}

double BananaMarginal::conditionalMean(double theta2) const {
  return condScale_ * (meanY_ - theta2 * theta2);
}

SampleMatrix bananaReferenceSampler(const BananaModel& model, std::size_t count, Rng& rng) {
  const BananaMarginal marginal(model);
  const double sd = std::sqrt(marginal.conditionalVariance());
  SampleMatrix out(count, 2);
  for (std::size_t i = 0; i < count; ++i) {
    const double t2 = marginal.quantile(rng.uniform());
    out(i, 1) = t2;
    out(i, 0) = marginal.conditionalMean(t2) + sd * rng.normal();
  }
  return out;
}

SampleMatrix studentTReferenceSampler(const StudentTModel& model, std::size_t count, Rng& rng) {
  const std::size_t m = model.dim();
  Vector sd(m);
  for (std::size_t j = 0; j < m; ++j) sd[j] = std::sqrt(model.scaleDiagonal()[j]);
  SampleMatrix out(count, m);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < m; ++j) out(i, j) = sd[j] * rng.normal();
    const double w = std::sqrt(model.eta() / rng.chiSquared(model.eta()));
    for (std::size_t j = 0; j < m; ++j) out(i, j) *= w;
  }
  return out;
}

SampleMatrix gaussianReferenceSampler(const GaussianModel& model, std::size_t count, Rng& rng) {
  const std::size_t m = model.dim();
  SampleMatrix out(count, m);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = std::sqrt(model.variances()[j]) * rng.normal();
  return out;
}

}  // namespace geomc
