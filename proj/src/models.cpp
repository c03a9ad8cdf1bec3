#include "geomc/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace geomc {

namespace {

void requireDim(std::span<const double> q, std::size_t m, const char* who) {
  if (q.size() != m) throw DimensionMismatch(std::string(who) + ": position size mismatch");
}

std::vector<DenseMatrix> zeroPartials(std::size_t m) {
  return std::vector<DenseMatrix>(m, DenseMatrix(m));
}

}  // namespace

// ---- Gaussian ---------------------------------------------------------------

GaussianModel::GaussianModel(Vector variances) : variances_(std::move(variances)) {
  if (variances_.empty()) throw std::invalid_argument("GaussianModel: empty variances");
  for (double s : variances_) {
    if (!(s > 0.0)) throw std::invalid_argument("GaussianModel: variances must be positive");
  }
}

double GaussianModel::logDensity(std::span<const double> q) const {
  requireDim(q, dim(), "GaussianModel");
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * q[i] / variances_[i];
  return -0.5 * s;
}

Vector GaussianModel::gradLogDensity(std::span<const double> q) const {
  requireDim(q, dim(), "GaussianModel");
  Vector g(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) g[i] = -q[i] / variances_[i];
  return g;
}

DenseMatrix GaussianModel::metric(std::span<const double>) const {
  return DenseMatrix::identity(dim());
}

std::vector<DenseMatrix> GaussianModel::metricPartials(std::span<const double>) const {
  return zeroPartials(dim());
}

// ---- Harmonic ---------------------------------------------------------------

HarmonicModel::HarmonicModel(double omega, std::size_t dim) : omega_(omega), dim_(dim) {
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("HarmonicModel: omega must be finite and >= 0");
  }
  if (dim == 0) throw std::invalid_argument("HarmonicModel: dim must be >= 1");
}

double HarmonicModel::logDensity(std::span<const double> q) const {
  requireDim(q, dim_, "HarmonicModel");
  return -0.5 * omega_ * omega_ * squaredNorm(q);
}

Vector HarmonicModel::gradLogDensity(std::span<const double> q) const {
  requireDim(q, dim_, "HarmonicModel");
  Vector g(q.begin(), q.end());
  for (double& x : g) x *= -omega_ * omega_;
  return g;
}

DenseMatrix HarmonicModel::metric(std::span<const double>) const {
  return DenseMatrix::identity(dim_);
}

std::vector<DenseMatrix> HarmonicModel::metricPartials(std::span<const double>) const {
  return zeroPartials(dim_);
}

// ---- Geodesic ---------------------------------------------------------------

namespace {
double geodesicPosition(std::span<const double> q) {
  requireDim(q, 1, "GeodesicModel");
  if (!(q[0] > 0.0)) throw DomainError("GeodesicModel: q must be positive");
  return q[0];
}
}  // namespace

// U = -L + 1/2 log det G = -L - log q, so L = -log q gives U = 0.
double GeodesicModel::logDensity(std::span<const double> q) const {
  return -std::log(geodesicPosition(q));
}

Vector GeodesicModel::gradLogDensity(std::span<const double> q) const {
  return {-1.0 / geodesicPosition(q)};
}

DenseMatrix GeodesicModel::metric(std::span<const double> q) const {
  const double x = geodesicPosition(q);
  return DenseMatrix(1, {1.0 / (x * x)});
}

std::vector<DenseMatrix> GeodesicModel::metricPartials(std::span<const double> q) const {
  const double x = geodesicPosition(q);
  return {DenseMatrix(1, {-2.0 / (x * x * x)})};
}

double GeodesicModel::exactPosition(double q0, double p0, double t) {
  return q0 * std::exp(q0 * p0 * t);
}

double GeodesicModel::exactVelocity(double q0, double p0, double t) {
  return q0 * q0 * p0 * std::exp(q0 * p0 * t);
}

// ---- Banana -----------------------------------------------------------------

BananaModel::BananaModel(std::vector<double> y, double sigmaSqTheta, double sigmaSqY)
    : y_(std::move(y)), sigmaSqTheta_(sigmaSqTheta), sigmaSqY_(sigmaSqY), n_(y_.size()) {
  if (n_ == 0) throw std::invalid_argument("BananaModel: no data");
  if (!(sigmaSqTheta > 0.0) || !(sigmaSqY > 0.0)) {
    throw std::invalid_argument("BananaModel: variances must be positive");
  }
  for (double v : y_) {
    if (!std::isfinite(v)) throw std::invalid_argument("BananaModel: non-finite observation");
    sumY_ += v;
    sumSqY_ += v * v;
  }
}

std::vector<double> BananaModel::fixtureData() {
  return {
#include "banana_data.inc"
  };
}

std::shared_ptr<BananaModel> BananaModel::fixture() {
  return std::make_shared<BananaModel>(fixtureData());
}

std::vector<double> BananaModel::generateData(std::size_t n, double theta1, double theta2,
                                              double sigmaSqY, Rng& rng) {
  std::vector<double> y(n);
  const double mean = theta1 + theta2 * theta2;
  const double sd = std::sqrt(sigmaSqY);
  for (double& v : y) v = mean + sd * rng.normal();
  return y;
}

double BananaModel::logDensity(std::span<const double> q) const {
  requireDim(q, 2, "BananaModel");
  const double mu = q[0] + q[1] * q[1];
  const double n = static_cast<double>(n_);
  // sum (y_i - mu)^2 expanded through the sufficient statistics
  const double sse = sumSqY_ - 2.0 * mu * sumY_ + n * mu * mu;
  return -0.5 * sse / sigmaSqY_ - 0.5 * (q[0] * q[0] + q[1] * q[1]) / sigmaSqTheta_;
}

Vector BananaModel::gradLogDensity(std::span<const double> q) const {
  requireDim(q, 2, "BananaModel");
  const double mu = q[0] + q[1] * q[1];
  const double r = (sumY_ - static_cast<double>(n_) * mu) / sigmaSqY_;
  return {r - q[0] / sigmaSqTheta_, 2.0 * q[1] * r - q[1] / sigmaSqTheta_};
}

DenseMatrix BananaModel::metric(std::span<const double> q) const {
  requireDim(q, 2, "BananaModel");
  const double a = static_cast<double>(n_) / sigmaSqY_;
  const double b = 1.0 / sigmaSqTheta_;
  const double t = q[1];
  return DenseMatrix(2, {a + b, 2.0 * a * t, 2.0 * a * t, 4.0 * a * t * t + b});
}

std::vector<DenseMatrix> BananaModel::metricPartials(std::span<const double> q) const {
  requireDim(q, 2, "BananaModel");
  const double a = static_cast<double>(n_) / sigmaSqY_;
  return {DenseMatrix(2), DenseMatrix(2, {0.0, 2.0 * a, 2.0 * a, 8.0 * a * q[1]})};
}

// ---- Logistic ---------------------------------------------------------------

LogisticModel::LogisticModel(std::vector<Vector> x, std::vector<int> y, double alpha,
                             std::string label)
    : x_(std::move(x)), y_(std::move(y)), alpha_(alpha), label_(std::move(label)) {
  if (x_.empty()) throw std::invalid_argument("LogisticModel: no observations");
  if (x_.size() != y_.size()) throw DimensionMismatch("LogisticModel: X and y lengths differ");
  if (!(alpha > 0.0)) throw std::invalid_argument("LogisticModel: alpha must be positive");
  d_ = x_.front().size();
  if (d_ == 0) throw std::invalid_argument("LogisticModel: no features");
  for (const auto& row : x_) {
    if (row.size() != d_) throw DimensionMismatch("LogisticModel: ragged design matrix");
  }
  for (int label : y_) {
    if (label != 0 && label != 1) throw std::invalid_argument("LogisticModel: labels must be 0/1");
  }
}

std::shared_ptr<LogisticModel> LogisticModel::synthetic(std::size_t n, std::size_t d, Rng& rng,
                                                        double alpha) {
  if (d < 1) throw std::invalid_argument("LogisticModel::synthetic: d must be >= 1");
  Vector beta(d);
  for (double& b : beta) b = 0.5 * rng.normal();
  std::vector<Vector> x(n, Vector(d));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i][0] = 1.0;
    for (std::size_t j = 1; j < d; ++j) x[i][j] = rng.normal();
    const double prob = 1.0 / (1.0 + std::exp(-dot(x[i], beta)));
    y[i] = rng.uniform() < prob ? 1 : 0;
  }
  return std::make_shared<LogisticModel>(std::move(x), std::move(y), alpha,
                                         "logistic-" + std::to_string(n) + "x" + std::to_string(d));
}

std::shared_ptr<LogisticModel> LogisticModel::fromCsv(const std::string& path, double alpha) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset: " + path);
  std::vector<Vector> x;
  std::vector<int> y;
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    Vector row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": bad number '" + cell + "'");
      }
    }
    if (row.size() < 2) {
      throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": need features and label");
    }
    const double label = row.back();
    row.pop_back();
    if (label != 0.0 && label != 1.0) {
      throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": label must be 0 or 1");
    }
    x.push_back(std::move(row));
    y.push_back(static_cast<int>(label));
  }
  return std::make_shared<LogisticModel>(std::move(x), std::move(y), alpha, "logistic-csv");
}

namespace {
// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}
}  // namespace

double LogisticModel::logDensity(std::span<const double> q) const {
  requireDim(q, d_, "LogisticModel");
  double s = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double t = dot(x_[i], q);
    s += y_[i] * t - softplus(t);
  }
  return s - 0.5 * alpha_ * squaredNorm(q);
}

Vector LogisticModel::gradLogDensity(std::span<const double> q) const {
  requireDim(q, d_, "LogisticModel");
  Vector g(d_, 0.0);
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double r = y_[i] - sigmoid(dot(x_[i], q));
    for (std::size_t j = 0; j < d_; ++j) g[j] += r * x_[i][j];
  }
  for (std::size_t j = 0; j < d_; ++j) g[j] -= alpha_ * q[j];
  return g;
}

DenseMatrix LogisticModel::metric(std::span<const double> q) const {
  requireDim(q, d_, "LogisticModel");
  DenseMatrix g(d_);
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double s = sigmoid(dot(x_[i], q));
    const double w = s * (1.0 - s);
    const Vector& xi = x_[i];
    for (std::size_t a = 0; a < d_; ++a)
      for (std::size_t b = a; b < d_; ++b) g(a, b) += w * xi[a] * xi[b];
  }
  for (std::size_t a = 0; a < d_; ++a) {
    g(a, a) += alpha_;
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  }
  return g;
}

std::vector<DenseMatrix> LogisticModel::metricPartials(std::span<const double> q) const {
  requireDim(q, d_, "LogisticModel");
  std::vector<DenseMatrix> out(d_, DenseMatrix(d_));
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double s = sigmoid(dot(x_[i], q));
    // d/dt [s(1-s)] = s(1-s)(1-2s)
    const double w = s * (1.0 - s) * (1.0 - 2.0 * s);
    const Vector& xi = x_[i];
    for (std::size_t k = 0; k < d_; ++k) {
      const double c = w * xi[k];
      if (c == 0.0) continue;
      DenseMatrix& gk = out[k];
      for (std::size_t a = 0; a < d_; ++a)
        for (std::size_t b = a; b < d_; ++b) gk(a, b) += c * xi[a] * xi[b];
    }
  }
  for (DenseMatrix& gk : out)
    for (std::size_t a = 0; a < d_; ++a)
      for (std::size_t b = 0; b < a; ++b) gk(a, b) = gk(b, a);
  return out;
}

// ---- Student-t --------------------------------------------------------------

StudentTModel::StudentTModel(std::size_t dim, double eta, double sigmaSqLast)
    : dim_(dim), eta_(eta), scale_(dim, 1.0) {
  if (dim == 0) throw std::invalid_argument("StudentTModel: dim must be >= 1");
  if (!(eta > 2.0)) throw std::invalid_argument("StudentTModel: eta must exceed 2");
  if (!(sigmaSqLast > 0.0)) throw std::invalid_argument("StudentTModel: sigma^2 must be positive");
  scale_.back() = sigmaSqLast;
}

double StudentTModel::quadForm(std::span<const double> q) const {
  requireDim(q, dim_, "StudentTModel");
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += q[i] * q[i] / scale_[i];
  return s;
}

double StudentTModel::logDensity(std::span<const double> q) const {
  const double m = static_cast<double>(dim_);
  return -0.5 * (eta_ + m) * std::log1p(quadForm(q) / eta_);
}

Vector StudentTModel::gradLogDensity(std::span<const double> q) const {
  const double m = static_cast<double>(dim_);
  const double c = 1.0 + quadForm(q) / eta_;
  const double a = (eta_ + m) / (eta_ * c);
  Vector g(dim_);
  for (std::size_t i = 0; i < dim_; ++i) g[i] = -a * q[i] / scale_[i];
  return g;
}

DenseMatrix StudentTModel::metric(std::span<const double> q) const {
  const double m = static_cast<double>(dim_);
  const double c = 1.0 + quadForm(q) / eta_;
  const double a = (eta_ + m) / (eta_ * c);
  DenseMatrix g(dim_);
  for (std::size_t i = 0; i < dim_; ++i) g(i, i) = a / scale_[i];
  return g;
}

std::vector<DenseMatrix> StudentTModel::metricPartials(std::span<const double> q) const {
  const double m = static_cast<double>(dim_);
  const double c = 1.0 + quadForm(q) / eta_;
  // da/dx_k for a = (eta + m) / (eta c)
  const double base = -(eta_ + m) / (eta_ * c * c) * 2.0 / eta_;
  std::vector<DenseMatrix> out(dim_, DenseMatrix(dim_));
  for (std::size_t k = 0; k < dim_; ++k) {
    const double dak = base * q[k] / scale_[k];
    for (std::size_t i = 0; i < dim_; ++i) out[k](i, i) = dak / scale_[i];
  }
  return out;
}

// ---- Misspecification -------------------------------------------------------

MisspecifiedModel::MisspecifiedModel(std::shared_ptr<const MetricModel> base, double delta,
                                     std::vector<std::size_t> indices)
    : base_(std::move(base)), delta_(delta), indices_(std::move(indices)) {
  if (!base_) throw std::invalid_argument("MisspecifiedModel: null base model");
  for (std::size_t k : indices_) {
    if (k >= base_->dim()) throw std::invalid_argument("MisspecifiedModel: index out of range");
  }
}

std::vector<DenseMatrix> MisspecifiedModel::metricPartials(std::span<const double> q) const {
  std::vector<DenseMatrix> g = base_->metricPartials(q);
  if (indices_.empty()) {
    for (DenseMatrix& gk : g) gk *= 1.0 + delta_;
  } else {
    for (std::size_t k : indices_) g[k] *= 1.0 + delta_;
  }
  return g;
}

// ---- Finite-difference oracles ----------------------------------------------

std::vector<DenseMatrix> finiteDifferencePartials(const MetricModel& model,
                                                  std::span<const double> q, double h) {
  const std::size_t m = model.dim();
  std::vector<DenseMatrix> out;
  out.reserve(m);
  Vector x(q.begin(), q.end());
  for (std::size_t k = 0; k < m; ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    DenseMatrix plus = model.metric(x);
    x[k] = orig - h;
    DenseMatrix minus = model.metric(x);
    x[k] = orig;
    plus -= minus;
    plus *= 1.0 / (2.0 * h);
    out.push_back(std::move(plus));
  }
  return out;
}

Vector finiteDifferenceGradient(const MetricModel& model, std::span<const double> q, double h) {
  Vector x(q.begin(), q.end());
  Vector g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double fp = model.logDensity(x);
    x[k] = orig - h;
    const double fm = model.logDensity(x);
    x[k] = orig;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---- Propagators ------------------------------------------------------------

namespace {
void requireStable(double omega, double eps) {
  if (!(omega >= 0.0)) throw std::invalid_argument("omega must be >= 0");
  if (eps * eps * omega * omega >= 4.0) {
    throw UnstableRegime("eps^2 omega^2 >= 4: leapfrog schemes are unstable");
  }
}

using Mat2 = std::array<double, 4>;

Mat2 multiply(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
          a[2] * b[1] + a[3] * b[3]};
}
}  // namespace

std::array<double, 4> propagatorMatrix(double omega, double eps, LeapfrogVariant variant) {
  const double w2 = omega * omega;
  const double diag = 1.0 - 0.5 * eps * eps * w2;
  const double shrink = 1.0 - 0.25 * eps * eps * w2;
  if (variant == LeapfrogVariant::Leapfrog) return {diag, eps, -eps * w2 * shrink, diag};
  return {diag, eps * shrink, -eps * w2, diag};
}

double oneStepEsjdClosedForm(double omega, double eps, LeapfrogVariant variant) {
  requireStable(omega, eps);
  const double e2 = eps * eps;
  const double w2 = omega * omega;
  if (variant == LeapfrogVariant::Leapfrog) return 0.25 * e2 * e2 * w2 + e2;
  const double shrink = 1.0 - 0.25 * e2 * w2;
  return 0.25 * e2 * e2 * w2 + e2 * shrink * shrink;
}

double kStepEsjdFromPropagators(double omega, double eps, int k, LeapfrogVariant variant) {
  requireStable(omega, eps);
  if (k < 1) throw std::invalid_argument("kStepEsjdFromPropagators: k must be >= 1");
  const Mat2 r = propagatorMatrix(omega, eps, variant);
  Mat2 power{1.0, 0.0, 0.0, 1.0};
  for (int i = 0; i < k; ++i) power = multiply(r, power);
  // q_k - q = (R^k_00 - 1) q + R^k_01 p with q ~ N(0, 1/omega^2), p ~ N(0, 1)
  const double drift = power[1] * power[1];
  if (omega == 0.0) return drift;
  const double d = power[0] - 1.0;
  return d * d / (omega * omega) + drift;
}

}  // namespace geomc
