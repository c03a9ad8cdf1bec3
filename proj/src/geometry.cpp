#include "geomc/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace geomc {

EuclideanView::EuclideanView(std::shared_ptr<const MetricModel> base) : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("EuclideanView: null base model");
}

DenseMatrix EuclideanView::metric(std::span<const double>) const {
  return DenseMatrix::identity(base_->dim());
}

std::vector<DenseMatrix> EuclideanView::metricPartials(std::span<const double>) const {
  return std::vector<DenseMatrix>(base_->dim(), DenseMatrix(base_->dim()));
}

MetricFactors factorMetric(const MetricModel& model, std::span<const double> q) {
  DenseMatrix g = model.metric(q);
  for (double x : g.entries()) {
    if (!std::isfinite(x)) throw NonFiniteValue("metric has non-finite entries");
  }
  PLUFactors plu;
  try {
    plu = pluFactorize(g);
  } catch (const SingularMatrix&) {
    throw NotPositiveDefinite("metric is singular");
  }
  const LogAbsDet ld = logAbsDetFromPLU(plu);
  if (ld.sign <= 0) throw NotPositiveDefinite("metric has non-positive determinant");
  return MetricFactors{std::move(g), std::move(plu), ld.logAbsDet};
}

LocalGeometry::LocalGeometry(const MetricModel& model, Vector q)
    : q_(std::move(q)), factors_(factorMetric(model, q_)) {
  if (q_.size() != model.dim()) throw DimensionMismatch("LocalGeometry: position size mismatch");
  partials_ = model.metricPartials(q_);
  if (partials_.size() != q_.size()) {
    throw DimensionMismatch("LocalGeometry: model returned wrong number of metric partials");
  }
  inverse_ = inverseFromPLU(factors_.plu);
  gradLogDensity_ = model.gradLogDensity(q_);
}

DenseMatrix LocalGeometry::omega(double eps, std::span<const double> v) const {
  const std::size_t m = dim();
  if (v.size() != m) throw DimensionMismatch("omega: velocity size mismatch");

  // M_lj = sum_k v_k (g_k[l,j] + g_j[l,k] - g_l[k,j])
  //      = (sum_k v_k g_k)[l,j] + (g_j v)_l - (g_l v)_j
  DenseMatrix contracted(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (v[k] == 0.0) continue;
    const auto src = partials_[k].entries();
    auto dst = contracted.entries();
    for (std::size_t e = 0; e < src.size(); ++e) dst[e] += v[k] * src[e];
  }
  std::vector<Vector> gv(m);
  for (std::size_t a = 0; a < m; ++a) gv[a] = partials_[a].apply(v);
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t j = 0; j < m; ++j) contracted(l, j) += gv[j][l] - gv[l][j];

  DenseMatrix out = inverse_ * contracted;
  out *= 0.25 * eps;
  return out;
}

ChristoffelSymbols LocalGeometry::christoffel() const {
  const std::size_t m = dim();
  ChristoffelSymbols gamma(m);
  Vector w(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      for (std::size_t l = 0; l < m; ++l) {
        w[l] = partials_[i](l, j) + partials_[j](l, i) - partials_[l](i, j);
      }
      const Vector x = solve(w);
      for (std::size_t k = 0; k < m; ++k) {
        gamma(k, i, j) = 0.5 * x[k];
        gamma(k, j, i) = 0.5 * x[k];
      }
    }
  }
  return gamma;
}

Vector LocalGeometry::gradPotential() const {
  const std::size_t m = dim();
  Vector grad(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto gk = partials_[k].entries();
    const auto inv = inverse_.entries();
    // tr(G^-1 g_k) = sum_ab inv[a,b] g_k[b,a]; g_k symmetric.
    double tr = 0.0;
    for (std::size_t e = 0; e < gk.size(); ++e) tr += inv[e] * gk[e];
    grad[k] = -gradLogDensity_[k] + 0.5 * tr;
  }
  return grad;
}

ChristoffelSymbols christoffel(const MetricModel& model, std::span<const double> q) {
  return LocalGeometry(model, Vector(q.begin(), q.end())).christoffel();
}

DenseMatrix omegaFromChristoffel(double eps, const ChristoffelSymbols& gamma,
                                 std::span<const double> v) {
  const std::size_t m = gamma.dim();
  if (v.size() != m) throw DimensionMismatch("omegaFromChristoffel: size mismatch");
  DenseMatrix out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += gamma(i, k, j) * v[k];
      out(i, j) = 0.5 * eps * s;
    }
  return out;
}

DenseMatrix omega(double eps, const MetricModel& model, std::span<const double> q,
                  std::span<const double> v) {
  return omegaFromChristoffel(eps, christoffel(model, q), v);
}

Vector legendre(const MetricModel& model, std::span<const double> q, std::span<const double> v) {
  return factorMetric(model, q).metric.apply(v);
}

Vector inverseLegendre(const MetricModel& model, std::span<const double> q,
                       std::span<const double> p) {
  return solveFromPLU(factorMetric(model, q).plu, p);
}

RiemannianTarget::RiemannianTarget(std::shared_ptr<const MetricModel> model)
    : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("RiemannianTarget: null model");
}

std::shared_ptr<const LocalGeometry> RiemannianTarget::geometryAt(Vector q) const {
  return std::make_shared<const LocalGeometry>(*model_, std::move(q));
}

double RiemannianTarget::potential(std::span<const double> q) const {
  return -model_->logDensity(q) + 0.5 * factorMetric(*model_, q).logDetMetric;
}

double RiemannianTarget::potential(const LocalGeometry& geom) const {
  return -model_->logDensity(geom.position()) + 0.5 * geom.logDetMetric();
}

double RiemannianTarget::kineticEnergy(const LocalGeometry& geom, std::span<const double> p) const {
  return 0.5 * dot(p, geom.solve(p));
}

double RiemannianTarget::hamiltonian(std::span<const double> q, std::span<const double> p) const {
  const MetricFactors f = factorMetric(*model_, q);
  return -model_->logDensity(q) + 0.5 * f.logDetMetric + 0.5 * dot(p, solveFromPLU(f.plu, p));
}

double RiemannianTarget::hamiltonian(const LocalGeometry& geom, std::span<const double> p) const {
  return potential(geom) + kineticEnergy(geom, p);
}

PhasePoint PhasePoint::fromMomentum(const RiemannianTarget& target, Vector q, Vector p) {
  PhasePoint s;
  s.geometry = target.geometryAt(q);
  s.q = std::move(q);
  s.p = std::move(p);
  return s;
}

PhasePoint PhasePoint::fromVelocity(const RiemannianTarget& target, Vector q, Vector v) {
  PhasePoint s;
  s.geometry = target.geometryAt(q);
  s.q = std::move(q);
  s.v = std::move(v);
  return s;
}

std::shared_ptr<const LocalGeometry> PhasePoint::ensureGeometry(const RiemannianTarget& target) const {
  return geometry ? geometry : target.geometryAt(q);
}

Vector PhasePoint::momentum(const RiemannianTarget& target) const {
  if (p) return *p;
  if (!v) throw std::logic_error("PhasePoint: neither momentum nor velocity set");
  return ensureGeometry(target)->metric().apply(*v);
}

Vector PhasePoint::velocity(const RiemannianTarget& target) const {
  if (v) return *v;
  if (!p) throw std::logic_error("PhasePoint: neither momentum nor velocity set");
  return ensureGeometry(target)->solve(*p);
}

}  // namespace geomc
