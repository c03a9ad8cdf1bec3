#include "geomc/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace geomc {

void IntegratorConfig::validate() const {
  if (!(std::isfinite(stepSize) && stepSize != 0.0)) {
    throw std::invalid_argument("integrator: stepSize must be finite and non-zero");
  }
  if (numSteps < 1) throw std::invalid_argument("integrator: numSteps must be >= 1");
  if (!(fixedPointTol > 0.0)) throw std::invalid_argument("integrator: fixedPointTol must be > 0");
  if (fixedPointMaxIters < 1) {
    throw std::invalid_argument("integrator: fixedPointMaxIters must be >= 1");
  }
}

std::string integratorName(IntegratorKind kind) {
  switch (kind) {
    case IntegratorKind::StandardLeapfrog: return "leapfrog";
    case IntegratorKind::InvertedLeapfrog: return "inverted-leapfrog";
    case IntegratorKind::GeneralizedLeapfrog: return "generalized-leapfrog";
    case IntegratorKind::Lagrangian: return "lagrangian";
    case IntegratorKind::InvertedLagrangian: return "inverted-lagrangian";
  }
  return "unknown";
}

namespace {

// Raised inside a step for conditions that make the step invalid but are not
// linear-algebra failures.
struct StepFailure {
  std::string reason;
};

void checkState(std::span<const double> x, const char* what) {
  for (double c : x) {
    if (!std::isfinite(c)) throw StepFailure{std::string("non-finite ") + what};
    if (std::abs(c) > kDivergenceBound) throw StepFailure{std::string(what) + " out of bounds"};
  }
}

StepResult divergedResult(const PhasePoint& state, std::string reason) {
  StepResult r;
  r.next = state;
  r.diverged = true;
  r.divergence = std::move(reason);
  return r;
}

template <typename F>
StepResult guarded(const PhasePoint& state, F&& body) {
  try {
    return body();
  } catch (const StepFailure& e) {
    return divergedResult(state, e.reason);
  } catch (const NumericalError& e) {
    return divergedResult(state, e.what());
  }
}

// log|det(Id + scale*Omega)| and a solve against it.
struct ShiftedOmega {
  PLUFactors plu;
  double logAbsDet;
};

ShiftedOmega factorShifted(const DenseMatrix& omega, double sign) {
  DenseMatrix a = DenseMatrix::identity(omega.dim());
  if (sign > 0) {
    a += omega;
  } else {
    a -= omega;
  }
  ShiftedOmega s{pluFactorize(a), 0.0};
  s.logAbsDet = logAbsDetFromPLU(s.plu).logAbsDet;
  return s;
}

double logAbsDetShifted(const DenseMatrix& omega, double sign) {
  return factorShifted(omega, sign).logAbsDet;
}

// -1/2 u^T g_k u for each k.
Vector quadraticPartials(const LocalGeometry& geom, std::span<const double> u) {
  Vector out(geom.dim());
  for (std::size_t k = 0; k < geom.dim(); ++k) {
    out[k] = -0.5 * dot(u, geom.partials()[k].apply(u));
  }
  return out;
}

// Velocity-form core of one Lagrangian step. geom is the geometry at q. The
// metric log-det ratio is not included in logJ.
struct VelocityStep {
  Vector q, v;
  std::shared_ptr<const LocalGeometry> geometry;  // at the new position
  double logJ = 0.0;
  int dets = 0;
};

VelocityStep lagrangianCore(const RiemannianTarget& target, const LocalGeometry& geom,
                            std::span<const double> v, double eps) {
  VelocityStep out;
  // v_half = (Id + Omega(q, v))^-1 (v - eps/2 G^-1 grad U(q))
  const ShiftedOmega a0 = factorShifted(geom.omega(eps, v), +1.0);
  const Vector rhs0 = axpy(v, -0.5 * eps, geom.solve(geom.gradPotential()));
  const Vector vHalf = solveFromPLU(a0.plu, rhs0);
  checkState(vHalf, "velocity");
  out.logJ -= a0.logAbsDet;
  out.logJ += logAbsDetShifted(geom.omega(eps, vHalf), -1.0);

  Vector qNew = axpy(geom.position(), eps, vHalf);
  checkState(qNew, "position");
  auto next = target.geometryAt(qNew);

  const ShiftedOmega a1 = factorShifted(next->omega(eps, vHalf), +1.0);
  const Vector rhs1 = axpy(vHalf, -0.5 * eps, next->solve(next->gradPotential()));
  Vector vNew = solveFromPLU(a1.plu, rhs1);
  checkState(vNew, "velocity");
  out.logJ -= a1.logAbsDet;
  out.logJ += logAbsDetShifted(next->omega(eps, vNew), -1.0);

  out.dets = 4;
  out.q = std::move(qNew);
  out.v = std::move(vNew);
  out.geometry = std::move(next);
  return out;
}

VelocityStep invertedLagrangianCore(const RiemannianTarget& target, std::span<const double> q,
                                    std::span<const double> v, double eps) {
  VelocityStep out;
  const Vector qMid = axpy(q, 0.5 * eps, v);
  checkState(qMid, "position");
  const auto mid = target.geometryAt(qMid);

  // Omega is linear in eps, so 2 Omega(eps) = Omega(2 eps).
  const ShiftedOmega a = factorShifted(mid->omega(2.0 * eps, v), +1.0);
  const Vector rhs = axpy(v, -eps, mid->solve(mid->gradPotential()));
  Vector vNew = solveFromPLU(a.plu, rhs);
  checkState(vNew, "velocity");
  out.logJ = logAbsDetShifted(mid->omega(2.0 * eps, vNew), -1.0) - a.logAbsDet;
  out.dets = 2;

  out.q = axpy(qMid, 0.5 * eps, vNew);
  checkState(out.q, "position");
  out.v = std::move(vNew);
  return out;
}

PhasePoint makePoint(Vector q, Vector p, Vector v, std::shared_ptr<const LocalGeometry> geom) {
  PhasePoint s;
  s.q = std::move(q);
  s.p = std::move(p);
  s.v = std::move(v);
  s.geometry = std::move(geom);
  return s;
}

// Log det of G at q, reusing cached factors when the state carries them.
struct EndpointMetric {
  PLUFactors plu;
  DenseMatrix metric;
  double logDet;
};

EndpointMetric endpointMetric(const RiemannianTarget& target, const PhasePoint& state) {
  if (state.geometry) {
    return {state.geometry->metricFactors(), state.geometry->metric(),
            state.geometry->logDetMetric()};
  }
  MetricFactors f = factorMetric(target.model(), state.q);
  return {std::move(f.plu), std::move(f.metric), f.logDetMetric};
}

Vector velocityOf(const PhasePoint& state, const EndpointMetric& m) {
  if (state.v) return *state.v;
  if (!state.p) throw std::logic_error("PhasePoint: neither momentum nor velocity set");
  return solveFromPLU(m.plu, *state.p);
}

Vector momentumOf(const PhasePoint& state, const LocalGeometry& geom) {
  if (state.p) return *state.p;
  if (!state.v) throw std::logic_error("PhasePoint: neither momentum nor velocity set");
  return geom.metric().apply(*state.v);
}

StepResult lagrangianTrajectory(const RiemannianTarget& target, const PhasePoint& state,
                                const IntegratorConfig& cfg, bool inverted) {
  return guarded(state, [&] {
    const EndpointMetric start = endpointMetric(target, state);
    Vector q = state.q;
    Vector v = velocityOf(state, start);
    std::shared_ptr<const LocalGeometry> geom;
    if (!inverted) geom = state.ensureGeometry(target);

    StepResult r;
    for (int i = 0; i < cfg.numSteps; ++i) {
      VelocityStep s = inverted ? invertedLagrangianCore(target, q, v, cfg.stepSize)
                                : lagrangianCore(target, *geom, v, cfg.stepSize);
      r.logAbsJacobian += s.logJ;
      r.omegaDeterminants += s.dets;
      q = std::move(s.q);
      v = std::move(s.v);
      geom = std::move(s.geometry);
    }

    Vector p;
    double logDetEnd;
    if (geom) {
      p = geom->metric().apply(v);
      logDetEnd = geom->logDetMetric();
    } else {
      const MetricFactors f = factorMetric(target.model(), q);
      p = f.metric.apply(v);
      logDetEnd = f.logDetMetric;
    }
    checkState(p, "momentum");
    r.logAbsJacobian += logDetEnd - start.logDet;
    if (!std::isfinite(r.logAbsJacobian)) throw StepFailure{"non-finite log-Jacobian"};
    r.next = makePoint(std::move(q), std::move(p), std::move(v), std::move(geom));
    return r;
  });
}

// Potential gradient for the Euclidean schemes. With an identity metric this is
// -grad L and no geometry needs to be built.
Vector euclideanGradient(const RiemannianTarget& target, const PhasePoint& state) {
  if (state.geometry) return state.geometry->gradPotential();
  if (target.model().euclidean()) {
    Vector g = target.model().gradLogDensity(state.q);
    for (double& x : g) x = -x;
    return g;
  }
  return target.geometryAt(state.q)->gradPotential();
}

Vector euclideanGradient(const RiemannianTarget& target, const Vector& q) {
  PhasePoint s;
  s.q = q;
  return euclideanGradient(target, s);
}

// Euclidean kick-drift-kick; the metric is assumed to be the identity.
StepResult standardCore(const RiemannianTarget& target, const PhasePoint& state, double eps) {
  const Vector p0 = state.p ? *state.p : *state.v;
  const Vector pHalf = axpy(p0, -0.5 * eps, euclideanGradient(target, state));
  Vector q = axpy(state.q, eps, pHalf);
  checkState(q, "position");
  Vector p = axpy(pHalf, -0.5 * eps, euclideanGradient(target, q));
  checkState(p, "momentum");
  StepResult r;
  r.next = makePoint(std::move(q), p, p, nullptr);
  return r;
}

// Euclidean drift-kick-drift.
StepResult invertedCore(const RiemannianTarget& target, const PhasePoint& state, double eps) {
  const Vector p0 = state.p ? *state.p : *state.v;
  const Vector qMid = axpy(state.q, 0.5 * eps, p0);
  checkState(qMid, "position");
  Vector p = axpy(p0, -eps, euclideanGradient(target, qMid));
  checkState(p, "momentum");
  Vector q = axpy(qMid, 0.5 * eps, p);
  checkState(q, "position");
  StepResult r;
  r.next = makePoint(std::move(q), p, p, nullptr);
  return r;
}

StepResult generalizedCore(const RiemannianTarget& target, const PhasePoint& state,
                           const IntegratorConfig& cfg) {
  const double eps = cfg.stepSize;
  const auto g0 = state.ensureGeometry(target);
  const Vector p0 = momentumOf(state, *g0);
  const Vector gradU0 = g0->gradPotential();
  StepResult r;

  // p_half = p - eps/2 (grad U(q) - 1/2 u^T g_k(q) u), u = G^-1(q) p_half
  Vector pHalf = p0;
  int iters = 0;
  bool converged = false;
  while (iters < cfg.fixedPointMaxIters) {
    ++iters;
    const Vector quad = quadraticPartials(*g0, g0->solve(pHalf));
    Vector nextIt(p0.size());
    for (std::size_t k = 0; k < p0.size(); ++k) nextIt[k] = p0[k] - 0.5 * eps * (gradU0[k] + quad[k]);
    checkState(nextIt, "momentum");
    const double change = normInf(subtract(nextIt, pHalf));
    pHalf = std::move(nextIt);
    if (change < cfg.fixedPointTol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw StepFailure{"momentum fixed point did not converge"};
  r.fixedPointIters = iters;

  // q_new = q + eps/2 (G^-1(q) + G^-1(q_new)) p_half
  const Vector drift0 = g0->solve(pHalf);
  Vector q = state.q;
  iters = 0;
  converged = false;
  while (iters < cfg.fixedPointMaxIters) {
    ++iters;
    const MetricFactors f = factorMetric(target.model(), q);
    const Vector drift1 = solveFromPLU(f.plu, pHalf);
    Vector nextIt(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
      nextIt[k] = state.q[k] + 0.5 * eps * (drift0[k] + drift1[k]);
    }
    checkState(nextIt, "position");
    const double change = normInf(subtract(nextIt, q));
    q = std::move(nextIt);
    if (change < cfg.fixedPointTol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw StepFailure{"position fixed point did not converge"};
  r.fixedPointIters = std::max(r.fixedPointIters, iters);

  // Explicit half-kick at the new position.
  auto g1 = target.geometryAt(q);
  const Vector gradU1 = g1->gradPotential();
  const Vector quad = quadraticPartials(*g1, g1->solve(pHalf));
  Vector p(pHalf.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = pHalf[k] - 0.5 * eps * (gradU1[k] + quad[k]);
  checkState(p, "momentum");
  Vector v = g1->solve(p);
  r.next = makePoint(std::move(q), std::move(p), std::move(v), std::move(g1));
  return r;
}

}  // namespace

StepResult standardLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                const IntegratorConfig& cfg) {
  return guarded(state, [&] { return standardCore(target, state, cfg.stepSize); });
}

StepResult invertedLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                const IntegratorConfig& cfg) {
  return guarded(state, [&] { return invertedCore(target, state, cfg.stepSize); });
}

StepResult generalizedLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                   const IntegratorConfig& cfg) {
  return guarded(state, [&] { return generalizedCore(target, state, cfg); });
}

StepResult lagrangianLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                  const IntegratorConfig& cfg) {
  IntegratorConfig one = cfg;
  one.numSteps = 1;
  return lagrangianTrajectory(target, state, one, false);
}

StepResult invertedLagrangianLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                          const IntegratorConfig& cfg) {
  IntegratorConfig one = cfg;
  one.numSteps = 1;
  return lagrangianTrajectory(target, state, one, true);
}

Stepper::Stepper(IntegratorKind kind) : name_(integratorName(kind)), kind_(kind) {}

Stepper::Stepper(std::string name, StepFunction fn) : name_(std::move(name)), custom_(std::move(fn)) {
  if (!custom_) throw std::invalid_argument("Stepper: empty step function");
}

bool Stepper::isExplicit() const {
  return custom_ || kind_ != IntegratorKind::GeneralizedLeapfrog;
}

StepResult Stepper::step(const RiemannianTarget& target, const PhasePoint& state,
                         const IntegratorConfig& cfg) const {
  if (custom_) return custom_(target, state, cfg);
  switch (kind_) {
    case IntegratorKind::StandardLeapfrog: return standardLeapfrogStep(target, state, cfg);
    case IntegratorKind::InvertedLeapfrog: return invertedLeapfrogStep(target, state, cfg);
    case IntegratorKind::GeneralizedLeapfrog: return generalizedLeapfrogStep(target, state, cfg);
    case IntegratorKind::Lagrangian: return lagrangianLeapfrogStep(target, state, cfg);
    case IntegratorKind::InvertedLagrangian:
      return invertedLagrangianLeapfrogStep(target, state, cfg);
  }
  throw std::logic_error("Stepper: unknown kind");
}

StepResult integrateTrajectory(const RiemannianTarget& target, const PhasePoint& state,
                               const IntegratorConfig& cfg, const Stepper& stepper) {
  cfg.validate();
  if (stepper.builtin() && (stepper.kind() == IntegratorKind::Lagrangian ||
                            stepper.kind() == IntegratorKind::InvertedLagrangian)) {
    return lagrangianTrajectory(target, state, cfg,
                                stepper.kind() == IntegratorKind::InvertedLagrangian);
  }
  StepResult total;
  total.next = state;
  for (int i = 0; i < cfg.numSteps; ++i) {
    StepResult s = stepper.step(target, total.next, cfg);
    if (s.diverged) {
      s.next = state;
      return s;
    }
    total.logAbsJacobian += s.logAbsJacobian;
    total.omegaDeterminants += s.omegaDeterminants;
    total.fixedPointIters = std::max(total.fixedPointIters, s.fixedPointIters);
    total.next = std::move(s.next);
  }
  return total;
}

PhasePoint flipMomentum(const PhasePoint& state) {
  PhasePoint out = state;
  if (out.p) {
    for (double& x : *out.p) x = -x;
  }
  if (out.v) {
    for (double& x : *out.v) x = -x;
  }
  return out;
}

}  // namespace geomc
