#include "geomc/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace geomc {

// ---- Order study ------------------------------------------------------------

std::vector<double> dyadicGrid(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("dyadicGrid: lo > hi");
  std::vector<double> grid;
  for (int e = lo; e <= hi; ++e) grid.push_back(std::ldexp(1.0, -e));
  return grid;
}

double leastSquaresSlope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("leastSquaresSlope: need two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("leastSquaresSlope: degenerate abscissae");
  return sxy / sxx;
}

OrderStudyResult runOrderStudy(const Stepper& stepper, const RiemannianTarget& target,
                               const PhasePoint& start, const ExactFlow& exact,
                               const std::vector<double>& grid, const IntegratorConfig& base) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] < grid[i - 1])) throw std::invalid_argument("order study: grid must decrease");
  }
  OrderStudyResult out;
  std::vector<double> logEps, logErr;
  for (double eps : grid) {
    IntegratorConfig cfg = base.withStepSize(eps);
    cfg.numSteps = 1;
    const StepResult r = stepper.step(target, start, cfg);
    if (r.diverged) throw NumericalError("order study: step diverged at eps=" + std::to_string(eps));
    const auto [qe, ve] = exact(eps);
    const Vector vHat = r.next.velocity(target);
    long double err = 0.0L;
    for (std::size_t k = 0; k < qe.size(); ++k) {
      const long double dq = static_cast<long double>(r.next.q[k]) - qe[k];
      const long double dv = static_cast<long double>(vHat[k]) - ve[k];
      err += dq * dq + dv * dv;
    }
    out.stepSizes.push_back(eps);
    out.localErrors.push_back(static_cast<double>(err));
    if (!(err > 1e-26L)) out.slopeReliable = false;
    logEps.push_back(std::log(eps));
    logErr.push_back(0.5 * std::log(std::max(static_cast<double>(err), 1e-300)));
  }
  out.fittedSlope = leastSquaresSlope(logEps, logErr);
  return out;
}

OrderStudyResult runGeodesicOrderStudy(const Stepper& stepper, const std::vector<double>& grid,
                                       const IntegratorConfig& base) {
  const RiemannianTarget target(std::make_shared<GeodesicModel>());
  const double q0 = 1.0, p0 = 1.0;
  const PhasePoint start = PhasePoint::fromMomentum(target, {q0}, {p0});
  const ExactFlow exact = [&](double t) {
    return std::make_pair(Vector{GeodesicModel::exactPosition(q0, p0, t)},
                          Vector{GeodesicModel::exactVelocity(q0, p0, t)});
  };
  return runOrderStudy(stepper, target, start, exact, grid, base);
}

OrderStudyResult runHarmonicOrderStudy(const Stepper& stepper, double omega,
                                       const std::vector<double>& grid,
                                       const IntegratorConfig& base) {
  const RiemannianTarget target(std::make_shared<HarmonicModel>(omega));
  const double q0 = 1.0, p0 = 0.5;
  const PhasePoint start = PhasePoint::fromMomentum(target, {q0}, {p0});
  const ExactFlow exact = [&](double t) {
    const double c = std::cos(omega * t), s = std::sin(omega * t);
    return std::make_pair(Vector{q0 * c + p0 / omega * s}, Vector{-q0 * omega * s + p0 * c});
  };
  return runOrderStudy(stepper, target, start, exact, grid, base);
}

// ---- Jacobian oracle --------------------------------------------------------

namespace {

Vector endpoint(const RiemannianTarget& target, const Vector& q, const Vector& p,
                const IntegratorConfig& cfg, const Stepper& stepper) {
  PhasePoint s;
  s.q = q;
  s.p = p;
  const StepResult r = integrateTrajectory(target, s, cfg, stepper);
  if (r.diverged) throw NumericalError("finiteDifferenceJacobian: perturbed step diverged: " + r.divergence);
  Vector out = r.next.q;
  const Vector pe = r.next.momentum(target);
  out.insert(out.end(), pe.begin(), pe.end());
  return out;
}

double fdLogAbsDet(const RiemannianTarget& target, const Vector& q, const Vector& p,
                   const IntegratorConfig& cfg, const Stepper& stepper, double h) {
  const std::size_t m = q.size();
  DenseMatrix jac(2 * m);
  for (std::size_t c = 0; c < 2 * m; ++c) {
    Vector qp = q, pp = p, qm = q, pm = p;
    if (c < m) {
      qp[c] += h;
      qm[c] -= h;
    } else {
      pp[c - m] += h;
      pm[c - m] -= h;
    }
    const Vector fp = endpoint(target, qp, pp, cfg, stepper);
    const Vector fm = endpoint(target, qm, pm, cfg, stepper);
    for (std::size_t r = 0; r < 2 * m; ++r) jac(r, c) = (fp[r] - fm[r]) / (2.0 * h);
  }
  return logAbsDetFromPLU(pluFactorize(jac)).logAbsDet;
}

}  // namespace

JacobianCheckResult finiteDifferenceJacobian(const RiemannianTarget& target, const PhasePoint& state,
                                             const IntegratorConfig& cfg, const Stepper& stepper,
                                             double h) {
  const Vector p = state.momentum(target);
  PhasePoint s;
  s.q = state.q;
  s.p = p;
  const StepResult r = integrateTrajectory(target, s, cfg, stepper);
  if (r.diverged) throw NumericalError("finiteDifferenceJacobian: step diverged: " + r.divergence);
  JacobianCheckResult out;
  out.analyticLogAbsDet = r.logAbsJacobian;
  out.fdLogAbsDet = fdLogAbsDet(target, state.q, p, cfg, stepper, h);
  out.fdLogAbsDetHalfStep = fdLogAbsDet(target, state.q, p, cfg, stepper, 0.5 * h);
  out.relError = std::abs(out.analyticLogAbsDet - out.fdLogAbsDet) / std::max(std::abs(out.fdLogAbsDet), 1e-12);
  out.detRelError = std::abs(std::expm1(out.analyticLogAbsDet - out.fdLogAbsDet));
  return out;
}

// ---- Property suite ---------------------------------------------------------

bool PropertyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const PropertyCheck& c) { return c.skipped || c.passed; });
}

namespace {

double maxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

PhasePoint momentumState(const Vector& q, const Vector& p) {
  PhasePoint s;
  s.q = q;
  s.p = p;
  return s;
}

// Residual of (q, p) against the reference, inf on divergence.
double stateResidual(const RiemannianTarget& target, const StepResult& r, const Vector& q,
                     const Vector& p) {
  if (r.diverged) return INFINITY;
  return std::max(maxAbsDiff(r.next.q, q), maxAbsDiff(r.next.momentum(target), p));
}

PropertyCheck finish(std::string name, double residual, double tol, std::size_t violations = 0) {
  PropertyCheck c;
  c.name = std::move(name);
  c.residual = residual;
  c.tolerance = tol;
  c.violations = violations;
  c.passed = residual < tol;
  return c;
}

}  // namespace

PropertyReport runPropertySuite(const Stepper& stepper, const RiemannianTarget& target,
                                const PositionSampler& positions, Rng& rng,
                                const PropertySuiteConfig& cfg) {
  PropertyReport report;
  report.stepper = stepper.name();
  const double structureTol = stepper.isExplicit() ? cfg.explicitTol : cfg.implicitTol;

  IntegratorConfig one = cfg.step;
  one.numSteps = 1;
  IntegratorConfig back = one.withStepSize(-one.stepSize);
  IntegratorConfig multi = cfg.step;
  multi.numSteps = cfg.involutionSteps;
  IntegratorConfig coarse = cfg.energy;
  IntegratorConfig fine = coarse.withStepSize(0.5 * coarse.stepSize);
  fine.numSteps = 2 * coarse.numSteps;

  // States are drawn until the forward maps are defined there; implicit
  // schemes have no solution on part of phase space at finite step size.
  std::vector<Vector> qs, ps;
  const std::size_t maxDraws = 10 * cfg.trials + 10;
  std::size_t draws = 0;
  while (qs.size() < cfg.trials && draws < maxDraws) {
    ++draws;
    Vector q = positions(rng);
    Vector p = resampleMomentum(target, q, rng);
    const PhasePoint s = momentumState(q, p);
    if (stepper.step(target, s, one).diverged || integrateTrajectory(target, s, multi, stepper).diverged ||
        integrateTrajectory(target, s, coarse, stepper).diverged ||
        integrateTrajectory(target, s, fine, stepper).diverged) {
      ++report.excludedStates;
      continue;
    }
    qs.push_back(std::move(q));
    ps.push_back(std::move(p));
  }
  if (qs.size() < cfg.trials) {
    PropertyCheck c;
    c.name = "admissible-states";
    c.residual = static_cast<double>(qs.size());
    c.tolerance = static_cast<double>(cfg.trials);
    report.checks.push_back(c);
    return report;
  }

  double selfAdj = 0.0, invol = 0.0;
  std::size_t selfAdjBad = 0, involBad = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    // Phi_{-eps}(Phi_eps(x)) = x
    double r = INFINITY;
    const StepResult fwd = stepper.step(target, momentumState(qs[t], ps[t]), one);
    if (!fwd.diverged) {
      const StepResult bwd = stepper.step(target, fwd.next, back);
      r = stateResidual(target, bwd, qs[t], ps[t]);
    }
    selfAdj = std::max(selfAdj, r);
    if (!(r < structureTol)) ++selfAdjBad;

    // (F o Phi^k)^2 = Id
    r = INFINITY;
    const StepResult a = integrateTrajectory(target, momentumState(qs[t], ps[t]), multi, stepper);
    if (!a.diverged) {
      const StepResult b = integrateTrajectory(target, flipMomentum(a.next), multi, stepper);
      if (!b.diverged) {
        const PhasePoint back2 = flipMomentum(b.next);
        r = std::max(maxAbsDiff(back2.q, qs[t]), maxAbsDiff(back2.momentum(target), ps[t]));
      }
    }
    invol = std::max(invol, r);
    if (!(r < structureTol)) ++involBad;
  }
  report.checks.push_back(finish("self-adjointness", selfAdj, structureTol, selfAdjBad));
  report.checks.push_back(finish("involution", invol, structureTol, involBad));

  // With G = Id each Riemannian scheme collapses onto its Euclidean counterpart.
  if (stepper.builtin()) {
    const RiemannianTarget flat(std::make_shared<EuclideanView>(target.modelPtr()));
    const bool inverted = stepper.kind() == IntegratorKind::InvertedLagrangian ||
                          stepper.kind() == IntegratorKind::InvertedLeapfrog;
    const Stepper reference(inverted ? IntegratorKind::InvertedLeapfrog
                                     : IntegratorKind::StandardLeapfrog);
    double degen = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      Vector p(qs[t].size());
      for (double& x : p) x = rng.normal();
      const StepResult a = stepper.step(flat, momentumState(qs[t], p), one);
      const StepResult b = reference.step(flat, momentumState(qs[t], p), one);
      if (a.diverged || b.diverged) {
        degen = INFINITY;
        continue;
      }
      degen = std::max(degen, std::max(maxAbsDiff(a.next.q, b.next.q),
                                       maxAbsDiff(a.next.momentum(flat), b.next.momentum(flat))));
      degen = std::max(degen, std::abs(a.logAbsJacobian));
    }
    report.checks.push_back(finish("euclidean-degeneracy", degen, cfg.degeneracyTol));
  } else {
    PropertyCheck c;
    c.name = "euclidean-degeneracy";
    c.skipped = true;
    report.checks.push_back(c);
  }

  // Fixed-time energy error: halving eps should cut max |dH| by about 4.
  {
    double maxCoarse = 0.0, maxFine = 0.0;
    bool ok = true;
    for (std::size_t t = 0; t < cfg.trials && ok; ++t) {
      const double h0 = target.hamiltonian(qs[t], ps[t]);
      for (int pass = 0; pass < 2; ++pass) {
        const StepResult r =
            integrateTrajectory(target, momentumState(qs[t], ps[t]), pass == 0 ? coarse : fine, stepper);
        if (r.diverged) {
          ok = false;
          break;
        }
        const double dh = std::abs(target.hamiltonian(r.next.q, r.next.momentum(target)) - h0);
        (pass == 0 ? maxCoarse : maxFine) = std::max(pass == 0 ? maxCoarse : maxFine, dh);
      }
    }
    PropertyCheck c;
    c.name = "energy-halving-ratio";
    c.residual = ok && maxFine > 0.0 ? maxCoarse / maxFine : INFINITY;
    c.tolerance = cfg.energyRatioHi;
    c.passed = c.residual >= cfg.energyRatioLo && c.residual <= cfg.energyRatioHi;
    report.checks.push_back(c);
  }
  return report;
}

// ---- Fixtures ---------------------------------------------------------------

Stepper eulerStepper() {
  return Stepper("euler", [](const RiemannianTarget& target, const PhasePoint& state,
                             const IntegratorConfig& cfg) {
    StepResult r;
    try {
      const auto geom = state.ensureGeometry(target);
      const Vector p = state.momentum(target);
      const Vector u = geom->solve(p);
      const Vector grad = geom->gradPotential();
      Vector pNew(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) {
        pNew[k] = p[k] - cfg.stepSize * (grad[k] - 0.5 * dot(u, geom->partials()[k].apply(u)));
      }
      r.next.q = axpy(state.q, cfg.stepSize, u);
      r.next.p = std::move(pNew);
    } catch (const NumericalError& e) {
      r.next = state;
      r.diverged = true;
      r.divergence = e.what();
    }
    return r;
  });
}

Stepper brokenLeapfrogStepper() {
  return Stepper("broken-leapfrog", [](const RiemannianTarget& target, const PhasePoint& state,
                                       const IntegratorConfig& cfg) {
    StepResult r;
    try {
      const auto geom = state.ensureGeometry(target);
      const Vector pHalf = axpy(state.momentum(target), -0.5 * cfg.stepSize, geom->gradPotential());
      r.next.q = axpy(state.q, cfg.stepSize, pHalf);
      r.next.p = pHalf;
      r.next.v = pHalf;
    } catch (const NumericalError& e) {
      r.next = state;
      r.diverged = true;
      r.divergence = e.what();
    }
    return r;
  });
}

Stepper exactGeodesicStepper() {
  return Stepper("exact-geodesic", [](const RiemannianTarget& target, const PhasePoint& state,
                                      const IntegratorConfig& cfg) {
    const double q0 = state.q.at(0);
    const double p0 = state.momentum(target).at(0);
    const double q = GeodesicModel::exactPosition(q0, p0, cfg.stepSize);
    const double v = GeodesicModel::exactVelocity(q0, p0, cfg.stepSize);
    StepResult r;
    r.next.q = {q};
    r.next.v = {v};
    r.next.p = {v / (q * q)};
    return r;
  });
}

// ---- Robustness -------------------------------------------------------------

const RobustnessRow* RobustnessResult::find(Method m) const {
  for (const auto& r : rows) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

RobustnessResult runRobustnessExperiment(std::shared_ptr<const MetricModel> base,
                                         const SampleMatrix& iid, const RobustnessConfig& cfg) {
  const RiemannianTarget target(std::make_shared<MisspecifiedModel>(std::move(base), cfg.delta));
  RobustnessResult out;
  const std::vector<ChainResult> chains = runChains(target, cfg.chains, cfg.threads);
  for (std::size_t i = 0; i < chains.size(); ++i) {
    Rng rng(cfg.seed, 0x4b53 + i);
    RobustnessRow row;
    row.method = cfg.chains[i].method;
    row.ksMean = ksErgodicity(chains[i].samples, iid, rng).mean;
    row.acceptanceRate = acceptanceRate(chains[i].records);
    out.rows.push_back(row);
  }

  Rng rng(cfg.seed, 0x4a43);
  const Stepper lmc(IntegratorKind::Lagrangian);
  for (std::size_t t = 0; t < cfg.jacobianTrials && t < iid.rows(); ++t) {
    const auto row = iid.row(t);
    Vector q(row.begin(), row.end());
    PhasePoint s;
    s.p = resampleMomentum(target, q, rng);
    s.q = std::move(q);
    const JacobianCheckResult j = finiteDifferenceJacobian(target, s, cfg.jacobianStep, lmc);
    out.lmcJacobianRelError = std::max(out.lmcJacobianRelError, j.relError);
    out.lmcJacobianDetRelError = std::max(out.lmcJacobianDetRelError, j.detRelError);
  }
  return out;
}

}  // namespace geomc
