#include "geomc/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace geomc {

std::string methodName(Method method) {
  switch (method) {
    case Method::HMC: return "hmc";
    case Method::RMHMC: return "rmhmc";
    case Method::LMC: return "lmc";
    case Method::ILMC: return "ilmc";
  }
  return "unknown";
}

Method parseMethod(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Method m : {Method::HMC, Method::RMHMC, Method::LMC, Method::ILMC}) {
    if (lower == methodName(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "' (expected hmc, rmhmc, lmc, ilmc)");
}

IntegratorKind integratorFor(Method method) {
  switch (method) {
    case Method::HMC: return IntegratorKind::StandardLeapfrog;
    case Method::RMHMC: return IntegratorKind::GeneralizedLeapfrog;
    case Method::LMC: return IntegratorKind::Lagrangian;
    case Method::ILMC: return IntegratorKind::InvertedLagrangian;
  }
  throw std::logic_error("integratorFor: unknown method");
}

void ChainConfig::validate(std::size_t dim) const {
  integrator.validate();
  if (numSamples < 1) throw std::invalid_argument("chain: numSamples must be >= 1");
  if (initialPosition.size() != dim) {
    throw DimensionMismatch("chain: initial position has " + std::to_string(initialPosition.size()) +
                            " coordinates, model has " + std::to_string(dim));
  }
}

double acceptanceProbability(double currentEnergy, double proposalEnergy, double logAbsJacobian) {
  const double logRatio = currentEnergy - proposalEnergy + logAbsJacobian;
  if (std::isnan(logRatio)) return 0.0;
  return std::min(1.0, std::exp(logRatio));
}

Vector resampleMomentum(const RiemannianTarget& target, std::span<const double> q, Rng& rng) {
  const CholeskyFactors chol = choleskyFactorize(target.model().metric(q));
  Vector z(q.size());
  for (double& x : z) x = rng.normal();
  return lowerTimes(chol, z);
}

namespace {

double proposalEnergy(const RiemannianTarget& target, const PhasePoint& proposal) {
  if (proposal.geometry) return target.hamiltonian(*proposal.geometry, *proposal.p);
  if (proposal.v) {
    const MetricFactors f = factorMetric(target.model(), proposal.q);
    return -target.model().logDensity(proposal.q) + 0.5 * f.logDetMetric +
           0.5 * dot(*proposal.p, *proposal.v);
  }
  return target.hamiltonian(proposal.q, *proposal.p);
}

}  // namespace

Transition transitionStep(const RiemannianTarget& target, const PhasePoint& state,
                          const IntegratorConfig& cfg, const Stepper& stepper, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  Transition out;
  ChainRecord& rec = out.record;

  const Vector p0 = resampleMomentum(target, state.q, rng);
  PhasePoint current;
  current.q = state.q;
  current.p = p0;
  current.geometry = state.geometry;
  rec.currentEnergy = current.geometry ? target.hamiltonian(*current.geometry, p0)
                                       : target.hamiltonian(current.q, p0);

  StepResult traj = integrateTrajectory(target, current, cfg, stepper);
  rec.fixedPointIters = traj.fixedPointIters;
  rec.omegaDeterminants = traj.omegaDeterminants;
  rec.diverged = traj.diverged;

  PhasePoint proposal;
  if (!rec.diverged) {
    proposal = flipMomentum(traj.next);
    try {
      rec.proposalEnergy = proposalEnergy(target, proposal);
    } catch (const NumericalError&) {
      rec.diverged = true;
    }
  }
  if (!rec.diverged && !(rec.proposalEnergy - rec.currentEnergy <= kEnergyBlowUp)) {
    rec.diverged = true;
  }

  const double u = rng.uniform();
  if (rec.diverged) {
    rec.proposalEnergy = INFINITY;
    rec.acceptProb = 0.0;
    rec.logAbsJacobian = 0.0;
  } else {
    rec.logAbsJacobian = traj.logAbsJacobian;
    rec.acceptProb = acceptanceProbability(rec.currentEnergy, rec.proposalEnergy, rec.logAbsJacobian);
    double sq = 0.0;
    for (std::size_t i = 0; i < state.q.size(); ++i) {
      const double d = proposal.q[i] - state.q[i];
      sq += d * d;
    }
    rec.sqJumpDistance = sq;
  }
  rec.accepted = u < rec.acceptProb;

  if (rec.accepted) {
    out.next.q = std::move(proposal.q);
    out.next.geometry = std::move(proposal.geometry);
  } else {
    out.next.q = state.q;
    out.next.geometry = state.geometry;
  }
  rec.wallClockNanos =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

RiemannianTarget targetFor(Method method, const RiemannianTarget& target) {
  if (method == Method::HMC && !target.model().euclidean()) {
    return RiemannianTarget(std::make_shared<EuclideanView>(target.modelPtr()));
  }
  return target;
}

ChainResult runChain(const RiemannianTarget& target, const ChainConfig& cfg, const Stepper& stepper) {
  const RiemannianTarget chainTarget = targetFor(cfg.method, target);
  cfg.validate(chainTarget.dim());
  Rng rng(cfg.seed, cfg.chainIndex);

  PhasePoint state;
  state.q = cfg.initialPosition;
  // Geometry is only worth caching for integrators that evaluate it at the
  // trajectory start.
  const bool cacheGeometry = !stepper.builtin() || stepper.kind() != IntegratorKind::InvertedLagrangian;
  if (cacheGeometry) state.geometry = chainTarget.geometryAt(state.q);

  const std::size_t burn = cfg.burnInCount();
  ChainResult result;
  result.samples = SampleMatrix(cfg.numSamples, chainTarget.dim());
  result.records.reserve(cfg.numSamples);
  std::int64_t nanos = 0;
  for (std::size_t t = 0; t < burn + cfg.numSamples; ++t) {
    Transition tr = transitionStep(chainTarget, state, cfg.integrator, stepper, rng);
    state = std::move(tr.next);
    if (cacheGeometry && !state.geometry) state.geometry = chainTarget.geometryAt(state.q);
    if (!cacheGeometry) state.geometry.reset();
    if (t < burn) continue;
    const std::size_t row = t - burn;
    std::copy(state.q.begin(), state.q.end(), result.samples.row(row).begin());
    nanos += tr.record.wallClockNanos;
    result.records.push_back(tr.record);
  }
  result.transitionSeconds = static_cast<double>(nanos) * 1e-9;
  return result;
}

ChainResult runChain(const RiemannianTarget& target, const ChainConfig& cfg) {
  return runChain(target, cfg, Stepper(integratorFor(cfg.method)));
}

std::vector<ChainResult> runChains(const RiemannianTarget& target,
                                   const std::vector<ChainConfig>& cfgs, unsigned threads) {
  std::vector<ChainResult> results(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) {
      try {
        results[i] = runChain(target, cfgs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfgs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace geomc
