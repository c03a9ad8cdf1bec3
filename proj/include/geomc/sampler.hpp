#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geomc/integrators.hpp"
#include "geomc/rng.hpp"
#include "geomc/samples.hpp"

namespace geomc {

enum class Method { HMC, RMHMC, LMC, ILMC };

std::string methodName(Method method);
// Case-insensitive; throws std::invalid_argument for unknown names.
Method parseMethod(const std::string& name);
IntegratorKind integratorFor(Method method);

struct ChainConfig {
  Method method = Method::LMC;
  IntegratorConfig integrator;
  std::size_t numSamples = 1000;
  std::optional<std::size_t> burnIn;  // default: 10% of numSamples
  std::uint64_t seed = 0;
  std::uint64_t chainIndex = 0;
  Vector initialPosition;

  std::size_t burnInCount() const { return burnIn.value_or(numSamples / 10); }
  void validate(std::size_t dim) const;
};

struct ChainRecord {
  bool accepted = false;
  double acceptProb = 0.0;
  double logAbsJacobian = 0.0;
  double currentEnergy = 0.0;
  double proposalEnergy = 0.0;
  double sqJumpDistance = 0.0;  // |q~ - q|^2 of the proposal
  std::int64_t wallClockNanos = 0;
  int fixedPointIters = 0;
  int omegaDeterminants = 0;
  bool diverged = false;
};

// min{1, exp(current - proposal + logAbsJacobian)}; 0 for non-finite input.
double acceptanceProbability(double currentEnergy, double proposalEnergy, double logAbsJacobian);

// Energy increases beyond this are treated as divergent.
inline constexpr double kEnergyBlowUp = 1e3;

// p = L z with G(q) = L L^T and z standard normal.
Vector resampleMomentum(const RiemannianTarget& target, std::span<const double> q, Rng& rng);

struct Transition {
  PhasePoint next;  // position (and cached geometry) after accept/reject
  ChainRecord record;
};

// Refresh momentum, integrate, flip, accept or reject.
Transition transitionStep(const RiemannianTarget& target, const PhasePoint& state,
                          const IntegratorConfig& cfg, const Stepper& stepper, Rng& rng);

struct ChainResult {
  SampleMatrix samples;              // post burn-in positions
  std::vector<ChainRecord> records;  // post burn-in transitions
  double transitionSeconds = 0.0;    // summed over recorded transitions
};

// HMC runs on the Euclidean view of the target's model.
RiemannianTarget targetFor(Method method, const RiemannianTarget& target);

ChainResult runChain(const RiemannianTarget& target, const ChainConfig& cfg);
// Same, with an explicit stepper in place of the method's integrator.
ChainResult runChain(const RiemannianTarget& target, const ChainConfig& cfg, const Stepper& stepper);

// Runs independent chains on up to `threads` workers; results keep input order.
std::vector<ChainResult> runChains(const RiemannianTarget& target,
                                   const std::vector<ChainConfig>& cfgs, unsigned threads);

}  // namespace geomc
