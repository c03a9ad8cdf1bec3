#pragma once

#include <functional>
#include <string>
#include <vector>

#include "geomc/diagnostics.hpp"
#include "geomc/integrators.hpp"
#include "geomc/models.hpp"
#include "geomc/sampler.hpp"

namespace geomc {

// ---- Order study ------------------------------------------------------------

struct OrderStudyResult {
  std::vector<double> stepSizes;    // strictly decreasing
  std::vector<double> localErrors;  // |q^ - q|^2 + |v^ - v|^2
  double fittedSlope = 0.0;         // slope of log(sqrt(localError)) vs log(eps)
  // False when errors sit at floating-point noise and the slope is meaningless.
  bool slopeReliable = true;
};

// eps = 2^-lo ... 2^-hi.
std::vector<double> dyadicGrid(int lo = 4, int hi = 12);

// Exact (q, v) after time t from the given start.
using ExactFlow = std::function<std::pair<Vector, Vector>(double t)>;

OrderStudyResult runOrderStudy(const Stepper& stepper, const RiemannianTarget& target,
                               const PhasePoint& start, const ExactFlow& exact,
                               const std::vector<double>& grid, const IntegratorConfig& base);

// Geodesic system from (q0, p0) = (1, 1).
OrderStudyResult runGeodesicOrderStudy(const Stepper& stepper, const std::vector<double>& grid,
                                       const IntegratorConfig& base);

// Harmonic oscillator from (q0, p0) = (1, 0.5); a calibration of the slope fit.
OrderStudyResult runHarmonicOrderStudy(const Stepper& stepper, double omega,
                                       const std::vector<double>& grid,
                                       const IntegratorConfig& base);

// Ordinary least squares slope of y on x.
double leastSquaresSlope(const std::vector<double>& x, const std::vector<double>& y);

// ---- Jacobian oracle --------------------------------------------------------

struct JacobianCheckResult {
  double analyticLogAbsDet = 0.0;
  double fdLogAbsDet = 0.0;
  double fdLogAbsDetHalfStep = 0.0;  // same difference quotient at h/2
  double relError = 0.0;             // |analytic - fd| / max(|fd|, 1e-12)
  double detRelError = 0.0;          // |det_analytic / det_fd - 1|
};

// Central differences of the full (q, p) -> (q~, p~) map over cfg.numSteps steps.
// Throws NumericalError if any perturbed trajectory diverges.
JacobianCheckResult finiteDifferenceJacobian(const RiemannianTarget& target, const PhasePoint& state,
                                             const IntegratorConfig& cfg, const Stepper& stepper,
                                             double h = 1e-6);

// ---- Property suite ---------------------------------------------------------

struct PropertyCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool skipped = false;
  // Trials whose residual reached the tolerance (a diverged map counts).
  std::size_t violations = 0;
};

struct PropertyReport {
  std::string stepper;
  std::vector<PropertyCheck> checks;
  // Draws rejected because a forward map diverged there.
  std::size_t excludedStates = 0;
  bool passed() const;
};

struct PropertySuiteConfig {
  IntegratorConfig step{0.05, 1, 1e-6, 100};
  int involutionSteps = 5;
  // Fixed-time energy study: numSteps at stepSize, then twice the steps at half.
  // The tight solver tolerance keeps fixed-point error out of the ratio.
  IntegratorConfig energy{0.04, 20, 1e-12, 100};
  std::size_t trials = 100;
  double explicitTol = 1e-10;
  double implicitTol = 1e-5;
  double degeneracyTol = 1e-12;
  double energyRatioLo = 3.5;
  double energyRatioHi = 4.5;
};

using PositionSampler = std::function<Vector(Rng&)>;

// Self-adjointness, involution of F o Phi^k, Euclidean degeneracy and the
// energy step-halving ratio. Failures are reported, never thrown.
PropertyReport runPropertySuite(const Stepper& stepper, const RiemannianTarget& target,
                                const PositionSampler& positions, Rng& rng,
                                const PropertySuiteConfig& cfg = {});

// ---- Fixtures ---------------------------------------------------------------

// Explicit Euler on Hamilton's equations; first order.
Stepper eulerStepper();
// Kick-drift without the closing half-kick; neither reversible nor an involution.
Stepper brokenLeapfrogStepper();
// Exact geodesic flow; errors sit at rounding level.
Stepper exactGeodesicStepper();

// ---- Robustness -------------------------------------------------------------

struct RobustnessRow {
  Method method;
  double ksMean = 0.0;
  double acceptanceRate = 0.0;
};

struct RobustnessResult {
  std::vector<RobustnessRow> rows;
  // Worst relative error of the LMC log-Jacobian against finite differences on
  // the misspecified model.
  double lmcJacobianRelError = 0.0;
  double lmcJacobianDetRelError = 0.0;
  const RobustnessRow* find(Method m) const;
};

struct RobustnessConfig {
  double delta = 0.3;
  std::vector<ChainConfig> chains;  // one per method; initial positions required
  std::size_t jacobianTrials = 20;
  IntegratorConfig jacobianStep{0.1, 1, 1e-6, 100};
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Runs each chain on the delta-misspecified model and compares with `iid`.
RobustnessResult runRobustnessExperiment(std::shared_ptr<const MetricModel> base,
                                         const SampleMatrix& iid, const RobustnessConfig& cfg);

}  // namespace geomc
