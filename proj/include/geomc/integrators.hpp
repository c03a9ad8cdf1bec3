#pragma once

#include <functional>
#include <string>

#include "geomc/geometry.hpp"

namespace geomc {

struct IntegratorConfig {
  double stepSize = 0.1;
  int numSteps = 1;
  double fixedPointTol = 1e-6;  // infinity norm
  int fixedPointMaxIters = 100;

  // Throws std::invalid_argument.
  void validate() const;
  IntegratorConfig withStepSize(double eps) const {
    IntegratorConfig c = *this;
    c.stepSize = eps;
    return c;
  }
  bool operator==(const IntegratorConfig&) const = default;
};

struct StepResult {
  PhasePoint next;
  double logAbsJacobian = 0.0;  // log|det d(q~,p~)/d(q,p)|
  int fixedPointIters = 0;      // max over the implicit solves
  int omegaDeterminants = 0;    // det(Id +- c*Omega) evaluations
  bool diverged = false;
  std::string divergence;
};

enum class IntegratorKind {
  StandardLeapfrog,
  InvertedLeapfrog,
  GeneralizedLeapfrog,
  Lagrangian,
  InvertedLagrangian,
};

std::string integratorName(IntegratorKind kind);

// Coordinates beyond this magnitude are treated as a blown-up trajectory.
inline constexpr double kDivergenceBound = 1e10;

// Single steps. Each accepts a state in momentum or velocity form and returns
// the next state with both p and v populated. Numerical failures are reported
// through StepResult::diverged, never thrown.
StepResult standardLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                const IntegratorConfig& cfg);
StepResult invertedLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                const IntegratorConfig& cfg);
StepResult generalizedLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                   const IntegratorConfig& cfg);
StepResult lagrangianLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                  const IntegratorConfig& cfg);
StepResult invertedLagrangianLeapfrogStep(const RiemannianTarget& target, const PhasePoint& state,
                                          const IntegratorConfig& cfg);

using StepFunction =
    std::function<StepResult(const RiemannianTarget&, const PhasePoint&, const IntegratorConfig&)>;

// One of the built-in integrators, or an arbitrary single-step map (used for
// test fixtures such as deliberately broken integrators).
class Stepper {
 public:
  explicit Stepper(IntegratorKind kind);
  Stepper(std::string name, StepFunction fn);

  const std::string& name() const { return name_; }
  bool builtin() const { return !custom_; }
  IntegratorKind kind() const { return kind_; }
  // True for steppers whose map is explicit (no fixed-point solves).
  bool isExplicit() const;

  StepResult step(const RiemannianTarget& target, const PhasePoint& state,
                  const IntegratorConfig& cfg) const;

 private:
  std::string name_;
  IntegratorKind kind_ = IntegratorKind::StandardLeapfrog;
  StepFunction custom_;
};

// cfg.numSteps composed steps. Lagrangian steppers carry velocity form
// internally and apply the metric log-det ratio once at the endpoints. The first
// diverged step aborts the trajectory.
StepResult integrateTrajectory(const RiemannianTarget& target, const PhasePoint& state,
                               const IntegratorConfig& cfg, const Stepper& stepper);

// (q, p) -> (q, -p)
PhasePoint flipMomentum(const PhasePoint& state);

}  // namespace geomc
