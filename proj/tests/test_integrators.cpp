#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "geomc/integrators.hpp"
#include "geomc/models.hpp"
#include "geomc/sampler.hpp"
#include "geomc/verification.hpp"
#include "helpers.hpp"

using namespace geomc;
using namespace geomc::testing;

namespace {

// Flat density with identity metric: a free particle.
class FreeParticle final : public MetricModel {
 public:
  explicit FreeParticle(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "free"; }
  double logDensity(std::span<const double>) const override { return 0.0; }
  Vector gradLogDensity(std::span<const double>) const override { return Vector(dim_, 0.0); }
  DenseMatrix metric(std::span<const double>) const override { return DenseMatrix::identity(dim_); }
  std::vector<DenseMatrix> metricPartials(std::span<const double>) const override {
    return std::vector<DenseMatrix>(dim_, DenseMatrix(dim_));
  }
  bool euclidean() const override { return true; }

 private:
  std::size_t dim_;
};

PhasePoint state(Vector q, Vector p) {
  PhasePoint s;
  s.q = std::move(q);
  s.p = std::move(p);
  return s;
}

const IntegratorKind kAll[] = {IntegratorKind::StandardLeapfrog, IntegratorKind::InvertedLeapfrog,
                               IntegratorKind::GeneralizedLeapfrog, IntegratorKind::Lagrangian,
                               IntegratorKind::InvertedLagrangian};

const IntegratorKind kRiemannian[] = {IntegratorKind::GeneralizedLeapfrog, IntegratorKind::Lagrangian,
                                      IntegratorKind::InvertedLagrangian};

RiemannianTarget bananaTarget() { return RiemannianTarget(banana()); }

}  // namespace

TEST(IntegratorConfig, Validation) {
  EXPECT_THROW((IntegratorConfig{0.0, 1}).validate(), std::invalid_argument);
  EXPECT_THROW((IntegratorConfig{NAN, 1}).validate(), std::invalid_argument);
  EXPECT_THROW((IntegratorConfig{0.1, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((IntegratorConfig{0.1, 1, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW((IntegratorConfig{0.1, 1, 1e-6, 0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((IntegratorConfig{-0.1, 3}).validate());
}

TEST(EuclideanLeapfrog, FreeParticleDrifts) {
  const RiemannianTarget target(std::make_shared<FreeParticle>(2));
  for (IntegratorKind kind : kAll) {
    const StepResult r = Stepper(kind).step(target, state({1.0, -2.0}, {0.5, 3.0}), {0.2, 1});
    ASSERT_FALSE(r.diverged) << integratorName(kind);
    EXPECT_NEAR(r.next.q[0], 1.1, 1e-15);
    EXPECT_NEAR(r.next.q[1], -1.4, 1e-15);
    EXPECT_NEAR((*r.next.p)[0], 0.5, 1e-15);
    EXPECT_NEAR((*r.next.p)[1], 3.0, 1e-15);
    EXPECT_EQ(r.logAbsJacobian, 0.0);
  }
}

TEST(EuclideanLeapfrog, HarmonicStepMatchesPropagators) {
  // Kick-drift-kick and drift-kick-drift expanded by hand at omega=1.3, eps=0.7.
  const std::array<double, 4> standard = {0.58595, 0.7, -0.938089425, 0.58595};
  const std::array<double, 4> inverted = {0.58595, 0.5550825, -1.183, 0.58595};
  const RiemannianTarget target(std::make_shared<HarmonicModel>(1.3));
  const std::pair<IntegratorKind, const std::array<double, 4>*> cases[] = {
      {IntegratorKind::StandardLeapfrog, &standard}, {IntegratorKind::InvertedLeapfrog, &inverted}};
  for (const auto& [kind, r] : cases) {
    const LeapfrogVariant variant =
        kind == IntegratorKind::StandardLeapfrog ? LeapfrogVariant::Leapfrog : LeapfrogVariant::Inverted;
    const auto m = propagatorMatrix(1.3, 0.7, variant);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(m[i], (*r)[i], 1e-15);
    const double q = 0.8, p = -0.3;
    const StepResult s = Stepper(kind).step(target, state({q}, {p}), {0.7, 1});
    EXPECT_NEAR(s.next.q[0], (*r)[0] * q + (*r)[1] * p, 1e-15);
    EXPECT_NEAR((*s.next.p)[0], (*r)[2] * q + (*r)[3] * p, 1e-15);
  }
}

TEST(EuclideanLeapfrog, SelfAdjoint) {
  Rng rng(31);
  const RiemannianTarget target = targetFor(Method::HMC, bananaTarget());
  for (IntegratorKind kind : {IntegratorKind::StandardLeapfrog, IntegratorKind::InvertedLeapfrog}) {
    for (int t = 0; t < 50; ++t) {
      const PhasePoint s = state(bananaPoint(rng), randomVector(2, rng));
      const StepResult f = Stepper(kind).step(target, s, {0.05, 1});
      const StepResult b = Stepper(kind).step(target, f.next, {-0.05, 1});
      EXPECT_LT(maxAbsDiff(b.next.q, s.q), 1e-12);
      EXPECT_LT(maxAbsDiff(*b.next.p, *s.p), 1e-12);
    }
  }
}

TEST(RiemannianSchemes, ReduceToEuclideanCounterparts) {
  Rng rng(32);
  const RiemannianTarget flat = targetFor(Method::HMC, bananaTarget());
  const std::pair<IntegratorKind, IntegratorKind> pairs[] = {
      {IntegratorKind::GeneralizedLeapfrog, IntegratorKind::StandardLeapfrog},
      {IntegratorKind::Lagrangian, IntegratorKind::StandardLeapfrog},
      {IntegratorKind::InvertedLagrangian, IntegratorKind::InvertedLeapfrog}};
  for (const auto& [kind, reference] : pairs) {
    for (int t = 0; t < 50; ++t) {
      const PhasePoint s = state(bananaPoint(rng), randomVector(2, rng));
      const StepResult a = Stepper(kind).step(flat, s, {0.07, 1});
      const StepResult b = Stepper(reference).step(flat, s, {0.07, 1});
      ASSERT_FALSE(a.diverged);
      EXPECT_LT(maxAbsDiff(a.next.q, b.next.q), 1e-12) << integratorName(kind);
      EXPECT_LT(maxAbsDiff(a.next.momentum(flat), b.next.momentum(flat)), 1e-12);
      EXPECT_EQ(a.logAbsJacobian, 0.0);
    }
  }
}

TEST(RiemannianSchemes, GeodesicLocalErrorIsThirdOrder) {
  const RiemannianTarget target(std::make_shared<GeodesicModel>());
  for (IntegratorKind kind : kRiemannian) {
    IntegratorConfig cfg{0.0, 1, 1e-14, 200};
    double prev = 0.0;
    for (double eps : {0.02, 0.01, 0.005}) {
      cfg.stepSize = eps;
      const StepResult r = Stepper(kind).step(target, PhasePoint::fromVelocity(target, {1.0}, {1.0}), cfg);
      const double eq = GeodesicModel::exactPosition(1.0, 1.0, eps);
      const double ev = GeodesicModel::exactVelocity(1.0, 1.0, eps);
      const double err = std::hypot(r.next.q[0] - eq, r.next.velocity(target)[0] - ev);
      EXPECT_LT(err, 2 * eps * eps * eps) << integratorName(kind);
      if (prev > 0.0) {
        EXPECT_NEAR(prev / err, 8.0, 0.8) << integratorName(kind) << " eps=" << eps;
      }
      prev = err;
    }
  }
}

TEST(RiemannianSchemes, GeodesicExactFlowClosedForm) {
  EXPECT_DOUBLE_EQ(GeodesicModel::exactPosition(1.0, 1.0, 0.5), std::exp(0.5));
  EXPECT_DOUBLE_EQ(GeodesicModel::exactVelocity(1.0, 1.0, 0.5), std::exp(0.5));
  EXPECT_DOUBLE_EQ(GeodesicModel::exactPosition(2.0, 0.5, 1.0), 2.0 * std::exp(1.0));
  EXPECT_DOUBLE_EQ(GeodesicModel::exactVelocity(2.0, 0.5, 1.0), 2.0 * std::exp(1.0));
}

TEST(LagrangianSchemes, SelfAdjointOnBanana) {
  Rng rng(33);
  const RiemannianTarget target = bananaTarget();
  for (IntegratorKind kind : {IntegratorKind::Lagrangian, IntegratorKind::InvertedLagrangian}) {
    for (int t = 0; t < 100; ++t) {
      const Vector q = bananaPoint(rng);
      const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
      const StepResult f = Stepper(kind).step(target, s, {0.05, 1});
      ASSERT_FALSE(f.diverged);
      const StepResult b = Stepper(kind).step(target, f.next, {-0.05, 1});
      ASSERT_FALSE(b.diverged);
      EXPECT_LT(maxAbsDiff(b.next.q, q), 1e-10) << integratorName(kind);
      EXPECT_LT(maxAbsDiff(b.next.momentum(target), *s.p), 1e-10) << integratorName(kind);
      // The backward step undoes the volume change.
      EXPECT_NEAR(f.logAbsJacobian + b.logAbsJacobian, 0.0, 1e-10);
    }
  }
}

// The analytic log-determinant is compared with central differences through
// the determinant ratio, which is well conditioned even when log|J| is near 0.
TEST(LagrangianSchemes, JacobianMatchesFiniteDifferences) {
  Rng rng(34);
  const RiemannianTarget target = bananaTarget();
  for (IntegratorKind kind : {IntegratorKind::Lagrangian, IntegratorKind::InvertedLagrangian}) {
    double worstDet = 0.0, worstAbs = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Vector q = bananaPoint(rng);
      const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
      const JacobianCheckResult j = finiteDifferenceJacobian(target, s, {0.1, 1}, Stepper(kind));
      worstDet = std::max(worstDet, j.detRelError);
      worstAbs = std::max(worstAbs, std::abs(j.analyticLogAbsDet - j.fdLogAbsDet));
    }
    EXPECT_LT(worstDet, 1e-4) << integratorName(kind);
    EXPECT_LT(worstAbs, 1e-4) << integratorName(kind);
  }
}

TEST(LagrangianSchemes, JacobianMatchesOnMultiStepTrajectories) {
  Rng rng(35);
  const RiemannianTarget target = bananaTarget();
  for (IntegratorKind kind : {IntegratorKind::Lagrangian, IntegratorKind::InvertedLagrangian}) {
    for (int t = 0; t < 10; ++t) {
      const Vector q = bananaPoint(rng);
      const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
      const JacobianCheckResult j = finiteDifferenceJacobian(target, s, {0.05, 5}, Stepper(kind));
      EXPECT_LT(j.detRelError, 1e-4) << integratorName(kind);
    }
  }
}

TEST(GeneralizedLeapfrog, VolumePreservingAtTightTolerance) {
  Rng rng(36);
  const RiemannianTarget target = bananaTarget();
  int checked = 0;
  for (int t = 0; t < 200 && checked < 50; ++t) {
    const Vector q = bananaPoint(rng);
    const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
    try {
      const JacobianCheckResult j =
          finiteDifferenceJacobian(target, s, {0.04, 1, 1e-12, 200}, Stepper(IntegratorKind::GeneralizedLeapfrog));
      EXPECT_LT(std::abs(j.fdLogAbsDet), 1e-6);
      EXPECT_EQ(j.analyticLogAbsDet, 0.0);
      ++checked;
    } catch (const NumericalError&) {
    }
  }
  EXPECT_EQ(checked, 50);
}

TEST(GeneralizedLeapfrog, SolverFailureIsReportedAsDivergence) {
  const RiemannianTarget target = bananaTarget();
  const PhasePoint s = PhasePoint::fromMomentum(target, {0.0, 2.0}, {30.0, 80.0});
  const StepResult r = Stepper(IntegratorKind::GeneralizedLeapfrog).step(target, s, {1.5, 1, 1e-6, 20});
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.divergence.empty());
}

TEST(GeneralizedLeapfrog, ReportsFixedPointIterations) {
  const RiemannianTarget target = bananaTarget();
  const PhasePoint s = PhasePoint::fromMomentum(target, {0.5, 0.7}, {1.0, 2.0});
  const StepResult r = Stepper(IntegratorKind::GeneralizedLeapfrog).step(target, s, {0.04, 1});
  ASSERT_FALSE(r.diverged);
  EXPECT_GT(r.fixedPointIters, 0);
  EXPECT_LE(r.fixedPointIters, 100);
  const StepResult e = Stepper(IntegratorKind::Lagrangian).step(target, s, {0.04, 1});
  EXPECT_EQ(e.fixedPointIters, 0);
}

TEST(Trajectory, SingleStepEqualsStep) {
  Rng rng(37);
  const RiemannianTarget target = bananaTarget();
  for (IntegratorKind kind : kRiemannian) {
    const Vector q = bananaPoint(rng);
    const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
    const StepResult a = Stepper(kind).step(target, s, {0.05, 1});
    const StepResult b = integrateTrajectory(target, s, {0.05, 1}, Stepper(kind));
    EXPECT_LT(maxAbsDiff(a.next.q, b.next.q), 1e-14);
    EXPECT_LT(maxAbsDiff(a.next.momentum(target), b.next.momentum(target)), 1e-12);
    EXPECT_NEAR(a.logAbsJacobian, b.logAbsJacobian, 1e-12);
  }
}

TEST(Trajectory, LogJacobianIsAdditive) {
  Rng rng(38);
  const RiemannianTarget target = bananaTarget();
  for (IntegratorKind kind : {IntegratorKind::Lagrangian, IntegratorKind::InvertedLagrangian}) {
    for (int t = 0; t < 20; ++t) {
      const Vector q = bananaPoint(rng);
      const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
      const StepResult one = Stepper(kind).step(target, s, {0.05, 1});
      const StepResult two = Stepper(kind).step(target, one.next, {0.05, 1});
      const StepResult both = integrateTrajectory(target, s, {0.05, 2}, Stepper(kind));
      EXPECT_NEAR(both.logAbsJacobian, one.logAbsJacobian + two.logAbsJacobian, 1e-12);
      EXPECT_LT(maxAbsDiff(both.next.q, two.next.q), 1e-13);
    }
  }
}

TEST(Trajectory, ForwardThenBackwardReturnsToStart) {
  Rng rng(39);
  const RiemannianTarget target = bananaTarget();
  const RiemannianTarget flat = targetFor(Method::HMC, target);
  for (IntegratorKind kind : kAll) {
    const bool euclid = kind == IntegratorKind::StandardLeapfrog || kind == IntegratorKind::InvertedLeapfrog;
    const RiemannianTarget& t = euclid ? flat : target;
    const double tol = kind == IntegratorKind::GeneralizedLeapfrog ? 1e-5 : 1e-8;
    for (int i = 0; i < 20; ++i) {
      const Vector q = bananaPoint(rng);
      const PhasePoint s = PhasePoint::fromMomentum(t, q, resampleMomentum(t, q, rng));
      const StepResult f = integrateTrajectory(t, s, {0.03, 10}, Stepper(kind));
      if (f.diverged) continue;
      const StepResult b = integrateTrajectory(t, f.next, {-0.03, 10}, Stepper(kind));
      if (b.diverged) continue;
      EXPECT_LT(maxAbsDiff(b.next.q, q), tol) << integratorName(kind);
      EXPECT_LT(maxAbsDiff(b.next.momentum(t), *s.p), tol * 10) << integratorName(kind);
    }
  }
}

TEST(Trajectory, FlipThenIntegrateIsInvolution) {
  Rng rng(40);
  const RiemannianTarget target = bananaTarget();
  for (IntegratorKind kind : {IntegratorKind::Lagrangian, IntegratorKind::InvertedLagrangian}) {
    for (int i = 0; i < 20; ++i) {
      const Vector q = bananaPoint(rng);
      const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
      const StepResult a = integrateTrajectory(target, s, {0.05, 8}, Stepper(kind));
      const StepResult b = integrateTrajectory(target, flipMomentum(a.next), {0.05, 8}, Stepper(kind));
      const PhasePoint back = flipMomentum(b.next);
      EXPECT_LT(maxAbsDiff(back.q, q), 1e-8);
      EXPECT_LT(maxAbsDiff(back.momentum(target), *s.p), 1e-8);
      EXPECT_NEAR(a.logAbsJacobian + b.logAbsJacobian, 0.0, 1e-9);
    }
  }
}

TEST(Trajectory, DivergenceAbortsAndFlagsOnDomainExit) {
  const RiemannianTarget target(std::make_shared<GeodesicModel>());
  // Negative velocity large enough to cross q = 0.
  for (IntegratorKind kind : kRiemannian) {
    const StepResult r = integrateTrajectory(target, PhasePoint::fromVelocity(target, {0.1}, {-50.0}),
                                             {0.5, 3}, Stepper(kind));
    EXPECT_TRUE(r.diverged) << integratorName(kind);
  }
}

TEST(DeterminantCount, FourPerLagrangianStepTwoPerInverted) {
  Rng rng(41);
  const RiemannianTarget target = bananaTarget();
  for (int i = 0; i < 20; ++i) {
    const Vector q = bananaPoint(rng);
    const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
    EXPECT_EQ(Stepper(IntegratorKind::Lagrangian).step(target, s, {0.1, 1}).omegaDeterminants, 4);
    EXPECT_EQ(Stepper(IntegratorKind::InvertedLagrangian).step(target, s, {0.1, 1}).omegaDeterminants, 2);
    EXPECT_EQ(integrateTrajectory(target, s, {0.1, 7}, Stepper(IntegratorKind::Lagrangian)).omegaDeterminants, 28);
    EXPECT_EQ(
        integrateTrajectory(target, s, {0.1, 7}, Stepper(IntegratorKind::InvertedLagrangian)).omegaDeterminants,
        14);
    EXPECT_EQ(Stepper(IntegratorKind::GeneralizedLeapfrog).step(target, s, {0.04, 1}).omegaDeterminants, 0);
  }
}

TEST(FlipMomentum, NegatesBothRepresentations) {
  PhasePoint s;
  s.q = {1.0, 2.0};
  s.p = Vector{0.5, -1.0};
  s.v = Vector{0.25, 3.0};
  const PhasePoint f = flipMomentum(s);
  EXPECT_EQ(f.q, s.q);
  EXPECT_EQ(*f.p, (Vector{-0.5, 1.0}));
  EXPECT_EQ(*f.v, (Vector{-0.25, -3.0}));
  EXPECT_EQ(*flipMomentum(f).p, *s.p);
}
