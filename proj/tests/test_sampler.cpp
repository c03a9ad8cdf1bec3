#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "geomc/diagnostics.hpp"
#include "geomc/models.hpp"
#include "geomc/sampler.hpp"
#include "helpers.hpp"

using namespace geomc;
using namespace geomc::testing;

namespace {

ChainConfig chain(Method m, IntegratorConfig ic, std::size_t n, Vector start, std::uint64_t seed = 1) {
  ChainConfig c;
  c.method = m;
  c.integrator = ic;
  c.numSamples = n;
  c.seed = seed;
  c.initialPosition = std::move(start);
  return c;
}

double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::HMC, Method::RMHMC, Method::LMC, Method::ILMC}) {
    EXPECT_EQ(parseMethod(methodName(m)), m);
  }
  EXPECT_EQ(parseMethod("LMC"), Method::LMC);
  EXPECT_THROW(parseMethod("nuts"), std::invalid_argument);
  EXPECT_EQ(integratorFor(Method::HMC), IntegratorKind::StandardLeapfrog);
  EXPECT_EQ(integratorFor(Method::RMHMC), IntegratorKind::GeneralizedLeapfrog);
  EXPECT_EQ(integratorFor(Method::LMC), IntegratorKind::Lagrangian);
  EXPECT_EQ(integratorFor(Method::ILMC), IntegratorKind::InvertedLagrangian);
}

TEST(Acceptance, Formula) {
  EXPECT_EQ(acceptanceProbability(1.0, 0.5, 0.0), 1.0);
  EXPECT_NEAR(acceptanceProbability(0.0, 1.0, 0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(acceptanceProbability(0.0, 1.0, 0.25), std::exp(-0.75), 1e-15);
  EXPECT_EQ(acceptanceProbability(0.0, NAN, 0.0), 0.0);
  EXPECT_EQ(acceptanceProbability(0.0, INFINITY, 0.0), 0.0);
}

TEST(ResampleMomentum, IdentityMetricIsStandardNormal) {
  const RiemannianTarget target(std::make_shared<GaussianModel>(Vector{1.0, 1.0}));
  Rng rng(71);
  const int n = 100000;
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector p = resampleMomentum(target, Vector{0.0, 0.0}, rng);
    s00 += p[0] * p[0];
    s01 += p[0] * p[1];
    s11 += p[1] * p[1];
  }
  // sd of a variance estimate is sqrt(2/n), of a covariance sqrt(1/n)
  EXPECT_NEAR(s00 / n, 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s11 / n, 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s01 / n, 0.0, 3.0 * std::sqrt(1.0 / n));
}

TEST(ResampleMomentum, CovarianceIsMetric) {
  const RiemannianTarget target(banana());
  Rng rng(72);
  const Vector q = {0.2, 0.6};
  const DenseMatrix g = banana()->metric(q);
  const int n = 100000;
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector p = resampleMomentum(target, q, rng);
    s00 += p[0] * p[0];
    s01 += p[0] * p[1];
    s11 += p[1] * p[1];
  }
  EXPECT_NEAR(s00 / n / g(0, 0), 1.0, 0.02);
  EXPECT_NEAR(s01 / n / g(0, 1), 1.0, 0.03);
  EXPECT_NEAR(s11 / n / g(1, 1), 1.0, 0.02);
}

TEST(ResampleMomentum, ScalarMetricVariance) {
  class Four final : public MetricModel {
   public:
    std::size_t dim() const override { return 1; }
    std::string name() const override { return "four"; }
    double logDensity(std::span<const double>) const override { return 0.0; }
    Vector gradLogDensity(std::span<const double>) const override { return {0.0}; }
    DenseMatrix metric(std::span<const double>) const override { return DenseMatrix(1, {4.0}); }
    std::vector<DenseMatrix> metricPartials(std::span<const double>) const override {
      return {DenseMatrix(1)};
    }
  };
  const RiemannianTarget four(std::make_shared<Four>());
  Rng rng(73);
  std::vector<double> draws(100000);
  for (double& x : draws) x = resampleMomentum(four, Vector{0.0}, rng)[0];
  EXPECT_NEAR(variance(draws), 4.0, 0.15);
}

TEST(ResampleMomentum, Deterministic) {
  const RiemannianTarget target(banana());
  Rng a(74), b(74);
  EXPECT_EQ(resampleMomentum(target, Vector{0.1, 0.2}, a), resampleMomentum(target, Vector{0.1, 0.2}, b));
}

TEST(Transition, TinyStepIsAlwaysAccepted) {
  const RiemannianTarget target(banana());
  Rng rng(75);
  for (IntegratorKind kind : {IntegratorKind::GeneralizedLeapfrog, IntegratorKind::Lagrangian,
                              IntegratorKind::InvertedLagrangian}) {
    PhasePoint s;
    s.q = {0.3, 0.8};
    const Transition t = transitionStep(target, s, {1e-8, 1}, Stepper(kind), rng);
    EXPECT_GE(t.record.acceptProb, 1.0 - 1e-6);
  }
}

TEST(Transition, RecordsAreSelfConsistent) {
  const RiemannianTarget target(banana());
  for (Method m : {Method::HMC, Method::RMHMC, Method::LMC, Method::ILMC}) {
    const double eps = m == Method::RMHMC ? 0.04 : 0.1;
    const ChainResult r = runChain(target, chain(m, {eps, 10}, 300, {0.5, 0.5}));
    for (const auto& rec : r.records) {
      EXPECT_GE(rec.acceptProb, 0.0);
      EXPECT_LE(rec.acceptProb, 1.0);
      EXPECT_GE(rec.sqJumpDistance, 0.0);
      if (rec.diverged) {
        EXPECT_EQ(rec.acceptProb, 0.0);
        EXPECT_FALSE(rec.accepted);
        continue;
      }
      EXPECT_EQ(acceptanceProbability(rec.currentEnergy, rec.proposalEnergy, rec.logAbsJacobian),
                rec.acceptProb);
      if (m == Method::HMC || m == Method::RMHMC) {
        EXPECT_EQ(rec.logAbsJacobian, 0.0);
      }
    }
  }
}

TEST(Transition, FlippedProposalRetracesTrajectory) {
  const RiemannianTarget target(banana());
  Rng rng(76);
  for (IntegratorKind kind : {IntegratorKind::Lagrangian, IntegratorKind::InvertedLagrangian}) {
    const Vector q = {0.2, 0.9};
    const PhasePoint s = PhasePoint::fromMomentum(target, q, resampleMomentum(target, q, rng));
    const StepResult fwd = integrateTrajectory(target, s, {0.1, 20}, Stepper(kind));
    const PhasePoint proposal = flipMomentum(fwd.next);
    const StepResult back = integrateTrajectory(target, proposal, {0.1, 20}, Stepper(kind));
    const PhasePoint recovered = flipMomentum(back.next);
    EXPECT_LT(maxAbsDiff(recovered.q, q), 1e-8);
    EXPECT_LT(maxAbsDiff(recovered.momentum(target), *s.p), 1e-8);
    // The reverse move's volume factor is the reciprocal.
    EXPECT_NEAR(fwd.logAbsJacobian, -back.logAbsJacobian, 1e-9);
  }
}

TEST(Chain, SingleSampleAndDeterminism) {
  const RiemannianTarget target(banana());
  ChainConfig c = chain(Method::LMC, {0.1, 5}, 1, {0.5, 0.5});
  c.burnIn = 0;
  const ChainResult one = runChain(target, c);
  EXPECT_EQ(one.samples.rows(), 1u);
  EXPECT_EQ(one.records.size(), 1u);
  const ChainConfig d = chain(Method::ILMC, {0.1, 10}, 500, {0.5, 0.5}, 9);
  EXPECT_EQ(runChain(target, d).samples, runChain(target, d).samples);
  ChainConfig e = d;
  e.chainIndex = 1;
  EXPECT_NE(runChain(target, d).samples, runChain(target, e).samples);
}

TEST(Chain, BurnInDefaultsToTenPercent) {
  ChainConfig c;
  c.numSamples = 1000;
  EXPECT_EQ(c.burnInCount(), 100u);
  c.burnIn = 7;
  EXPECT_EQ(c.burnInCount(), 7u);
}

TEST(Chain, ValidatesConfiguration) {
  const RiemannianTarget target(banana());
  EXPECT_THROW(runChain(target, chain(Method::LMC, {0.1, 5}, 10, {0.5})), DimensionMismatch);
  EXPECT_THROW(runChain(target, chain(Method::LMC, {0.0, 5}, 10, {0.5, 0.5})), std::invalid_argument);
  EXPECT_THROW(runChain(target, chain(Method::LMC, {0.1, 5}, 0, {0.5, 0.5})), std::invalid_argument);
}

TEST(Chain, ParallelRunnerMatchesSerial) {
  const RiemannianTarget target(banana());
  std::vector<ChainConfig> cfgs;
  for (std::uint64_t i = 0; i < 4; ++i) {
    ChainConfig c = chain(i % 2 ? Method::LMC : Method::ILMC, {0.1, 5}, 200, {0.5, 0.5}, 3);
    c.chainIndex = i;
    cfgs.push_back(c);
  }
  const auto par = runChains(target, cfgs, 4);
  const auto ser = runChains(target, cfgs, 1);
  for (std::size_t i = 0; i < cfgs.size(); ++i) EXPECT_EQ(par[i].samples, ser[i].samples);
}

TEST(Chain, HmcStandardNormalMoments) {
  const RiemannianTarget target(std::make_shared<GaussianModel>(Vector{1.0}));
  const ChainResult r = runChain(target, chain(Method::HMC, {0.1, 10}, 100000, {0.0}));
  const auto x = r.samples.column(0);
  const double ess = computeEss(x);
  EXPECT_NEAR(mean(x), 0.0, 3.0 / std::sqrt(ess));
  EXPECT_NEAR(variance(x), 1.0, 3.0 * std::sqrt(2.0 / ess));
}

TEST(Chain, MethodsAgreeOnEuclideanGaussian) {
  const RiemannianTarget target(std::make_shared<GaussianModel>(Vector{1.0, 4.0}));
  for (Method m : {Method::RMHMC, Method::LMC, Method::ILMC}) {
    const ChainResult r = runChain(target, chain(m, {0.3, 8}, 20000, {0.0, 0.0}));
    for (std::size_t j = 0; j < 2; ++j) {
      const auto x = r.samples.column(j);
      const double ess = computeEss(x);
      const double var = j == 0 ? 1.0 : 4.0;
      EXPECT_NEAR(mean(x), 0.0, 4.0 * std::sqrt(var / ess)) << methodName(m);
      EXPECT_NEAR(variance(x) / var, 1.0, 4.0 * std::sqrt(2.0 / ess)) << methodName(m);
    }
  }
}

TEST(Chain, LagrangianSamplersHitBananaAcceptanceBand) {
  const RiemannianTarget target(banana());
  for (Method m : {Method::LMC, Method::ILMC}) {
    const ChainResult r = runChain(target, chain(m, {0.1, 20}, 5000, {0.5, 0.5}));
    const double acc = acceptanceRate(r.records);
    EXPECT_GE(acc, 0.80) << methodName(m);
    EXPECT_LE(acc, 0.97) << methodName(m);
  }
}

TEST(Chain, GeometricSamplersMatchBananaReference) {
  const RiemannianTarget target(banana());
  Rng ref(77), dirs(78);
  const SampleMatrix iid = bananaReferenceSampler(*banana(), 20000, ref);
  for (Method m : {Method::RMHMC, Method::LMC, Method::ILMC}) {
    const double eps = m == Method::RMHMC ? 0.04 : 0.1;
    const ChainResult r = runChain(target, chain(m, {eps, 20}, 20000, {0.5, 0.5}));
    EXPECT_LT(ksErgodicity(r.samples, iid, dirs, 50).mean, 0.05) << methodName(m);
  }
}
