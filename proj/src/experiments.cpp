#include "geomc/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geomc/diagnostics.hpp"
#include "geomc/verification.hpp"

#ifndef GEOMC_VERSION
#define GEOMC_VERSION "0.1.0"
#endif

namespace geomc {

namespace {

// Substream tags; each purpose draws from its own stream of the run seed.
constexpr std::uint64_t kStreamData = 0x64617461;
constexpr std::uint64_t kStreamReference = 0x72656600;
constexpr std::uint64_t kStreamStates = 0x73746174;
constexpr std::uint64_t kStreamHarmonic = 0x68617200;

class Rows {
 public:
  Rows(std::string experiment, std::string model) : experiment_(std::move(experiment)), model_(std::move(model)) {}

  void add(const std::string& method, std::size_t trial, const std::string& metric, double value) {
    rows_.push_back({experiment_, model_, method, trial, metric, value});
  }
  void addFor(const std::string& model, const std::string& method, std::size_t trial,
              const std::string& metric, double value) {
    rows_.push_back({experiment_, model, method, trial, metric, value});
  }
  std::vector<ResultRow>& rows() { return rows_; }

 private:
  std::string experiment_;
  std::string model_;
  std::vector<ResultRow> rows_;
};

std::string fmt(double x) { return formatNumber(x); }

// Draws positions from a precomputed pool so that exact samplers with setup
// cost are built once.
class PositionPool {
 public:
  PositionPool(const MetricModel& model, std::size_t count, Rng& rng) {
    pool_ = referenceSamples(model, count, rng);
    if (pool_.rows() == 0) {
      // No exact sampler: Gaussian with the inverse metric at the origin as
      // covariance, a local stand-in for the posterior spread.
      const Vector origin(model.dim(), 0.0);
      const DenseMatrix g = model.metric(origin);
      const CholeskyFactors chol = choleskyFactorize(g);
      const PLUFactors plu = pluFactorize(g);
      pool_ = SampleMatrix(count, model.dim());
      for (std::size_t i = 0; i < count; ++i) {
        Vector z(model.dim());
        for (double& x : z) x = rng.normal();
        // G^-1 L z has covariance G^-1.
        const Vector q = solveFromPLU(plu, lowerTimes(chol, z));
        std::copy(q.begin(), q.end(), pool_.row(i).begin());
      }
    }
  }

  Vector next() {
    const auto row = pool_.row(next_ % pool_.rows());
    ++next_;
    return Vector(row.begin(), row.end());
  }

 private:
  SampleMatrix pool_;
  std::size_t next_ = 0;
};

Stepper stepperByName(const std::string& name) {
  if (name == "leapfrog") return Stepper(IntegratorKind::StandardLeapfrog);
  if (name == "inverted-leapfrog") return Stepper(IntegratorKind::InvertedLeapfrog);
  if (name == "lagrangian") return Stepper(IntegratorKind::Lagrangian);
  if (name == "inverted-lagrangian") return Stepper(IntegratorKind::InvertedLagrangian);
  if (name == "generalized-leapfrog") return Stepper(IntegratorKind::GeneralizedLeapfrog);
  if (name == "euler") return eulerStepper();
  if (name == "broken-leapfrog") return brokenLeapfrogStepper();
  throw std::invalid_argument("unknown stepper '" + name + "'");
}

// ---- order-study --------------------------------------------------------------

void orderStudy(const ExperimentConfig& cfg, Rows& rows, std::vector<std::string>& failures) {
  const auto grid = dyadicGrid(cfg.orderStudy.lo, cfg.orderStudy.hi);
  auto report = [&](const std::string& model, const std::string& name, const OrderStudyResult& r) {
    for (std::size_t i = 0; i < r.stepSizes.size(); ++i) {
      rows.addFor(model, name, i, "step_size", r.stepSizes[i]);
      rows.addFor(model, name, i, "local_error", r.localErrors[i]);
    }
    rows.addFor(model, name, 0, "fitted_slope", r.fittedSlope);
    rows.addFor(model, name, 0, "slope_reliable", r.slopeReliable ? 1.0 : 0.0);
    if (!(r.fittedSlope >= 2.8 && r.fittedSlope <= 3.2)) {
      failures.push_back("order-study " + name + ": slope " + fmt(r.fittedSlope) + " outside [2.8, 3.2]");
    }
  };
  for (Method m : cfg.methods) {
    const Stepper stepper(integratorFor(m));
    IntegratorConfig ic = cfg.integrators.at(m);
    if (m == Method::RMHMC) ic.fixedPointTol = std::min(ic.fixedPointTol, cfg.orderStudy.generalizedTol);
    report("geodesic", stepper.name(), runGeodesicOrderStudy(stepper, grid, ic));
  }
  // Calibration of the slope fit on a method of known order.
  report("harmonic", "leapfrog",
         runHarmonicOrderStudy(Stepper(IntegratorKind::StandardLeapfrog), 1.0, grid, IntegratorConfig{}));
}

// ---- properties ---------------------------------------------------------------

void properties(const ExperimentConfig& cfg, const RiemannianTarget& target, Rows& rows,
                std::vector<std::string>& failures) {
  PropertySuiteConfig pc;
  pc.step.stepSize = cfg.properties.stepSize;
  pc.involutionSteps = cfg.properties.involutionSteps;
  pc.trials = cfg.properties.trials;

  for (std::size_t i = 0; i < cfg.properties.steppers.size(); ++i) {
    const std::string& name = cfg.properties.steppers[i];
    const Stepper stepper = stepperByName(name);
    // Euclidean schemes run on the identity-metric view, as HMC does.
    const bool euclideanScheme = name == "leapfrog" || name == "inverted-leapfrog" || name == "broken-leapfrog";
    const RiemannianTarget suiteTarget = euclideanScheme ? targetFor(Method::HMC, target) : target;
    Rng rng(cfg.seed, kStreamStates + i);
    PositionPool pool(target.model(), 10 * pc.trials + 10, rng);
    const PropertyReport rep =
        runPropertySuite(stepper, suiteTarget, [&](Rng&) { return pool.next(); }, rng, pc);
    rows.add(name, 0, "excluded_states", static_cast<double>(rep.excludedStates));
    for (const auto& c : rep.checks) {
      if (c.skipped) continue;
      rows.add(name, 0, c.name, c.residual);
      rows.add(name, 0, c.name + "_violations", static_cast<double>(c.violations));
      rows.add(name, 0, c.name + "_passed", c.passed ? 1.0 : 0.0);
      if (!c.passed) {
        failures.push_back("properties " + name + ": " + c.name + " = " + fmt(c.residual) +
                           " (tolerance " + fmt(c.tolerance) + ")");
      }
    }
  }
}

// ---- jacobian-check -----------------------------------------------------------

void jacobianCheck(const ExperimentConfig& cfg, const RiemannianTarget& target, Rows& rows,
                   std::vector<std::string>& failures) {
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method m = cfg.methods[mi];
    const RiemannianTarget methodTarget = targetFor(m, target);
    const Stepper stepper(integratorFor(m));
    IntegratorConfig ic = cfg.integrators.at(m);
    ic.numSteps = 1;
    ic.stepSize = m == Method::RMHMC ? cfg.jacobian.generalizedStepSize : cfg.jacobian.stepSize;
    const bool volumePreserving = m == Method::HMC || m == Method::RMHMC;

    Rng rng(cfg.seed, kStreamStates + mi);
    PositionPool pool(methodTarget.model(), 10 * cfg.jacobian.trials + 10, rng);
    double worstRel = 0.0, worstDet = 0.0, worstFd = 0.0;
    std::size_t done = 0, skipped = 0;
    while (done < cfg.jacobian.trials && skipped < 10 * cfg.jacobian.trials) {
      PhasePoint s;
      s.q = pool.next();
      s.p = resampleMomentum(methodTarget, s.q, rng);
      JacobianCheckResult j;
      try {
        j = finiteDifferenceJacobian(methodTarget, s, ic, stepper, cfg.jacobian.h);
      } catch (const NumericalError&) {
        ++skipped;
        continue;
      }
      const std::string name = methodName(m);
      rows.add(name, done, "analytic_log_det", j.analyticLogAbsDet);
      rows.add(name, done, "fd_log_det", j.fdLogAbsDet);
      rows.add(name, done, "fd_log_det_half_step", j.fdLogAbsDetHalfStep);
      if (!volumePreserving) {
        rows.add(name, done, "rel_error", j.relError);
        rows.add(name, done, "det_rel_error", j.detRelError);
      }
      worstRel = std::max(worstRel, j.relError);
      worstDet = std::max(worstDet, j.detRelError);
      worstFd = std::max(worstFd, std::abs(j.fdLogAbsDet));
      ++done;
    }
    const std::string name = methodName(m);
    rows.add(name, 0, "skipped_states", static_cast<double>(skipped));
    if (!volumePreserving) {
      rows.add(name, 0, "max_rel_error", worstRel);
      rows.add(name, 0, "max_det_rel_error", worstDet);
    }
    rows.add(name, 0, "max_abs_fd_log_det", worstFd);
    if (done < cfg.jacobian.trials) {
      failures.push_back("jacobian-check " + name + ": only " + std::to_string(done) + " admissible states");
    }
    if (volumePreserving) {
      if (!(worstFd < 1e-4)) failures.push_back("jacobian-check " + name + ": |fd log det| = " + fmt(worstFd));
    } else if (!(worstRel < 1e-4)) {
      failures.push_back("jacobian-check " + name + ": relative error " + fmt(worstRel));
    }
  }
}

// ---- harmonic-esjd ------------------------------------------------------------

// Paper's printed inverted-leapfrog formula, kept for comparison.
double printedInvertedEsjd(double omega, double eps) {
  const double e2w2 = eps * eps * omega * omega;
  return eps * eps * e2w2 / 4.0 + eps * eps * (1.0 - e2w2 / 4.0);
}

void harmonicEsjd(const ExperimentConfig& cfg, Rows& rows, std::vector<std::string>& failures) {
  const double omega = cfg.model.omega;
  const RiemannianTarget target(std::make_shared<HarmonicModel>(omega));
  const std::pair<LeapfrogVariant, IntegratorKind> schemes[] = {
      {LeapfrogVariant::Leapfrog, IntegratorKind::StandardLeapfrog},
      {LeapfrogVariant::Inverted, IntegratorKind::InvertedLeapfrog}};

  for (std::size_t i = 0; i < cfg.harmonic.stepSizes.size(); ++i) {
    const double eps = cfg.harmonic.stepSizes[i];
    for (const auto& [variant, kind] : schemes) {
      const Stepper stepper(kind);
      const IntegratorConfig ic{eps, 1};
      Rng rng(cfg.seed, kStreamHarmonic + 2 * i + (variant == LeapfrogVariant::Inverted));
      long double sum = 0.0L;
      for (std::size_t d = 0; d < cfg.harmonic.draws; ++d) {
        const double q = rng.normal() / omega;
        const double p = rng.normal();
        PhasePoint start;
        start.q = {q};
        start.p = Vector{p};
        const StepResult r = stepper.step(target, start, ic);
        const double dq = r.next.q[0] - q;
        sum += static_cast<long double>(dq) * dq;
      }
      const double empirical = static_cast<double>(sum / static_cast<long double>(cfg.harmonic.draws));
      const double closed = oneStepEsjdClosedForm(omega, eps, variant);
      const std::string name = stepper.name();
      rows.add(name, i, "step_size", eps);
      rows.add(name, i, "esjd_empirical", empirical);
      rows.add(name, i, "esjd_closed_form", closed);
      rows.add(name, i, "rel_error", std::abs(empirical / closed - 1.0));
      if (variant == LeapfrogVariant::Inverted) {
        const double printed = printedInvertedEsjd(omega, eps);
        rows.add(name, i, "esjd_printed_form", printed);
        rows.add(name, i, "rel_error_printed_form", std::abs(empirical / printed - 1.0));
      }
      if (!(std::abs(empirical / closed - 1.0) <= 0.02)) {
        failures.push_back("harmonic-esjd " + name + " eps=" + fmt(eps) + ": empirical " + fmt(empirical) +
                           " vs closed form " + fmt(closed));
      }
    }
  }

  std::size_t trial = 0;
  double worst = INFINITY;
  for (double eps : cfg.harmonic.gridStepSizes) {
    for (int k = 1; k <= cfg.harmonic.gridMaxSteps; ++k, ++trial) {
      const double lf = kStepEsjdFromPropagators(omega, eps, k, LeapfrogVariant::Leapfrog);
      const double inv = kStepEsjdFromPropagators(omega, eps, k, LeapfrogVariant::Inverted);
      rows.add("propagator", trial, "step_size", eps);
      rows.add("propagator", trial, "num_steps", k);
      rows.add("propagator", trial, "esjd_leapfrog", lf);
      rows.add("propagator", trial, "esjd_inverted", inv);
      rows.add("propagator", trial, "esjd_difference", lf - inv);
      worst = std::min(worst, lf - inv);
    }
  }
  if (trial > 0 && !(worst >= -1e-12)) {
    failures.push_back("harmonic-esjd: propagator ESJD difference reaches " + fmt(worst));
  }
}

// ---- sample -------------------------------------------------------------------

void sample(const ExperimentConfig& cfg, const RiemannianTarget& target, Rows& rows, Rows& timings,
            ExperimentOutcome& outcome) {
  Rng refRng(cfg.seed, kStreamReference);
  const SampleMatrix iid = referenceSamples(target.model(), cfg.sampling.referenceSamples, refRng);
  Rng startRng(cfg.seed, kStreamStates);
  PositionPool starts(target.model(), cfg.sampling.trials, startRng);
  std::vector<Vector> initial;
  for (std::size_t t = 0; t < cfg.sampling.trials; ++t) initial.push_back(starts.next());

  std::vector<ChainConfig> chains;
  for (std::size_t t = 0; t < cfg.sampling.trials; ++t) {
    for (Method m : cfg.methods) {
      ChainConfig c;
      c.method = m;
      c.integrator = cfg.integrators.at(m);
      c.numSamples = cfg.sampling.samples;
      c.burnIn = cfg.sampling.burnIn;
      c.seed = cfg.seed;
      c.chainIndex = t * 4 + static_cast<std::uint64_t>(m);
      c.initialPosition = initial[t];
      chains.push_back(std::move(c));
    }
  }
  const std::vector<ChainResult> results = runChains(target, chains, cfg.threads);

  for (std::size_t i = 0; i < results.size(); ++i) {
    const ChainConfig& c = chains[i];
    const ChainResult& r = results[i];
    const std::size_t trial = i / cfg.methods.size();
    const std::string name = methodName(c.method);
    const DiagnosticsReport rep = buildReport(r.records, r.samples, iid.rows() ? &iid : nullptr,
                                              r.transitionSeconds, cfg.seed + trial,
                                              cfg.sampling.ksDirections);
    double iters = 0.0, dets = 0.0, diverged = 0.0;
    for (const auto& rec : r.records) {
      iters += rec.fixedPointIters;
      dets += rec.omegaDeterminants;
      diverged += rec.diverged ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(r.records.size());
    rows.add(name, trial, "acceptance_rate", rep.acceptanceRate);
    rows.add(name, trial, "esjd", rep.esjd);
    rows.add(name, trial, "min_ess", rep.minEss);
    rows.add(name, trial, "mean_ess", rep.meanEss);
    if (rep.ks) rows.add(name, trial, "ks_mean", rep.ks->mean);
    rows.add(name, trial, "divergence_rate", diverged / n);
    rows.add(name, trial, "mean_fixed_point_iters", iters / n);
    rows.add(name, trial, "omega_determinants_per_step", dets / (n * c.integrator.numSteps));
    timings.add(name, trial, "transition_seconds", r.transitionSeconds);
    timings.add(name, trial, "min_ess_per_second", rep.essPerSecondMin);
    timings.add(name, trial, "mean_ess_per_second", rep.essPerSecondMean);
    if (trial == 0) outcome.samples[name] = r.samples;
  }
}

// ---- robustness ---------------------------------------------------------------

void robustness(const ExperimentConfig& cfg, std::shared_ptr<const MetricModel> base, Rows& rows,
                std::vector<std::string>& failures) {
  Rng refRng(cfg.seed, kStreamReference);
  const SampleMatrix iid = referenceSamples(*base, cfg.sampling.referenceSamples, refRng);
  for (std::size_t t = 0; t < cfg.sampling.trials; ++t) {
    RobustnessConfig rc;
    rc.delta = cfg.robustness.delta;
    rc.jacobianTrials = cfg.robustness.jacobianTrials;
    rc.seed = cfg.seed + t;
    rc.threads = cfg.threads;
    const auto start = iid.row(t % iid.rows());
    for (Method m : cfg.methods) {
      ChainConfig c;
      c.method = m;
      c.integrator = cfg.integrators.at(m);
      c.numSamples = cfg.sampling.samples;
      c.burnIn = cfg.sampling.burnIn;
      c.seed = cfg.seed;
      c.chainIndex = t * 4 + static_cast<std::uint64_t>(m);
      c.initialPosition = Vector(start.begin(), start.end());
      rc.chains.push_back(std::move(c));
    }
    const RobustnessResult res = runRobustnessExperiment(base, iid, rc);
    for (const auto& row : res.rows) {
      rows.add(methodName(row.method), t, "ks_mean", row.ksMean);
      rows.add(methodName(row.method), t, "acceptance_rate", row.acceptanceRate);
    }
    rows.add("lmc", t, "jacobian_rel_error", res.lmcJacobianRelError);
    rows.add("lmc", t, "jacobian_det_rel_error", res.lmcJacobianDetRelError);

    const std::string tag = "robustness trial " + std::to_string(t) + ": ";
    const RobustnessRow* rm = res.find(Method::RMHMC);
    for (Method m : {Method::LMC, Method::ILMC}) {
      const RobustnessRow* r = res.find(m);
      if (!r) continue;
      if (!(r->ksMean < 0.05)) failures.push_back(tag + methodName(m) + " KS " + fmt(r->ksMean));
      if (rm && !(rm->ksMean > r->ksMean)) {
        failures.push_back(tag + "rmhmc KS " + fmt(rm->ksMean) + " not above " + methodName(m) + " " +
                           fmt(r->ksMean));
      }
    }
    if (res.find(Method::LMC) || rc.jacobianTrials > 0) {
      if (!(res.lmcJacobianRelError < 1e-4)) {
        failures.push_back(tag + "lmc Jacobian relative error " + fmt(res.lmcJacobianRelError));
      }
    }
  }
}

}  // namespace

std::shared_ptr<const MetricModel> buildModel(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.name == "banana") {
    return std::make_shared<BananaModel>(BananaModel::fixtureData(), spec.sigmaSqTheta, spec.sigmaSqY);
  }
  if (spec.name == "logistic") {
    if (!spec.dataPath.empty()) return LogisticModel::fromCsv(spec.dataPath, spec.alpha);
    Rng rng(seed, kStreamData);
    return LogisticModel::synthetic(spec.observations, spec.features, rng, spec.alpha);
  }
  if (spec.name == "student-t") return std::make_shared<StudentTModel>(spec.dim, spec.eta, spec.sigmaSqLast);
  if (spec.name == "gaussian") {
    Vector v(spec.dim, 1.0);
    v.back() = spec.sigmaSqLast;
    return std::make_shared<GaussianModel>(std::move(v));
  }
  if (spec.name == "harmonic") return std::make_shared<HarmonicModel>(spec.omega);
  if (spec.name == "geodesic") return std::make_shared<GeodesicModel>();
  throw std::invalid_argument("unknown model '" + spec.name + "'");
}

SampleMatrix referenceSamples(const MetricModel& model, std::size_t count, Rng& rng) {
  if (auto m = dynamic_cast<const BananaModel*>(&model)) return bananaReferenceSampler(*m, count, rng);
  if (auto m = dynamic_cast<const StudentTModel*>(&model)) return studentTReferenceSampler(*m, count, rng);
  if (auto m = dynamic_cast<const GaussianModel*>(&model)) return gaussianReferenceSampler(*m, count, rng);
  return {};
}

ExperimentOutcome runExperiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutcome out;
  Rows rows(cfg.experiment, cfg.model.name);
  Rows timings(cfg.experiment, cfg.model.name);

  const auto model = buildModel(cfg.model, cfg.seed);
  const RiemannianTarget target(model);
  const std::string& e = cfg.experiment;
  if (e == "order-study") {
    orderStudy(cfg, rows, out.failures);
  } else if (e == "properties") {
    properties(cfg, target, rows, out.failures);
  } else if (e == "jacobian-check") {
    jacobianCheck(cfg, target, rows, out.failures);
  } else if (e == "harmonic-esjd") {
    harmonicEsjd(cfg, rows, out.failures);
  } else if (e == "sample") {
    sample(cfg, target, rows, timings, out);
  } else if (e == "robustness") {
    robustness(cfg, model, rows, out.failures);
  } else {
    throw std::invalid_argument("unknown experiment '" + e + "'");
  }

  out.rows = std::move(rows.rows());
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return a.trial < b.trial; });
  out.timings = std::move(timings.rows());
  std::stable_sort(out.timings.begin(), out.timings.end(),
                   [](const ResultRow& a, const ResultRow& b) { return a.trial < b.trial; });
  out.wallClockSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string formatNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string resultsCsv(const std::vector<ResultRow>& rows) {
  std::string out = "experiment,model,method,trial,metric,value\n";
  for (const auto& r : rows) {
    out += r.experiment + ',' + r.model + ',' + r.method + ',' + std::to_string(r.trial) + ',' + r.metric +
           ',' + formatNumber(r.value) + '\n';
  }
  return out;
}

std::string samplesCsv(const SampleMatrix& samples) {
  std::string out;
  for (std::size_t j = 0; j < samples.cols(); ++j) out += (j ? ",q" : "q") + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t j = 0; j < samples.cols(); ++j) {
      if (j) out += ',';
      out += formatNumber(samples(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string versionString() { return GEOMC_VERSION; }

nlohmann::json manifestJson(const ExperimentConfig& cfg, const ExperimentOutcome& outcome) {
  nlohmann::json files = nlohmann::json::array({"results.csv"});
  if (!outcome.timings.empty()) files.push_back("timings.csv");
  for (const auto& [method, _] : outcome.samples) files.push_back("samples-" + method + ".csv");
  return nlohmann::json{{"config", toJson(cfg)},
                        {"seed", cfg.seed},
                        {"version", versionString()},
                        {"wall_clock_seconds", outcome.wallClockSeconds},
                        {"failures", outcome.failures},
                        {"files", files}};
}

namespace {
void writeFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}
}  // namespace

int runAndWrite(const ExperimentConfig& cfg, std::ostream* log) {
  const std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

  const ExperimentOutcome outcome = runExperiment(cfg);
  writeFile(dir / "results.csv", resultsCsv(outcome.rows));
  if (!outcome.timings.empty()) writeFile(dir / "timings.csv", resultsCsv(outcome.timings));
  for (const auto& [method, samples] : outcome.samples) {
    writeFile(dir / ("samples-" + method + ".csv"), samplesCsv(samples));
  }
  writeFile(dir / "manifest.json", manifestJson(cfg, outcome).dump(2) + "\n");
  if (log) {
    for (const auto& f : outcome.failures) *log << "FAILED " << f << "\n";
  }
  return outcome.failures.empty() ? 0 : 2;
}

}  // namespace geomc
