#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "geomc/rng.hpp"
#include "geomc/sampler.hpp"
#include "geomc/samples.hpp"

namespace geomc {

class EmptyChain : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateChain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mean of acceptProb * sqJumpDistance. Throws EmptyChain.
double computeEsjd(std::span<const ChainRecord> records);

// Fraction of accepted transitions. Throws EmptyChain.
double acceptanceRate(std::span<const ChainRecord> records);

// N / (1 + 2 sum rho_t), truncated by Geyer's initial positive sequence.
// Throws std::invalid_argument below 100 samples, DegenerateChain for zero variance.
double computeEss(std::span<const double> chain);
double computeEss(const SampleMatrix& samples, std::size_t coordinate);

// Exact two-sample Kolmogorov-Smirnov statistic (sup over the merged sample).
double ksTwoSample(std::vector<double> a, std::vector<double> b);

struct KsResult {
  std::vector<double> stats;
  double mean = 0.0;
};

// Projections on directions drawn uniformly from the unit sphere.
KsResult ksErgodicity(const SampleMatrix& chain, const SampleMatrix& iid, Rng& rng,
                      std::size_t numDirections = 100);

struct DiagnosticsReport {
  double esjd = 0.0;
  std::vector<double> essPerCoordinate;
  double minEss = 0.0;
  double meanEss = 0.0;
  double essPerSecondMin = 0.0;
  double essPerSecondMean = 0.0;
  double acceptanceRate = 0.0;
  std::optional<KsResult> ks;
};

// ESS per second divides by wallClockSeconds (transition time only). KS is
// computed only when iid samples are supplied; directions come from `seed`.
DiagnosticsReport buildReport(std::span<const ChainRecord> records, const SampleMatrix& samples,
                              const SampleMatrix* iid, double wallClockSeconds,
                              std::uint64_t seed, std::size_t numDirections = 100);

}  // namespace geomc
