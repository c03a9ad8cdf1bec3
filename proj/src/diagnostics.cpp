#include "geomc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geomc {

double computeEsjd(std::span<const ChainRecord> records) {
  if (records.empty()) throw EmptyChain("computeEsjd: no records");
  double s = 0.0;
  for (const auto& r : records) s += r.acceptProb * r.sqJumpDistance;
  return s / static_cast<double>(records.size());
}

double acceptanceRate(std::span<const ChainRecord> records) {
  if (records.empty()) throw EmptyChain("acceptanceRate: no records");
  std::size_t n = 0;
  for (const auto& r : records) n += r.accepted ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(records.size());
}

double computeEss(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 100) throw std::invalid_argument("computeEss: need at least 100 samples");
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = chain[i] - mean;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double var = autocov(0);
  if (!(var > 0.0)) throw DegenerateChain("computeEss: zero sample variance");

  // Geyer: sum consecutive pairs Gamma_t = rho_2t + rho_2t+1 while positive,
  // enforcing monotone decrease.
  double sum = 0.0;  // sum over t >= 1 of rho_t
  double prevPair = INFINITY;
  for (std::size_t t = 0; 2 * t + 1 < n; ++t) {
    const double r0 = t == 0 ? 1.0 : autocov(2 * t) / var;
    const double r1 = autocov(2 * t + 1) / var;
    double pair = r0 + r1;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prevPair);
    prevPair = pair;
    sum += pair;
  }
  // sum = rho_0 + 2 * (...) form: tau = -1 + 2 * sum over pairs
  const double tau = -1.0 + 2.0 * sum;
  return static_cast<double>(n) / std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
}

double computeEss(const SampleMatrix& samples, std::size_t coordinate) {
  return computeEss(samples.column(coordinate));
}

double ksTwoSample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptyChain("ksTwoSample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace {
std::vector<double> project(const SampleMatrix& s, std::span<const double> dir) {
  std::vector<double> out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto row = s.row(i);
    double v = 0.0;
    for (std::size_t j = 0; j < dir.size(); ++j) v += row[j] * dir[j];
    out[i] = v;
  }
  return out;
}
}  // namespace

KsResult ksErgodicity(const SampleMatrix& chain, const SampleMatrix& iid, Rng& rng,
                      std::size_t numDirections) {
  if (chain.cols() != iid.cols()) throw DimensionMismatch("ksErgodicity: dimension mismatch");
  if (chain.rows() == 0 || iid.rows() == 0) throw EmptyChain("ksErgodicity: empty sample set");
  KsResult out;
  out.stats.reserve(numDirections);
  std::vector<double> dir(chain.cols());
  for (std::size_t d = 0; d < numDirections; ++d) {
    double norm = 0.0;
    do {
      for (double& x : dir) x = rng.normal();
      norm = std::sqrt(squaredNorm(dir));
    } while (norm == 0.0);
    for (double& x : dir) x /= norm;
    out.stats.push_back(ksTwoSample(project(chain, dir), project(iid, dir)));
  }
  if (!out.stats.empty()) {
    out.mean = std::accumulate(out.stats.begin(), out.stats.end(), 0.0) /
               static_cast<double>(out.stats.size());
  }
  return out;
}

DiagnosticsReport buildReport(std::span<const ChainRecord> records, const SampleMatrix& samples,
                              const SampleMatrix* iid, double wallClockSeconds,
                              std::uint64_t seed, std::size_t numDirections) {
  DiagnosticsReport r;
  r.esjd = computeEsjd(records);
  r.acceptanceRate = acceptanceRate(records);
  r.essPerCoordinate.reserve(samples.cols());
  for (std::size_t j = 0; j < samples.cols(); ++j) {
    double ess = 0.0;
    try {
      ess = computeEss(samples, j);
    } catch (const DegenerateChain&) {
      ess = 0.0;
    }
    r.essPerCoordinate.push_back(ess);
  }
  r.minEss = *std::min_element(r.essPerCoordinate.begin(), r.essPerCoordinate.end());
  r.meanEss = std::accumulate(r.essPerCoordinate.begin(), r.essPerCoordinate.end(), 0.0) /
              static_cast<double>(r.essPerCoordinate.size());
  if (wallClockSeconds > 0.0) {
    r.essPerSecondMin = r.minEss / wallClockSeconds;
    r.essPerSecondMean = r.meanEss / wallClockSeconds;
  }
  if (iid) {
    Rng rng(seed, 0x6b73);
    r.ks = ksErgodicity(samples, *iid, rng, numDirections);
  }
  return r;
}

}  // namespace geomc
