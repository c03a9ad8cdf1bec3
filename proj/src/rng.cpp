#include "geomc/rng.hpp"

namespace geomc {

namespace {

std::mt19937_64 makeEngine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(makeEngine(seed, stream)) {}

double Rng::uniform() {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(engine_);
    if (u > 0.0 && u < 1.0) return u;
  }
}

double Rng::normal() { return normal_(engine_); }

double Rng::chiSquared(double dof) {
  std::chi_squared_distribution<double> dist(dof);
  return dist(engine_);
}

}  // namespace geomc
