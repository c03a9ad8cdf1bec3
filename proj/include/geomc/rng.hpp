#pragma once

#include <cstdint>
#include <random>

namespace geomc {

// Seeded source with independent substreams: (seed, stream) pairs are mixed
// through std::seed_seq, so chains seeded with the same seed and distinct
// stream indices do not overlap in practice.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double chiSquared(double dof);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace geomc
