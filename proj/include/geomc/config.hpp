#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geomc/integrators.hpp"
#include "geomc/sampler.hpp"

namespace geomc {

// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& reason);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline const std::vector<std::string> kExperiments = {
    "order-study", "properties", "jacobian-check", "harmonic-esjd", "sample", "robustness"};

inline const std::vector<std::string> kModels = {"banana", "logistic", "student-t", "gaussian",
                                                 "harmonic", "geodesic"};

struct ModelSpec {
  std::string name = "banana";
  // banana
  double sigmaSqTheta = 2.0;
  double sigmaSqY = 2.0;
  // logistic
  std::size_t observations = 277;
  std::size_t features = 10;
  double alpha = 1.0;
  std::string dataPath;  // CSV replica; synthetic data when empty
  // student-t, gaussian, harmonic
  std::size_t dim = 20;
  double eta = 5e3;
  double sigmaSqLast = 1e2;
  double omega = 1.0;

  bool operator==(const ModelSpec&) const = default;
};

struct SamplingSpec {
  std::size_t samples = 100000;
  std::optional<std::size_t> burnIn;
  std::size_t trials = 10;
  std::size_t referenceSamples = 100000;
  std::size_t ksDirections = 100;

  bool operator==(const SamplingSpec&) const = default;
};

struct OrderStudySpec {
  int lo = 4;
  int hi = 12;
  // Fixed-point tolerance for the generalized leapfrog, tight enough that the
  // local error is not masked by the solver at the smallest step.
  double generalizedTol = 1e-14;

  bool operator==(const OrderStudySpec&) const = default;
};

struct PropertiesSpec {
  std::vector<std::string> steppers = {"leapfrog", "inverted-leapfrog", "lagrangian",
                                       "inverted-lagrangian", "generalized-leapfrog"};
  std::size_t trials = 100;
  double stepSize = 0.05;
  int involutionSteps = 5;

  bool operator==(const PropertiesSpec&) const = default;
};

struct JacobianSpec {
  std::size_t trials = 100;
  double h = 1e-6;
  double stepSize = 0.1;
  double generalizedStepSize = 0.04;

  bool operator==(const JacobianSpec&) const = default;
};

struct HarmonicSpec {
  std::size_t draws = 1000000;
  std::vector<double> stepSizes = {0.5, 1.0, 1.5};
  std::vector<double> gridStepSizes = {0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9};
  int gridMaxSteps = 100;

  bool operator==(const HarmonicSpec&) const = default;
};

struct RobustnessSpec {
  double delta = 0.3;
  std::size_t jacobianTrials = 20;

  bool operator==(const RobustnessSpec&) const = default;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // resolved to the logical core count when unset
  std::string out = ".";
  ModelSpec model;
  std::vector<Method> methods;
  std::map<Method, IntegratorConfig> integrators;  // one entry per method
  SamplingSpec sampling;
  OrderStudySpec orderStudy;
  PropertiesSpec properties;
  JacobianSpec jacobian;
  HarmonicSpec harmonic;
  RobustnessSpec robustness;

  bool operator==(const ExperimentConfig&) const = default;
};

// Flags as given on the command line; unset fields leave the file value.
struct ConfigOverrides {
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<std::string> model;
  std::vector<std::string> methods;
  std::optional<double> stepSize;
  std::optional<int> numSteps;
  std::optional<std::size_t> samples;
  // Used only when neither the flags nor the file give a seed.
  std::optional<std::uint64_t> fallbackSeed;
};

// Settings used when the file and flags say nothing.
IntegratorConfig defaultIntegrator(const std::string& model, Method method);
std::vector<Method> defaultMethods(const std::string& experiment);
std::string defaultModel(const std::string& experiment);
ModelSpec defaultModelSpec(const std::string& name);
SamplingSpec defaultSampling(const std::string& model);

// Parses a JSON document (possibly empty), applies overrides, fills defaults and
// validates. Throws ConfigError.
ExperimentConfig parseConfig(const nlohmann::json& doc, const ConfigOverrides& flags = {});
ExperimentConfig parseConfigText(const std::string& text, const ConfigOverrides& flags = {});
ExperimentConfig parseConfigFile(const std::string& path, const ConfigOverrides& flags = {});

// Normalized form; parseConfig(toJson(c)) == c.
nlohmann::json toJson(const ExperimentConfig& cfg);

}  // namespace geomc
