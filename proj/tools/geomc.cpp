#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geomc/config.hpp"
#include "geomc/experiments.hpp"

namespace {

std::string experimentList() {
  std::string out;
  for (const auto& e : geomc::kExperiments) out += (out.empty() ? "" : ", ") + e;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian and Lagrangian Monte Carlo experiments"};
  app.set_version_flag("--version", geomc::versionString());

  std::string experiment;
  std::string configPath;
  geomc::ConfigOverrides flags;
  app.add_option("experiment", experiment, "One of: " + experimentList())->required();
  app.add_option("--config", configPath, "JSON configuration file");
  app.add_option("--seed", flags.seed, "Random seed (falls back to GEOMC_SEED, then 0)");
  app.add_option("--threads", flags.threads, "Worker threads (default: logical cores)");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--model", flags.model, "Target model");
  app.add_option("--method", flags.methods, "Sampling method (repeatable)");
  app.add_option("--step-size", flags.stepSize, "Integrator step size for every method");
  app.add_option("--num-steps", flags.numSteps, "Integration steps per trajectory for every method");
  app.add_option("--samples", flags.samples, "Samples per chain");
  CLI11_PARSE(app, argc, argv);

  flags.experiment = experiment;
  if (const char* env = std::getenv("GEOMC_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      flags.fallbackSeed = v;
    } catch (const std::exception&) {
      std::cerr << "error: GEOMC_SEED='" << env << "' is not a non-negative integer\n";
      return 1;
    }
  }

  geomc::ExperimentConfig cfg;
  try {
    cfg = configPath.empty() ? geomc::parseConfig(nlohmann::json(), flags)
                             : geomc::parseConfigFile(configPath, flags);
  } catch (const geomc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    return geomc::runAndWrite(cfg, &std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
