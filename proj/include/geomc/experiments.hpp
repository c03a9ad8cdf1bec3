#pragma once

#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geomc/config.hpp"
#include "geomc/models.hpp"
#include "geomc/samples.hpp"

namespace geomc {

struct ResultRow {
  std::string experiment;
  std::string model;
  std::string method;
  std::size_t trial = 0;
  std::string metric;
  double value = 0.0;
};

struct ExperimentOutcome {
  std::vector<ResultRow> rows;
  // Wall-clock dependent metrics, kept apart so results.csv is reproducible.
  std::vector<ResultRow> timings;
  // Threshold violations of assertion-style experiments, one message each.
  std::vector<std::string> failures;
  // First-trial chain samples of `sample` runs, keyed by method name.
  std::map<std::string, SampleMatrix> samples;
  double wallClockSeconds = 0.0;
};

// Model named by the spec; logistic data are synthesized from `seed` unless a
// CSV replica is configured.
std::shared_ptr<const MetricModel> buildModel(const ModelSpec& spec, std::uint64_t seed);

// I.i.d. draws for models that have an exact sampler; empty otherwise.
SampleMatrix referenceSamples(const MetricModel& model, std::size_t count, Rng& rng);

// Runs the configured experiment. Rows come back sorted by trial index, with
// ties kept in generation order.
ExperimentOutcome runExperiment(const ExperimentConfig& cfg);

// Shortest decimal string that parses back to the same double.
std::string formatNumber(double x);

// Header `experiment,model,method,trial,metric,value` plus one line per row.
std::string resultsCsv(const std::vector<ResultRow>& rows);
// One row per sample, columns q0..q{m-1}.
std::string samplesCsv(const SampleMatrix& samples);

std::string versionString();
nlohmann::json manifestJson(const ExperimentConfig& cfg, const ExperimentOutcome& outcome);

// Runs the experiment and writes results.csv, manifest.json and sample files
// into cfg.out. Returns 0 on success, 2 when a threshold failed; failures are
// echoed to `log` when given. IO errors throw.
int runAndWrite(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace geomc
