#include "geomc/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace geomc {

using nlohmann::json;

ConfigError::ConfigError(std::string field, const std::string& reason)
    : std::invalid_argument(field + ": " + reason), field_(std::move(field)) {}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

// Walks one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : path_(std::move(path)) {
    if (node.is_null()) return;
    if (!node.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    node_ = &node;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0) {
            throw ConfigError(field(key), "must be non-negative");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void readList(const std::string& key, std::vector<double>& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(field(key), "expected a list of numbers");
    out.clear();
    for (const auto& x : *v) {
      if (!x.is_number()) throw ConfigError(field(key), "expected a list of numbers");
      out.push_back(x.get<double>());
    }
  }

  void readList(const std::string& key, std::vector<std::string>& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(field(key), "expected a list of strings");
    out.clear();
    for (const auto& x : *v) {
      if (!x.is_string()) throw ConfigError(field(key), "expected a list of strings");
      out.push_back(x.get<std::string>());
    }
  }

  // Rejects keys nobody asked for, except those in `extra`.
  void finish(const std::set<std::string>& extra = {}) const {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it) {
      if (!seen_.count(it.key()) && !extra.count(it.key())) {
        throw ConfigError(field(it.key()), "unknown key");
      }
    }
  }

 private:
  const json* node_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

const json& orNull(const json* node) {
  static const json null;
  return node ? *node : null;
}

void readIntegrator(Section& s, IntegratorConfig& c) {
  s.read("step_size", c.stepSize);
  s.read("num_steps", c.numSteps);
  s.read("fixed_point_tol", c.fixedPointTol);
  s.read("fixed_point_max_iters", c.fixedPointMaxIters);
}

json integratorJson(const IntegratorConfig& c) {
  return json{{"step_size", c.stepSize},
              {"num_steps", c.numSteps},
              {"fixed_point_tol", c.fixedPointTol},
              {"fixed_point_max_iters", c.fixedPointMaxIters}};
}

const std::vector<std::string> kStepperNames = {"leapfrog",    "inverted-leapfrog",   "lagrangian",
                                                "inverted-lagrangian", "generalized-leapfrog",
                                                "euler",       "broken-leapfrog"};

std::vector<std::string> modelsFor(const std::string& experiment) {
  if (experiment == "order-study") return {"geodesic"};
  if (experiment == "harmonic-esjd") return {"harmonic"};
  if (experiment == "robustness") return {"banana", "student-t", "gaussian"};
  return {"banana", "logistic", "student-t", "gaussian"};
}

bool usesMethods(const std::string& experiment) {
  return experiment != "properties" && experiment != "harmonic-esjd";
}

void positive(double x, const std::string& field) {
  if (!(x > 0.0)) throw ConfigError(field, "must be positive");
}

void atLeast(std::size_t x, std::size_t lo, const std::string& field) {
  if (x < lo) throw ConfigError(field, "must be at least " + std::to_string(lo));
}

void validate(const ExperimentConfig& c) {
  const auto allowed = modelsFor(c.experiment);
  if (!contains(allowed, c.model.name)) {
    throw ConfigError("model.name", "'" + c.model.name + "' is not available for " + c.experiment +
                                        " (expected " + join(allowed) + ")");
  }
  if (c.threads < 1) throw ConfigError("threads", "must be at least 1");

  const ModelSpec& m = c.model;
  if (m.name == "banana") {
    positive(m.sigmaSqTheta, "model.sigma_sq_theta");
    positive(m.sigmaSqY, "model.sigma_sq_y");
  } else if (m.name == "logistic") {
    positive(m.alpha, "model.alpha");
    if (m.dataPath.empty()) {
      atLeast(m.observations, 1, "model.observations");
      atLeast(m.features, 1, "model.features");
    }
  } else if (m.name == "student-t") {
    atLeast(m.dim, 1, "model.dim");
    if (!(m.eta > 2.0)) throw ConfigError("model.eta", "must exceed 2");
    positive(m.sigmaSqLast, "model.sigma_sq_last");
  } else if (m.name == "gaussian") {
    atLeast(m.dim, 1, "model.dim");
    positive(m.sigmaSqLast, "model.sigma_sq_last");
  } else if (m.name == "harmonic") {
    positive(m.omega, "model.omega");
  }

  if (c.experiment == "order-study") {
    for (Method method : c.methods) {
      if (method == Method::HMC) throw ConfigError("methods", "hmc has no Riemannian integrator to study");
    }
  }
  if (usesMethods(c.experiment) && c.methods.empty()) throw ConfigError("methods", "no methods given");
  for (const auto& [method, ic] : c.integrators) {
    const std::string f = "integrator." + methodName(method);
    if (!std::isfinite(ic.stepSize) || ic.stepSize == 0.0) throw ConfigError(f + ".step_size", "must be finite and non-zero");
    if (ic.numSteps < 1) throw ConfigError(f + ".num_steps", "must be at least 1");
    positive(ic.fixedPointTol, f + ".fixed_point_tol");
    if (ic.fixedPointMaxIters < 1) throw ConfigError(f + ".fixed_point_max_iters", "must be at least 1");
  }

  const SamplingSpec& s = c.sampling;
  atLeast(s.samples, 1, "sampling.samples");
  atLeast(s.trials, 1, "sampling.trials");
  atLeast(s.referenceSamples, 1, "sampling.reference_samples");
  atLeast(s.ksDirections, 1, "sampling.ks_directions");

  if (c.orderStudy.lo < 0 || c.orderStudy.hi < c.orderStudy.lo + 1) {
    throw ConfigError("order_study.hi", "need 0 <= lo < hi");
  }
  positive(c.orderStudy.generalizedTol, "order_study.generalized_tol");

  for (const auto& name : c.properties.steppers) {
    if (!contains(kStepperNames, name)) {
      throw ConfigError("properties.steppers", "unknown stepper '" + name + "' (expected " +
                                                   join(kStepperNames) + ")");
    }
  }
  atLeast(c.properties.trials, 1, "properties.trials");
  positive(c.properties.stepSize, "properties.step_size");
  if (c.properties.involutionSteps < 1) throw ConfigError("properties.involution_steps", "must be at least 1");

  atLeast(c.jacobian.trials, 1, "jacobian.trials");
  positive(c.jacobian.h, "jacobian.h");
  positive(c.jacobian.stepSize, "jacobian.step_size");
  positive(c.jacobian.generalizedStepSize, "jacobian.generalized_step_size");

  atLeast(c.harmonic.draws, 1, "harmonic.draws");
  for (double e : c.harmonic.stepSizes) positive(e, "harmonic.step_sizes");
  for (double e : c.harmonic.gridStepSizes) positive(e, "harmonic.grid_step_sizes");
  if (c.harmonic.gridMaxSteps < 1) throw ConfigError("harmonic.grid_max_steps", "must be at least 1");

  if (!(c.robustness.delta >= 0.0)) throw ConfigError("robustness.delta", "must be non-negative");
}

}  // namespace

IntegratorConfig defaultIntegrator(const std::string& model, Method method) {
  IntegratorConfig c;
  if (model == "banana") {
    switch (method) {
      case Method::HMC: c.stepSize = 0.1; c.numSteps = 10; break;
      case Method::RMHMC: c.stepSize = 0.04; c.numSteps = 20; break;
      case Method::LMC:
      case Method::ILMC: c.stepSize = 0.1; c.numSteps = 20; break;
    }
  } else if (model == "student-t") {
    c.stepSize = method == Method::HMC ? 0.1 : 0.7;
    c.numSteps = 20;
  } else if (model == "logistic") {
    c.stepSize = method == Method::HMC ? 0.05 : 0.5;
    c.numSteps = method == Method::HMC ? 20 : 6;
  } else if (model == "gaussian") {
    c.stepSize = 0.1;
    c.numSteps = 10;
  } else if (model == "geodesic") {
    c.stepSize = 0.1;
    c.numSteps = 1;
  }
  return c;
}

std::vector<Method> defaultMethods(const std::string& experiment) {
  if (experiment == "sample") return {Method::HMC, Method::RMHMC, Method::LMC, Method::ILMC};
  if (experiment == "properties" || experiment == "harmonic-esjd") return {};
  return {Method::RMHMC, Method::LMC, Method::ILMC};
}

std::string defaultModel(const std::string& experiment) {
  if (experiment == "order-study") return "geodesic";
  if (experiment == "harmonic-esjd") return "harmonic";
  return "banana";
}

ModelSpec defaultModelSpec(const std::string& name) {
  ModelSpec m;
  m.name = name;
  if (name == "gaussian") {
    m.dim = 2;
    m.sigmaSqLast = 1.0;
  }
  return m;
}

SamplingSpec defaultSampling(const std::string& model) {
  SamplingSpec s;
  if (model == "student-t") s.samples = 20000;
  if (model == "logistic") s.samples = 10000;
  return s;
}

ExperimentConfig parseConfig(const json& doc, const ConfigOverrides& flags) {
  ExperimentConfig c;
  Section root(doc, "");

  std::optional<std::string> experiment;
  if (const json* v = root.get("experiment")) {
    if (!v->is_string()) throw ConfigError("experiment", "expected a string");
    experiment = v->get<std::string>();
  }
  if (flags.experiment) experiment = flags.experiment;
  if (!experiment) throw ConfigError("experiment", "missing (expected " + join(kExperiments) + ")");
  if (!contains(kExperiments, *experiment)) {
    throw ConfigError("experiment", "unknown experiment '" + *experiment + "' (expected " +
                                        join(kExperiments) + ")");
  }
  c.experiment = *experiment;

  // seed: flag > file > fallback > 0
  std::optional<std::uint64_t> seed;
  if (const json* v = root.get("seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    seed = v->get<std::uint64_t>();
  }
  if (flags.seed) seed = flags.seed;
  c.seed = seed.value_or(flags.fallbackSeed.value_or(0));

  std::optional<unsigned> threads;
  if (root.get("threads")) {
    unsigned t = 0;
    root.read("threads", t);
    threads = t;
  }
  if (flags.threads) threads = flags.threads;
  c.threads = threads.value_or(std::max(1u, std::thread::hardware_concurrency()));

  root.read("out", c.out);
  if (flags.out) c.out = *flags.out;

  // Model
  const json* modelNode = root.get("model");
  std::string modelName = defaultModel(c.experiment);
  if (modelNode && modelNode->is_object() && modelNode->contains("name")) {
    const json& n = (*modelNode)["name"];
    if (!n.is_string()) throw ConfigError("model.name", "expected a string");
    modelName = n.get<std::string>();
  }
  if (flags.model) modelName = *flags.model;
  if (!contains(kModels, modelName)) {
    throw ConfigError("model.name", "unknown model '" + modelName + "' (expected " + join(kModels) + ")");
  }
  c.model = defaultModelSpec(modelName);
  {
    Section s(orNull(modelNode), "model");
    s.get("name");
    if (modelName == "banana") {
      s.read("sigma_sq_theta", c.model.sigmaSqTheta);
      s.read("sigma_sq_y", c.model.sigmaSqY);
    } else if (modelName == "logistic") {
      s.read("observations", c.model.observations);
      s.read("features", c.model.features);
      s.read("alpha", c.model.alpha);
      s.read("data", c.model.dataPath);
    } else if (modelName == "student-t") {
      s.read("dim", c.model.dim);
      s.read("eta", c.model.eta);
      s.read("sigma_sq_last", c.model.sigmaSqLast);
    } else if (modelName == "gaussian") {
      s.read("dim", c.model.dim);
      s.read("sigma_sq_last", c.model.sigmaSqLast);
    } else if (modelName == "harmonic") {
      s.read("omega", c.model.omega);
    }
    s.finish();
  }

  // Methods
  std::vector<std::string> methodNames;
  bool methodsGiven = false;
  if (root.get("methods")) {
    root.readList("methods", methodNames);
    methodsGiven = true;
  }
  if (!flags.methods.empty()) {
    methodNames = flags.methods;
    methodsGiven = true;
  }
  if (methodsGiven) {
    if (!usesMethods(c.experiment)) throw ConfigError("methods", "not used by " + c.experiment);
    for (const auto& name : methodNames) {
      Method m;
      try {
        m = parseMethod(name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("methods", e.what());
      }
      if (std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end()) {
        throw ConfigError("methods", "duplicate method '" + name + "'");
      }
      c.methods.push_back(m);
    }
  } else {
    c.methods = defaultMethods(c.experiment);
  }

  // Integrator: defaults < shared keys < per-method keys < flags.
  {
    const json* node = root.get("integrator");
    const json& section = orNull(node);
    std::set<std::string> methodKeys;
    for (Method m : {Method::HMC, Method::RMHMC, Method::LMC, Method::ILMC}) methodKeys.insert(methodName(m));
    for (Method m : c.methods) {
      IntegratorConfig ic = defaultIntegrator(c.model.name, m);
      Section shared(section, "integrator");
      readIntegrator(shared, ic);
      if (section.is_object() && section.contains(methodName(m))) {
        Section per(section[methodName(m)], "integrator." + methodName(m));
        readIntegrator(per, ic);
        per.finish();
      }
      if (flags.stepSize) ic.stepSize = *flags.stepSize;
      if (flags.numSteps) ic.numSteps = *flags.numSteps;
      c.integrators[m] = ic;
    }
    IntegratorConfig scratch;
    Section check(section, "integrator");
    readIntegrator(check, scratch);
    check.finish(methodKeys);
    for (const auto& key : methodKeys) {
      if (section.is_object() && section.contains(key) &&
          std::find(c.methods.begin(), c.methods.end(), parseMethod(key)) == c.methods.end()) {
        throw ConfigError("integrator." + key, "settings for a method that is not run");
      }
    }
  }

  // Sampling
  c.sampling = defaultSampling(c.model.name);
  {
    const json* node = root.get("sampling");
    Section s(orNull(node), "sampling");
    s.read("samples", c.sampling.samples);
    if (s.get("burn_in")) {
      std::size_t b = 0;
      s.read("burn_in", b);
      c.sampling.burnIn = b;
    }
    s.read("trials", c.sampling.trials);
    s.read("reference_samples", c.sampling.referenceSamples);
    s.read("ks_directions", c.sampling.ksDirections);
    s.finish();
  }
  if (flags.samples) c.sampling.samples = *flags.samples;

  {
    const json* node = root.get("order_study");
    Section s(orNull(node), "order_study");
    s.read("lo", c.orderStudy.lo);
    s.read("hi", c.orderStudy.hi);
    s.read("generalized_tol", c.orderStudy.generalizedTol);
    s.finish();
  }
  {
    const json* node = root.get("properties");
    Section s(orNull(node), "properties");
    s.readList("steppers", c.properties.steppers);
    s.read("trials", c.properties.trials);
    s.read("step_size", c.properties.stepSize);
    s.read("involution_steps", c.properties.involutionSteps);
    s.finish();
  }
  {
    const json* node = root.get("jacobian");
    Section s(orNull(node), "jacobian");
    s.read("trials", c.jacobian.trials);
    s.read("h", c.jacobian.h);
    s.read("step_size", c.jacobian.stepSize);
    s.read("generalized_step_size", c.jacobian.generalizedStepSize);
    s.finish();
  }
  {
    const json* node = root.get("harmonic");
    Section s(orNull(node), "harmonic");
    s.read("draws", c.harmonic.draws);
    s.readList("step_sizes", c.harmonic.stepSizes);
    s.readList("grid_step_sizes", c.harmonic.gridStepSizes);
    s.read("grid_max_steps", c.harmonic.gridMaxSteps);
    s.finish();
  }
  {
    const json* node = root.get("robustness");
    Section s(orNull(node), "robustness");
    s.read("delta", c.robustness.delta);
    s.read("jacobian_trials", c.robustness.jacobianTrials);
    s.finish();
  }
  root.finish();

  validate(c);
  return c;
}

ExperimentConfig parseConfigText(const std::string& text, const ConfigOverrides& flags) {
  json doc;
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
  if (!blank) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
    }
  }
  return parseConfig(doc, flags);
}

ExperimentConfig parseConfigFile(const std::string& path, const ConfigOverrides& flags) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseConfigText(ss.str(), flags);
}

json toJson(const ExperimentConfig& c) {
  json model{{"name", c.model.name}};
  const ModelSpec& m = c.model;
  if (m.name == "banana") {
    model["sigma_sq_theta"] = m.sigmaSqTheta;
    model["sigma_sq_y"] = m.sigmaSqY;
  } else if (m.name == "logistic") {
    model["observations"] = m.observations;
    model["features"] = m.features;
    model["alpha"] = m.alpha;
    model["data"] = m.dataPath;
  } else if (m.name == "student-t") {
    model["dim"] = m.dim;
    model["eta"] = m.eta;
    model["sigma_sq_last"] = m.sigmaSqLast;
  } else if (m.name == "gaussian") {
    model["dim"] = m.dim;
    model["sigma_sq_last"] = m.sigmaSqLast;
  } else if (m.name == "harmonic") {
    model["omega"] = m.omega;
  }

  json methods = json::array();
  json integrator = json::object();
  for (Method method : c.methods) {
    methods.push_back(methodName(method));
    integrator[methodName(method)] = integratorJson(c.integrators.at(method));
  }

  json sampling{{"samples", c.sampling.samples},
                {"trials", c.sampling.trials},
                {"reference_samples", c.sampling.referenceSamples},
                {"ks_directions", c.sampling.ksDirections}};
  if (c.sampling.burnIn) sampling["burn_in"] = *c.sampling.burnIn;

  json doc{
      {"experiment", c.experiment},
      {"seed", c.seed},
      {"threads", c.threads},
      {"out", c.out},
      {"model", model},
      {"integrator", integrator},
      {"sampling", sampling},
      {"order_study",
       {{"lo", c.orderStudy.lo}, {"hi", c.orderStudy.hi}, {"generalized_tol", c.orderStudy.generalizedTol}}},
      {"properties",
       {{"steppers", c.properties.steppers},
        {"trials", c.properties.trials},
        {"step_size", c.properties.stepSize},
        {"involution_steps", c.properties.involutionSteps}}},
      {"jacobian",
       {{"trials", c.jacobian.trials},
        {"h", c.jacobian.h},
        {"step_size", c.jacobian.stepSize},
        {"generalized_step_size", c.jacobian.generalizedStepSize}}},
      {"harmonic",
       {{"draws", c.harmonic.draws},
        {"step_sizes", c.harmonic.stepSizes},
        {"grid_step_sizes", c.harmonic.gridStepSizes},
        {"grid_max_steps", c.harmonic.gridMaxSteps}}},
      {"robustness", {{"delta", c.robustness.delta}, {"jacobian_trials", c.robustness.jacobianTrials}}},
  };
  if (usesMethods(c.experiment)) doc["methods"] = methods;
  return doc;
}

}  // namespace geomc
