#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "swarmloc/error.hpp"

namespace swarmloc::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kConfig, "config: " + path + ": " + what);
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

const json& require_object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || a == key;
    if (!known) fail(join(path, key), "unknown key");
  }
  return j;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

void read(const json& obj, const std::string& path, std::string_view key, double& out) {
  if (obj.contains(key)) out = as_number(obj.at(key), join(path, key));
}

void read(const json& obj, const std::string& path, std::string_view key, Index& out) {
  if (obj.contains(key)) out = static_cast<Index>(as_integer(obj.at(key), join(path, key)));
}

void read(const json& obj, const std::string& path, std::string_view key, int& out) {
  if (!obj.contains(key)) return;
  const std::int64_t v = as_integer(obj.at(key), join(path, key));
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    fail(join(path, key), "out of range");
  }
  out = static_cast<int>(v);
}

void read(const json& obj, const std::string& path, std::string_view key, unsigned& out) {
  if (!obj.contains(key)) return;
  const std::int64_t v = as_integer(obj.at(key), join(path, key));
  if (v < 0 || v > std::numeric_limits<unsigned>::max()) fail(join(path, key), "must be a non-negative integer");
  out = static_cast<unsigned>(v);
}

void read_seed(const json& obj, const std::string& path, std::string_view key, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const json& j = obj.at(key);
  if (j.is_number_unsigned()) {
    out = j.get<std::uint64_t>();
  } else if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(j.get<std::int64_t>());
  } else {
    fail(join(path, key), "expected a non-negative integer");
  }
}

void read(const json& obj, const std::string& path, std::string_view key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) fail(join(path, key), "expected a boolean");
  out = obj.at(key).get<bool>();
}

void read(const json& obj, const std::string& path, std::string_view key, std::optional<double>& out) {
  if (!obj.contains(key)) return;
  const json& j = obj.at(key);
  if (j.is_null()) {
    out.reset();
  } else {
    out = as_number(j, join(path, key));
  }
}

void read(const json& obj, const std::string& path, std::string_view key, std::optional<Index>& out) {
  if (!obj.contains(key)) return;
  const json& j = obj.at(key);
  if (j.is_null()) {
    out.reset();
  } else {
    out = static_cast<Index>(as_integer(j, join(path, key)));
  }
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

template <typename T, typename Convert>
void read_list(const json& obj, const std::string& path, std::string_view key, std::vector<T>& out,
               Convert convert) {
  if (!obj.contains(key)) return;
  const std::string p = join(path, key);
  const json& j = obj.at(key);
  if (!j.is_array()) fail(p, "expected an array");
  std::vector<T> values;
  for (std::size_t i = 0; i < j.size(); ++i) values.push_back(convert(j[i], p + "[" + std::to_string(i) + "]"));
  out = std::move(values);
}

void read_vec3(const json& obj, const std::string& path, std::string_view key, Eigen::Vector3d& out) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read_list(obj, path, key, v, as_number);
  if (v.size() != 3) fail(join(path, key), "expected three numbers");
  out = Eigen::Vector3d(v[0], v[1], v[2]);
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) fail(field, what);
}

}  // namespace

std::string_view scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kLocate:
      return "locate";
    case Scenario::kSweepRetention:
      return "sweep-retention";
    case Scenario::kSweepSize:
      return "sweep-size";
    case Scenario::kSweepIsac:
      return "sweep-isac";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::kLocate, Scenario::kSweepRetention, Scenario::kSweepSize, Scenario::kSweepIsac}) {
    if (scenario_name(s) == name) return s;
  }
  throw Error(ErrorCode::kConfig, "unknown scenario '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  check(trials >= 0, "trials", "must be >= 0");
  check(!methods.empty(), "methods", "must name at least one method");
  check(swarm_size >= 4, "swarm.size", "must be >= 4");
  check((bounds.array() > 0.0).all() && bounds.allFinite(), "swarm.bounds", "must be positive and finite");
  check(measurement.retention_ratio >= 0.0 && measurement.retention_ratio <= 1.0, "measurement.retention",
        "must lie in [0, 1]");
  check(measurement.noise_sigma >= 0.0 && std::isfinite(measurement.noise_sigma), "measurement.noise_sigma",
        "must be >= 0");
  check(measurement.range_threshold_m > 0.0, "measurement.range_threshold_m", "must be > 0");
  const ClusteringConfig& cc = pipeline.clustering;
  check(!cc.sigma || (*cc.sigma > 0.0 && std::isfinite(*cc.sigma)), "clustering.sigma", "must be > 0 or null");
  check(cc.min_size >= 1, "clustering.min_size", "must be >= 1");
  check(cc.k_max >= 0, "clustering.k_max", "must be >= 0 (0 = L / min_size)");
  check(!cc.k_fixed || *cc.k_fixed >= 1, "clustering.k_fixed", "must be >= 1 or null");
  check(cc.kmeans_restarts >= 1, "clustering.kmeans_restarts", "must be >= 1");
  check(pipeline.completion_margin >= 0.0, "clustering.completion_margin", "must be >= 0");
  const CompletionConfig& comp = pipeline.completion;
  check(comp.rank >= 1, "completion.rank", "must be >= 1");
  check(!comp.lambda || *comp.lambda > 0.0, "completion.lambda", "must be > 0 or null");
  check(comp.lambda_factor > 0.0, "completion.lambda_factor", "must be > 0");
  check(comp.max_iterations >= 1, "completion.max_iterations", "must be >= 1");
  check(comp.tolerance >= 0.0, "completion.tolerance", "must be >= 0");
  check(comp.restarts >= 1, "completion.restarts", "must be >= 1");
  check(comp.polish_iterations >= 0, "completion.polish_iterations", "must be >= 0");
  check(comp.polish_factor > 0.0, "completion.polish_factor", "must be > 0");
  check(k_fixed >= 1, "baselines.k_fixed", "must be >= 1");
  check(patch_hops >= 1, "baselines.patch_hops", "must be >= 1");
  for (double r : retention_ratios) check(r >= 0.0 && r <= 1.0, "sweep.retention_ratios", "entries must lie in [0, 1]");
  for (double r : size_ratios) check(r >= 0.0 && r <= 1.0, "sweep.size_ratios", "entries must lie in [0, 1]");
  for (Index s : swarm_sizes) check(s >= 4, "sweep.swarm_sizes", "entries must be >= 4");
  for (double p : power_ratios_db) check(std::isfinite(p), "sweep.power_ratios_db", "entries must be finite");
  check(isac_swarm_size >= 4, "sweep.isac_swarm_size", "must be >= 4");
  check(isac_bounds > 0.0, "sweep.isac_bounds", "must be > 0");
  try {
    otfs.validate();
  } catch (const Error& e) {
    fail("otfs", e.what());
  }
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.bounds = bounds;
  e.measurement = measurement;
  e.pipeline = pipeline;
  e.k_fixed = k_fixed;
  e.patch_hops = patch_hops;
  e.threads = threads;
  e.record_runtime = timing;
  return e;
}

IsacConfig RunConfig::isac() const {
  IsacConfig i;
  i.swarm_size = isac_swarm_size;
  i.bounds = isac_bounds;
  i.otfs = otfs;
  i.pipeline = pipeline;
  i.threads = threads;
  i.record_runtime = timing;
  return i;
}

void apply_json(RunConfig& config, const json& doc) {
  const json& root = require_object(doc, "", {"scenario", "seed", "trials", "out", "methods", "threads", "timing",
                                              "swarm", "measurement", "clustering", "completion", "baselines",
                                              "otfs", "sweep"});
  if (root.contains("scenario")) config.scenario = parse_scenario(as_string(root.at("scenario"), "scenario"));
  read_seed(root, "", "seed", config.seed);
  read(root, "", "trials", config.trials);
  if (root.contains("out")) config.out = as_string(root.at("out"), "out");
  read_list(root, "", "methods", config.methods,
            [](const json& j, const std::string& p) { return parse_method(as_string(j, p)); });
  read(root, "", "threads", config.threads);
  read(root, "", "timing", config.timing);

  if (root.contains("swarm")) {
    const json& s = require_object(root.at("swarm"), "swarm", {"size", "bounds"});
    read(s, "swarm", "size", config.swarm_size);
    read_vec3(s, "swarm", "bounds", config.bounds);
  }
  if (root.contains("measurement")) {
    const json& m = require_object(root.at("measurement"), "measurement",
                                   {"retention", "mask", "range_threshold_m", "noise_sigma"});
    read(m, "measurement", "retention", config.measurement.retention_ratio);
    if (m.contains("mask")) {
      const std::string mode = as_string(m.at("mask"), "measurement.mask");
      if (mode == "random") {
        config.measurement.mask_mode = MaskMode::kRandom;
      } else if (mode == "range-threshold") {
        config.measurement.mask_mode = MaskMode::kRangeThreshold;
      } else {
        fail("measurement.mask", "expected \"random\" or \"range-threshold\"");
      }
    }
    read(m, "measurement", "range_threshold_m", config.measurement.range_threshold_m);
    read(m, "measurement", "noise_sigma", config.measurement.noise_sigma);
  }
  if (root.contains("clustering")) {
    ClusteringConfig& cc = config.pipeline.clustering;
    const json& c = require_object(root.at("clustering"), "clustering",
                                   {"sigma", "min_size", "k_max", "k_fixed", "kmeans_restarts", "completion_margin"});
    read(c, "clustering", "sigma", cc.sigma);
    read(c, "clustering", "min_size", cc.min_size);
    read(c, "clustering", "k_max", cc.k_max);
    read(c, "clustering", "k_fixed", cc.k_fixed);
    read(c, "clustering", "kmeans_restarts", cc.kmeans_restarts);
    read(c, "clustering", "completion_margin", config.pipeline.completion_margin);
  }
  if (root.contains("completion")) {
    CompletionConfig& cc = config.pipeline.completion;
    const json& c = require_object(root.at("completion"), "completion",
                                   {"rank", "lambda", "lambda_factor", "max_iterations", "tolerance", "restarts",
                                    "fit_diagonal", "polish_iterations", "polish_factor", "mode"});
    read(c, "completion", "rank", cc.rank);
    read(c, "completion", "lambda", cc.lambda);
    read(c, "completion", "lambda_factor", cc.lambda_factor);
    read(c, "completion", "max_iterations", cc.max_iterations);
    read(c, "completion", "tolerance", cc.tolerance);
    read(c, "completion", "restarts", cc.restarts);
    read(c, "completion", "fit_diagonal", cc.fit_diagonal);
    read(c, "completion", "polish_iterations", cc.polish_iterations);
    read(c, "completion", "polish_factor", cc.polish_factor);
    if (c.contains("mode")) {
      const std::string mode = as_string(c.at("mode"), "completion.mode");
      if (mode == "squared") {
        cc.mode = CompletionMode::kSquared;
      } else if (mode == "raw") {
        cc.mode = CompletionMode::kRaw;
      } else {
        fail("completion.mode", "expected \"squared\" or \"raw\"");
      }
    }
  }
  if (root.contains("baselines")) {
    const json& b = require_object(root.at("baselines"), "baselines", {"k_fixed", "patch_hops"});
    read(b, "baselines", "k_fixed", config.k_fixed);
    read(b, "baselines", "patch_hops", config.patch_hops);
  }
  if (root.contains("otfs")) {
    otfs::OtfsConfig& oc = config.otfs;
    const json& o = require_object(root.at("otfs"), "otfs",
                                   {"delay_bins", "doppler_bins", "subcarrier_spacing_hz", "carrier_hz",
                                    "pilot_snr_db", "data_to_pilot_db", "relative_velocity",
                                    "fractional_refinement", "guard_doppler", "guard_delay"});
    read(o, "otfs", "delay_bins", oc.delay_bins);
    read(o, "otfs", "doppler_bins", oc.doppler_bins);
    read(o, "otfs", "subcarrier_spacing_hz", oc.subcarrier_spacing_hz);
    read(o, "otfs", "carrier_hz", oc.carrier_hz);
    read(o, "otfs", "pilot_snr_db", oc.pilot_snr_db);
    read(o, "otfs", "data_to_pilot_db", oc.data_to_pilot_db);
    read(o, "otfs", "relative_velocity", oc.relative_velocity);
    read(o, "otfs", "fractional_refinement", oc.fractional_refinement);
    read(o, "otfs", "guard_doppler", oc.guard_doppler);
    read(o, "otfs", "guard_delay", oc.guard_delay);
  }
  if (root.contains("sweep")) {
    const json& s = require_object(root.at("sweep"), "sweep",
                                   {"retention_ratios", "swarm_sizes", "size_ratios", "power_ratios_db",
                                    "isac_swarm_size", "isac_bounds"});
    read_list(s, "sweep", "retention_ratios", config.retention_ratios, as_number);
    read_list(s, "sweep", "swarm_sizes", config.swarm_sizes,
              [](const json& j, const std::string& p) { return static_cast<Index>(as_integer(j, p)); });
    read_list(s, "sweep", "size_ratios", config.size_ratios, as_number);
    read_list(s, "sweep", "power_ratios_db", config.power_ratios_db, as_number);
    read(s, "sweep", "isac_swarm_size", config.isac_swarm_size);
    read(s, "sweep", "isac_bounds", config.isac_bounds);
  }
}

void apply_json_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "config: " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_json(config, doc);
}

json to_json(const RunConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  const ClusteringConfig& cc = c.pipeline.clustering;
  const CompletionConfig& comp = c.pipeline.completion;
  const otfs::OtfsConfig& oc = c.otfs;
  auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  // JSON has no infinities, so they are echoed as the extreme doubles.
  auto finite = [](double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest();
  };
  const double threshold = finite(c.measurement.range_threshold_m);
  json doc = {
      {"scenario", std::string(scenario_name(c.scenario))},
      {"seed", c.seed},
      {"trials", c.trials},
      {"out", c.out.string()},
      {"methods", methods},
      {"threads", c.threads},
      {"timing", c.timing},
      {"swarm", {{"size", c.swarm_size}, {"bounds", {c.bounds.x(), c.bounds.y(), c.bounds.z()}}}},
      {"measurement",
       {{"retention", c.measurement.retention_ratio},
        {"mask", c.measurement.mask_mode == MaskMode::kRandom ? "random" : "range-threshold"},
        {"range_threshold_m", threshold},
        {"noise_sigma", c.measurement.noise_sigma}}},
      {"clustering",
       {{"sigma", opt(cc.sigma)},
        {"min_size", cc.min_size},
        {"k_max", cc.k_max},
        {"k_fixed", opt(cc.k_fixed)},
        {"kmeans_restarts", cc.kmeans_restarts},
        {"completion_margin", c.pipeline.completion_margin}}},
      {"completion",
       {{"rank", comp.rank},
        {"lambda", opt(comp.lambda)},
        {"lambda_factor", comp.lambda_factor},
        {"max_iterations", comp.max_iterations},
        {"tolerance", comp.tolerance},
        {"restarts", comp.restarts},
        {"fit_diagonal", comp.fit_diagonal},
        {"polish_iterations", comp.polish_iterations},
        {"polish_factor", comp.polish_factor},
        {"mode", comp.mode == CompletionMode::kSquared ? "squared" : "raw"}}},
      {"baselines", {{"k_fixed", c.k_fixed}, {"patch_hops", c.patch_hops}}},
      {"otfs",
       {{"delay_bins", oc.delay_bins},
        {"doppler_bins", oc.doppler_bins},
        {"subcarrier_spacing_hz", oc.subcarrier_spacing_hz},
        {"carrier_hz", oc.carrier_hz},
        {"pilot_snr_db", oc.pilot_snr_db},
        {"data_to_pilot_db", finite(oc.data_to_pilot_db)},
        {"relative_velocity", oc.relative_velocity},
        {"fractional_refinement", oc.fractional_refinement},
        {"guard_doppler", oc.guard_doppler},
        {"guard_delay", oc.guard_delay}}},
      {"sweep",
       {{"retention_ratios", c.retention_ratios},
        {"swarm_sizes", c.swarm_sizes},
        {"size_ratios", c.size_ratios},
        {"power_ratios_db", c.power_ratios_db},
        {"isac_swarm_size", c.isac_swarm_size},
        {"isac_bounds", c.isac_bounds}}},
  };
  return doc;
}

}  // namespace swarmloc::cli
