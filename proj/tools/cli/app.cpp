#include "app.hpp"

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <set>
#include <string>
#include <system_error>
#include <tuple>

#include <CLI11.hpp>

#include "report.hpp"
#include "swarmloc/error.hpp"

namespace swarmloc::cli {

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::vector<Index> to_indices(const std::vector<long long>& values) {
  return {values.begin(), values.end()};
}

void print_summary(std::ostream& out, const SweepResult& result) {
  // (param_name, param_value, method) in row order.
  std::set<std::tuple<std::string, double, std::string>> seen;
  for (const SweepRow& r : result.rows) {
    if (!seen.emplace(r.param_name, r.param_value, r.method).second) continue;
    const Aggregate a = aggregate_rmse(result, r.method, r.param_value);
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-28s %10.4g  rmse %-12.6g sd %-12.6g ok %zu failed %zu", r.method.c_str(),
                  r.param_name.c_str(), r.param_value, a.mean, a.stddev, a.ok, a.failed);
    out << line;
    if (r.ber) out << "  ber " << aggregate_ber(result, r.method, r.param_value).mean;
    out << '\n';
  }
}

}  // namespace

SweepResult execute(const RunConfig& config) {
  config.validate();
  switch (config.scenario) {
    case Scenario::kLocate: {
      const std::vector<double> ratio{config.measurement.retention_ratio};
      return sweep_retention(config.methods, ratio, config.swarm_size, 1, config.seed, config.experiment());
    }
    case Scenario::kSweepRetention:
      return sweep_retention(config.methods, config.retention_ratios, config.swarm_size, config.trials, config.seed,
                             config.experiment());
    case Scenario::kSweepSize:
      return sweep_swarm_size(config.methods, config.swarm_sizes, config.size_ratios, config.trials, config.seed,
                              config.experiment());
    case Scenario::kSweepIsac:
      return sweep_isac(config.power_ratios_db, config.trials, config.seed, config.isac());
  }
  throw Error(ErrorCode::kUsage, "unknown scenario");
}

nlohmann::json manifest(const RunConfig& config, const SweepResult& result) {
  std::set<std::uint64_t> seeds;
  for (const SweepRow& r : result.rows) seeds.insert(r.seed);
  std::size_t failed = 0;
  for (const SweepRow& r : result.rows) failed += r.ok() ? 0 : 1;
  std::vector<std::string> plots{"plots/rmse_m.svg"};
  for (const SweepRow& r : result.rows) {
    if (r.ber) {
      plots.emplace_back("plots/ber.svg");
      break;
    }
  }
  return {{"tool", "swarmloc"},
          {"version", SWARMLOC_VERSION_STRING},
          {"scenario", scenario_name(config.scenario)},
          {"base_seed", config.seed},
          {"trial_seeds", seeds},
          {"rows", result.size()},
          {"failed_rows", failed},
          {"files", {{"results", "results.csv"}, {"plots", plots}}},
          {"config", to_json(config)}};
}

void write_outputs(const RunConfig& config, const SweepResult& result) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.out / "plots", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + (config.out / "plots").string() + ": " + ec.message());

  const nlohmann::json m = manifest(config, result);
  for (const auto& plot : m["files"]["plots"]) {
    const std::string rel = plot.get<std::string>();
    const std::string metric = fs::path(rel).stem().string();
    write_atomic(config.out / rel, render_svg(result, metric));
  }
  write_atomic(config.out / "manifest.json", m.dump(2) + "\n");
  emit_csv(result, config.out / "results.csv");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relative localization experiments for GNSS-denied swarms", "swarmloc"};
  app.set_version_flag("--version", std::string(SWARMLOC_VERSION_STRING));

  std::string scenario;
  std::filesystem::path config_path;
  std::uint64_t seed = 0;
  long long trials = 0;
  std::string out_dir;
  std::vector<std::string> methods;
  double retention = 0.0;
  std::vector<double> ratios;
  std::vector<long long> sizes;
  std::vector<double> power_ratios;
  long long size = 0;
  double noise = 0.0;
  unsigned threads = 0;
  long long k_fixed = 0;
  bool print_config = false;
  bool quiet = false;

  app.add_option("scenario", scenario, "locate | sweep-retention | sweep-size | sweep-isac")->required();
  app.add_option("--config", config_path, "JSON configuration file");
  auto* o_seed = app.add_option("--seed", seed, "Base seed");
  auto* o_trials = app.add_option("--trials", trials, "Monte-Carlo trials per grid point");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  auto* o_methods = app.add_option("--methods", methods, "proposed,proposed-fix,mds-map,mds-map-p")->delimiter(',');
  auto* o_retention = app.add_option("--retention", retention, "Retention ratio for locate");
  auto* o_ratios = app.add_option("--ratios", ratios, "Retention ratios for the sweeps")->delimiter(',');
  auto* o_sizes = app.add_option("--sizes", sizes, "Swarm sizes for sweep-size")->delimiter(',');
  auto* o_power = app.add_option("--power-ratios", power_ratios, "Data/pilot ratios in dB for sweep-isac")
                      ->delimiter(',');
  auto* o_size = app.add_option("--size", size, "Swarm size");
  auto* o_noise = app.add_option("--noise", noise, "Range noise standard deviation in meters");
  auto* o_threads = app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  auto* o_timing = app.add_flag("--timing", "Record per-run wall time in runtime_s");
  auto* o_k_fixed = app.add_option("--k-fixed", k_fixed, "Cluster count for proposed-fix");
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");
  app.add_flag("-q,--quiet", quiet, "No summary on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  RunConfig config;
  try {
    config.scenario = parse_scenario(scenario);
    if (!config_path.empty()) apply_json_file(config, config_path);
    if (*o_seed) config.seed = seed;
    if (*o_trials) config.trials = static_cast<Index>(trials);
    if (*o_out) config.out = out_dir;
    if (*o_methods) {
      config.methods.clear();
      for (const std::string& m : methods) config.methods.push_back(parse_method(m));
    }
    if (*o_retention) config.measurement.retention_ratio = retention;
    if (*o_ratios) {
      config.retention_ratios = ratios;
      config.size_ratios = ratios;
    }
    if (*o_sizes) config.swarm_sizes = to_indices(sizes);
    if (*o_power) config.power_ratios_db = power_ratios;
    if (*o_size) {
      config.swarm_size = static_cast<Index>(size);
      config.isac_swarm_size = static_cast<Index>(size);
    }
    if (*o_noise) config.measurement.noise_sigma = noise;
    if (*o_threads) config.threads = threads;
    if (*o_timing) config.timing = true;
    if (*o_k_fixed) config.k_fixed = static_cast<Index>(k_fixed);
    // The scenario on the command line wins over the file.
    config.scenario = parse_scenario(scenario);
    config.validate();
  } catch (const Error& e) {
    err << "swarmloc: " << e.what() << '\n';
    return e.code() == ErrorCode::kIo ? kExitIo : kExitConfig;
  }

  if (print_config) {
    out << to_json(config).dump(2) << '\n';
    return 0;
  }

  try {
    const SweepResult result = execute(config);
    write_outputs(config, result);
    if (!quiet) {
      print_summary(out, result);
      out << "wrote " << (config.out / "results.csv").string() << " (" << result.size() << " rows)\n";
    }
  } catch (const Error& e) {
    err << "swarmloc: " << e.what() << '\n';
    if (e.code() == ErrorCode::kIo) return kExitIo;
    if (e.code() == ErrorCode::kConfig) return kExitConfig;
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "swarmloc: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}

}  // namespace swarmloc::cli
