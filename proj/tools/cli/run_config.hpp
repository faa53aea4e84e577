#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swarmloc/evaluation.hpp"

namespace swarmloc::cli {

enum class Scenario { kLocate, kSweepRetention, kSweepSize, kSweepIsac };

std::string_view scenario_name(Scenario scenario);
/// Throws Error(kConfig) for an unknown name.
Scenario parse_scenario(std::string_view name);

struct RunConfig {
  Scenario scenario = Scenario::kLocate;
  std::uint64_t seed = 1;
  Index trials = 20;
  std::filesystem::path out = "out";
  std::vector<Method> methods{Method::kProposed, Method::kProposedFix, Method::kMdsMap, Method::kMdsMapP};
  unsigned threads = 0;
  /// Fill runtime_s; off keeps results.csv byte-identical across runs.
  bool timing = false;

  Index swarm_size = 50;
  Eigen::Vector3d bounds{1000.0, 1000.0, 1000.0};
  MeasurementConfig measurement;
  PipelineConfig pipeline;
  Index k_fixed = 6;
  Index patch_hops = 1;
  otfs::OtfsConfig otfs;

  std::vector<double> retention_ratios{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<Index> swarm_sizes{20, 50, 80};
  std::vector<double> size_ratios{0.8};
  std::vector<double> power_ratios_db{-20, -18, -16, -14, -12, -10, -8, -6, -4, -2, 0};
  Index isac_swarm_size = 20;
  double isac_bounds = 40.0;

  /// Throws Error(kConfig) naming the offending field.
  void validate() const;
  ExperimentConfig experiment() const;
  IsacConfig isac() const;
};

/// Strict parse: unknown keys, type mismatches and constraint violations
/// throw Error(kConfig) with the JSON key path in the message. Keys absent
/// from `doc` keep the values already in `config`.
void apply_json(RunConfig& config, const nlohmann::json& doc);

/// Reads and applies a JSON file; Error(kIo) if it cannot be read,
/// Error(kConfig) if it is not valid JSON.
void apply_json_file(RunConfig& config, const std::filesystem::path& path);

/// Full echo of the resolved configuration, accepted back by apply_json.
nlohmann::json to_json(const RunConfig& config);

}  // namespace swarmloc::cli
