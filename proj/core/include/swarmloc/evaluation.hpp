#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/merging.hpp"
#include "swarmloc/otfs.hpp"
#include "swarmloc/pipeline.hpp"
#include "swarmloc/swarm.hpp"

namespace swarmloc {

enum class Method { kProposed, kProposedFix, kMdsMap, kMdsMapP };

std::string_view method_name(Method method);
/// Throws Error(kConfig) for an unknown name.
Method parse_method(std::string_view name);

using Anchors = std::array<Index, 4>;

/// Largest-volume tetrahedron among 50 random quadruples of distinct agents.
Anchors choose_anchors(const Swarm& truth, std::uint64_t seed);

/// Rigid (or, with allow_scale, similarity) fit of the estimated anchors onto
/// the true anchors, applied to every estimate. The estimate's mirror image
/// is tried as well since ranges fix a map only up to reflection. Throws
/// Error(kDegenerateAlignment) for coplanar anchors.
Coords align_to_truth(const Coords& estimate, const Swarm& truth, const Anchors& anchors, bool allow_scale = false);

/// sqrt(mean_i ||p_i - p_hat_i||^2).
double rmse(const Coords& aligned, const Swarm& truth);

struct SweepRow {
  std::string method;
  std::string param_name;
  double param_value = 0.0;
  std::uint64_t seed = 0;
  /// Absent for failed runs.
  std::optional<double> rmse_m;
  std::optional<double> ber;
  std::optional<double> runtime_s;
  /// "ok" or the error tag of the failure.
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  /// Stable order: param_name, param_value, method, seed.
  void sort();
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t ok = 0;
  std::size_t failed = 0;
};

/// Mean and standard deviation of rmse_m over successful rows matching
/// (method, param_value).
Aggregate aggregate_rmse(const SweepResult& result, std::string_view method, double param_value);
Aggregate aggregate_ber(const SweepResult& result, std::string_view method, double param_value);

struct ExperimentConfig {
  Eigen::Vector3d bounds{1000.0, 1000.0, 1000.0};
  /// retention_ratio and seed are overwritten per run.
  MeasurementConfig measurement;
  PipelineConfig pipeline;
  Index k_fixed = 6;
  Index patch_hops = 1;
  /// 0 = hardware concurrency, further capped by SWARMLOC_THREADS.
  unsigned threads = 0;
  /// Fill runtime_s. Off by default so repeated runs are byte-identical.
  bool record_runtime = false;
};

/// Coordinates produced by `method`, or the error that stopped it.
Coords run_method(Method method, const RangeMatrix& ranges, const ExperimentConfig& config);

/// One swarm per trial (shared across ratios), one mask per (trial, ratio),
/// one anchor set per trial shared across methods.
SweepResult sweep_retention(std::span<const Method> methods, std::span<const double> ratios, Index swarm_size,
                            Index trials, std::uint64_t base_seed, const ExperimentConfig& config);

/// Swarm-size axis; rows carry param_name "swarm_size@retention=<r>".
SweepResult sweep_swarm_size(std::span<const Method> methods, std::span<const Index> sizes,
                             std::span<const double> ratios, Index trials, std::uint64_t base_seed,
                             const ExperimentConfig& config);

struct IsacConfig {
  Index swarm_size = 20;
  /// Cube edge; keeps every link inside the guard's delay reach.
  double bounds = 40.0;
  otfs::OtfsConfig otfs;
  PipelineConfig pipeline;
  unsigned threads = 0;
  bool record_runtime = false;
};

/// Per (ratio, trial): a fresh swarm ranged over OTFS links, localized by the
/// proposed pipeline. Two rows each: "proposed" (localization RMSE, mean BER)
/// and "otfs-ranging" (ranging RMSE, mean BER).
SweepResult sweep_isac(std::span<const double> power_ratios_db, Index trials, std::uint64_t base_seed,
                       const IsacConfig& config);

/// min(requested or hardware concurrency, SWARMLOC_THREADS), at least 1.
unsigned effective_threads(unsigned requested);

}  // namespace swarmloc
