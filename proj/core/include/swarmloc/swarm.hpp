#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Core>

namespace swarmloc {

using Index = Eigen::Index;
using Position = Eigen::Vector3d;
/// One agent per row.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Ground-truth snapshot of L agents inside an axis-aligned box [0, bounds].
struct Swarm {
  Coords positions;
  Eigen::Vector3d bounds = Eigen::Vector3d::Constant(1000.0);

  Index size() const { return positions.rows(); }
  Position position(Index i) const { return positions.row(i).transpose(); }
};

/// Uniform i.i.d. placement; deterministic per seed. Throws Error(kConfig)
/// for fewer than four agents or non-positive bounds.
Swarm generate_swarm(Index count, const Eigen::Vector3d& bounds, std::uint64_t seed);

double true_range(const Position& a, const Position& b);

Eigen::MatrixXd true_range_matrix(const Swarm& swarm);

/// Pairwise ranges where every entry is either measured or missing.
/// Entries are always written symmetrically and the diagonal is a measured
/// zero, so the symmetric-state invariant holds by construction.
class RangeMatrix {
 public:
  RangeMatrix() = default;
  explicit RangeMatrix(Index size);

  /// Every entry measured.
  static RangeMatrix from_dense(const Eigen::MatrixXd& ranges);

  Index size() const { return values_.rows(); }

  bool measured(Index i, Index j) const { return observed_(i, j); }
  std::optional<double> at(Index i, Index j) const;
  /// Value of a measured entry; unspecified for missing ones.
  double value(Index i, Index j) const { return values_(i, j); }

  void set(Index i, Index j, double range);
  void set_missing(Index i, Index j);

  /// Measured unordered off-diagonal pairs.
  Index measured_pairs() const;
  bool is_symmetric() const;

  const Eigen::MatrixXd& values() const { return values_; }
  const Mask& observed() const { return observed_; }

 private:
  Eigen::MatrixXd values_;
  Mask observed_;
};

enum class MaskMode { kRandom, kRangeThreshold };

struct MeasurementConfig {
  double retention_ratio = 1.0;
  MaskMode mask_mode = MaskMode::kRandom;
  /// Only used in kRangeThreshold mode.
  double range_threshold_m = std::numeric_limits<double>::infinity();
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Number of unordered pairs kept by random masking, ceil(ratio * L(L-1)/2).
Index retained_pair_count(Index size, double retention_ratio);

RangeMatrix observe_ranges(const Swarm& swarm, const MeasurementConfig& config);

}  // namespace swarmloc
