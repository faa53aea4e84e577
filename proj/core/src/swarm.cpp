#include "swarmloc/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "swarmloc/error.hpp"
#include "swarmloc/rng.hpp"

namespace swarmloc {

Swarm generate_swarm(Index count, const Eigen::Vector3d& bounds, std::uint64_t seed) {
  if (count < 4) {
    throw Error(ErrorCode::kConfig,
                "swarm needs at least 4 agents (minimum cluster size), got " + std::to_string(count));
  }
  if (!(bounds.array() > 0.0).all() || !bounds.allFinite()) {
    throw Error(ErrorCode::kConfig, "scene bounds must be positive and finite");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Swarm swarm;
  swarm.bounds = bounds;
  swarm.positions.resize(count, 3);
  for (Index i = 0; i < count; ++i) {
    for (Index d = 0; d < 3; ++d) swarm.positions(i, d) = unit(rng) * bounds(d);
  }
  return swarm;
}

double true_range(const Position& a, const Position& b) { return (a - b).norm(); }

Eigen::MatrixXd true_range_matrix(const Swarm& swarm) {
  const Index n = swarm.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = true_range(swarm.position(i), swarm.position(j));
    }
  }
  return d;
}

RangeMatrix::RangeMatrix(Index size)
    : values_(Eigen::MatrixXd::Zero(size, size)), observed_(Mask::Constant(size, size, false)) {
  observed_.diagonal().setConstant(true);
}

RangeMatrix RangeMatrix::from_dense(const Eigen::MatrixXd& ranges) {
  RangeMatrix out(ranges.rows());
  for (Index i = 0; i < ranges.rows(); ++i) {
    for (Index j = i + 1; j < ranges.cols(); ++j) out.set(i, j, ranges(i, j));
  }
  return out;
}

std::optional<double> RangeMatrix::at(Index i, Index j) const {
  if (!observed_(i, j)) return std::nullopt;
  return values_(i, j);
}

void RangeMatrix::set(Index i, Index j, double range) {
  if (i == j) return;
  if (!std::isfinite(range) || range < 0.0) {
    throw Error(ErrorCode::kUsage, "measured range must be finite and non-negative");
  }
  values_(i, j) = values_(j, i) = range;
  observed_(i, j) = observed_(j, i) = true;
}

void RangeMatrix::set_missing(Index i, Index j) {
  if (i == j) return;
  values_(i, j) = values_(j, i) = 0.0;
  observed_(i, j) = observed_(j, i) = false;
}

Index RangeMatrix::measured_pairs() const {
  return (observed_.count() - size()) / 2;
}

bool RangeMatrix::is_symmetric() const {
  for (Index i = 0; i < size(); ++i) {
    if (!observed_(i, i) || values_(i, i) != 0.0) return false;
    for (Index j = i + 1; j < size(); ++j) {
      if (observed_(i, j) != observed_(j, i)) return false;
      if (observed_(i, j) && values_(i, j) != values_(j, i)) return false;
    }
  }
  return true;
}

void MeasurementConfig::validate() const {
  if (!(retention_ratio >= 0.0 && retention_ratio <= 1.0)) {
    throw Error(ErrorCode::kConfig, "retention_ratio must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::kConfig, "noise_sigma must be finite and >= 0");
  }
  if (mask_mode == MaskMode::kRangeThreshold && !(range_threshold_m >= 0.0)) {
    throw Error(ErrorCode::kConfig, "range_threshold must be >= 0");
  }
}

Index retained_pair_count(Index size, double retention_ratio) {
  const Index pairs = size * (size - 1) / 2;
  // The small slack keeps e.g. 0.8 * 1225 from rounding up to 981.
  const double raw = std::ceil(retention_ratio * static_cast<double>(pairs) - 1e-9);
  return std::clamp<Index>(static_cast<Index>(raw), 0, pairs);
}

RangeMatrix observe_ranges(const Swarm& swarm, const MeasurementConfig& config) {
  config.validate();
  const Index n = swarm.size();
  const Eigen::MatrixXd truth = true_range_matrix(swarm);

  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }

  Rng rng(config.seed);
  std::vector<std::pair<Index, Index>> kept;
  if (config.mask_mode == MaskMode::kRandom) {
    const auto keep = static_cast<std::size_t>(retained_pair_count(n, config.retention_ratio));
    // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
    for (std::size_t s = 0; s < keep; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, pairs.size() - 1);
      std::swap(pairs[s], pairs[pick(rng)]);
    }
    kept.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(kept.begin(), kept.end());
  } else {
    for (const auto& [i, j] : pairs) {
      if (truth(i, j) <= config.range_threshold_m) kept.emplace_back(i, j);
    }
  }

  RangeMatrix out(n);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& [i, j] : kept) {
    double r = truth(i, j);
    if (config.noise_sigma > 0.0) r = std::max(0.0, r + config.noise_sigma * noise(rng));
    out.set(i, j, r);
  }
  return out;
}

}  // namespace swarmloc
