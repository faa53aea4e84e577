#pragma once

#include <vector>

#include "swarmloc/clustering.hpp"
#include "swarmloc/localization.hpp"
#include "swarmloc/merging.hpp"

namespace swarmloc {

struct PipelineConfig {
  ClusteringConfig clustering;
  CompletionConfig completion;
  /// Clusters found by eigengap selection are merged until each has at least
  /// this multiple of the completion model's free parameters in measured
  /// pairs. 0 disables; ignored when the cluster count is fixed.
  double completion_margin = 1.2;
};

struct PipelineResult {
  GlobalMap map;
  ClusteringResult clustering;
  MergePlan plan;
  std::vector<LocalMap> local_maps;
};

/// Spectral clustering, public-node augmentation, per-cluster completion and
/// MDS, then Procrustes fusion from the largest cluster outward.
PipelineResult localize_swarm(const RangeMatrix& ranges, const PipelineConfig& config);

}  // namespace swarmloc
