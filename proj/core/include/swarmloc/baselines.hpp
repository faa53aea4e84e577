#pragma once

#include <Eigen/Core>

#include "swarmloc/merging.hpp"
#include "swarmloc/pipeline.hpp"
#include "swarmloc/swarm.hpp"

namespace swarmloc {

/// All-pairs shortest paths over the measured-edge graph (edge weight =
/// measured range). Throws Error(kDisconnected) if the graph is not connected.
Eigen::MatrixXd shortest_path_complete(const RangeMatrix& ranges);

/// MDS-MAP: shortest-path completion then one classical MDS over all agents.
GlobalMap mds_map(const RangeMatrix& ranges);

/// MDS-MAP(P): one patch per agent (its <= patch_hops neighbourhood), local
/// shortest-path completion and MDS per patch, then incremental Procrustes
/// stitching from the largest patch outward. Nodes seen by several patches
/// keep the running mean of their aligned estimates.
GlobalMap mds_map_p(const RangeMatrix& ranges, Index patch_hops = 1);

/// The proposed pipeline with the cluster count pinned to `k_fixed`.
GlobalMap proposed_fix(const RangeMatrix& ranges, Index k_fixed, const PipelineConfig& config);

}  // namespace swarmloc
