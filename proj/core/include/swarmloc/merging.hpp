#pragma once

#include <vector>

#include <Eigen/Core>

#include "swarmloc/clustering.hpp"
#include "swarmloc/localization.hpp"
#include "swarmloc/swarm.hpp"

namespace swarmloc {

/// x -> R x + t with R a proper rotation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Position apply(const Position& p) const { return rotation * p + translation; }
  Coords apply(const Coords& points) const;
};

/// Least-squares rotation and translation taking `source` rows onto `target`
/// rows, with the determinant correction that keeps R in SO(3). Throws
/// Error(kDegenerateAlignment) for fewer than three points or collinear /
/// coincident sets.
RigidTransform procrustes_fit(const Coords& source, const Coords& target);

/// Sum of squared residuals ||R s_i + t - t_i||^2.
double alignment_cost(const RigidTransform& transform, const Coords& source, const Coords& target);

/// Fuses `incoming` into the frame of `reference`: incoming-only nodes are
/// mapped through `transform`, reference-only nodes are kept, shared nodes
/// land on the midpoint of the two estimates.
LocalMap merge_pair(const LocalMap& reference, const LocalMap& incoming, const RigidTransform& transform);

struct MergeStep {
  /// Cluster merged at this step.
  Index cluster = -1;
  /// a_p* belong to `cluster`, a_q* to the already merged set.
  PublicNodes nodes;
  /// Merged cluster owning a_q1; its local map carries a_p1 and a_p2.
  Index anchor_owner = -1;
};

/// Merge order and public nodes, fixed from ranges alone so that every
/// local map can be computed on its augmented member set up front.
struct MergePlan {
  Index reference = -1;
  std::vector<MergeStep> steps;
  /// Cluster members plus the public nodes borrowed from neighbours, sorted.
  std::vector<Cluster> augmented;
};

/// Reference = largest cluster (lowest id on ties). Each step takes the
/// unmerged cluster nearest to the merged set by single linkage (lowest id on
/// ties) that admits public nodes. Throws PartialMapError naming the clusters
/// that cannot be attached.
MergePlan plan_merges(const ClusterSet& clusters, const RangeMatrix& ranges);

struct GlobalMap {
  /// One row per agent, in the reference cluster's frame.
  Coords coords;
  /// Cluster ids in merge order, reference first.
  std::vector<Index> merged;
  Index frame = -1;
};

/// Merges local maps built on `plan.augmented` (same order). Local maps are
/// reflected where needed, judged on the public nodes alone.
GlobalMap merge_all(const std::vector<LocalMap>& local_maps, const MergePlan& plan, Index agent_count);

/// As above, but reflections are judged on the measured ranges between the
/// incoming cluster and the merged map.
GlobalMap merge_all(const std::vector<LocalMap>& local_maps, const MergePlan& plan, const RangeMatrix& ranges);

/// Re-derives the plan from (ranges, clusters) and merges.
GlobalMap merge_all(const std::vector<LocalMap>& local_maps, const RangeMatrix& ranges,
                    const ClusterSet& clusters);

}  // namespace swarmloc
