#include "swarmloc/merging.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "swarmloc/error.hpp"

namespace swarmloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_spread(const Coords& centered, const char* which) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::VectorXd s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-9 * s(0)) {
    throw Error(ErrorCode::kDegenerateAlignment,
                std::string("procrustes: ") + which + " points are collinear or coincident");
  }
}

void insert_sorted(Cluster& c, Index agent) {
  const auto it = std::lower_bound(c.begin(), c.end(), agent);
  if (it == c.end() || *it != agent) c.insert(it, agent);
}

Index owner_of(const ClusterSet& clusters, Index agent) {
  for (Index c = 0; c < clusters.count(); ++c) {
    const auto& members = clusters.clusters[static_cast<std::size_t>(c)];
    if (std::binary_search(members.begin(), members.end(), agent)) return c;
  }
  return -1;
}

}  // namespace

Coords RigidTransform::apply(const Coords& points) const {
  Coords out = (points * rotation.transpose()).eval();
  out.rowwise() += translation.transpose();
  return out;
}

RigidTransform procrustes_fit(const Coords& source, const Coords& target) {
  if (source.rows() != target.rows() || source.rows() < 3) {
    throw Error(ErrorCode::kDegenerateAlignment, "procrustes needs >= 3 matched points");
  }
  const Eigen::Vector3d mu_p = source.colwise().mean().transpose();
  const Eigen::Vector3d mu_q = target.colwise().mean().transpose();
  const Coords p = source.rowwise() - mu_p.transpose();
  const Coords q = target.rowwise() - mu_q.transpose();
  require_spread(p, "source");
  require_spread(q, "target");

  const Eigen::Matrix3d cross = q.transpose() * p;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d fix(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

  RigidTransform out;
  out.rotation = u * fix.asDiagonal() * v.transpose();
  out.translation = mu_q - out.rotation * mu_p;
  return out;
}

double alignment_cost(const RigidTransform& transform, const Coords& source, const Coords& target) {
  return (transform.apply(source) - target).squaredNorm();
}

LocalMap merge_pair(const LocalMap& reference, const LocalMap& incoming, const RigidTransform& transform) {
  LocalMap out;
  out.members = reference.members;
  for (Index a : incoming.members) {
    if (!reference.contains(a)) out.members.push_back(a);
  }
  std::sort(out.members.begin(), out.members.end());
  out.coords.resize(out.size(), 3);
  for (Index row = 0; row < out.size(); ++row) {
    const Index agent = out.members[static_cast<std::size_t>(row)];
    const Index r = reference.row_of(agent);
    const Index s = incoming.row_of(agent);
    if (r >= 0 && s >= 0) {
      out.coords.row(row) =
          0.5 * (transform.apply(Position(incoming.coords.row(s).transpose())) +
                 reference.coords.row(r).transpose()).transpose();
    } else if (r >= 0) {
      out.coords.row(row) = reference.coords.row(r);
    } else {
      out.coords.row(row) = transform.apply(Position(incoming.coords.row(s).transpose())).transpose();
    }
  }
  return out;
}

MergePlan plan_merges(const ClusterSet& clusters, const RangeMatrix& ranges) {
  const Index k = clusters.count();
  if (k == 0) throw Error(ErrorCode::kUsage, "no clusters to merge");
  MergePlan plan;
  plan.augmented = clusters.clusters;

  plan.reference = 0;
  for (Index c = 1; c < k; ++c) {
    if (clusters.clusters[static_cast<std::size_t>(c)].size() >
        clusters.clusters[static_cast<std::size_t>(plan.reference)].size()) {
      plan.reference = c;
    }
  }

  Cluster merged_nodes = clusters.clusters[static_cast<std::size_t>(plan.reference)];
  std::vector<Index> pending;
  for (Index c = 0; c < k; ++c) {
    if (c != plan.reference) pending.push_back(c);
  }

  while (!pending.empty()) {
    std::vector<std::pair<double, Index>> order;
    for (Index c : pending) {
      order.emplace_back(cluster_distance(clusters.clusters[static_cast<std::size_t>(c)], merged_nodes, ranges), c);
    }
    std::sort(order.begin(), order.end());

    bool attached = false;
    for (const auto& [dist, c] : order) {
      if (dist == kInf) break;
      const Cluster& members = clusters.clusters[static_cast<std::size_t>(c)];
      PublicNodes nodes;
      try {
        nodes = select_public_nodes(members, merged_nodes, ranges);
      } catch (const Error&) {
        continue;
      }
      MergeStep step{c, nodes, owner_of(clusters, nodes.a_q1)};
      insert_sorted(plan.augmented[static_cast<std::size_t>(c)], nodes.a_q1);
      insert_sorted(plan.augmented[static_cast<std::size_t>(c)], nodes.a_q2);
      insert_sorted(plan.augmented[static_cast<std::size_t>(step.anchor_owner)], nodes.a_p1);
      insert_sorted(plan.augmented[static_cast<std::size_t>(step.anchor_owner)], nodes.a_p2);
      plan.steps.push_back(step);

      for (Index a : members) insert_sorted(merged_nodes, a);
      std::erase(pending, c);
      attached = true;
      break;
    }
    if (!attached) {
      std::string names;
      for (Index c : pending) names += (names.empty() ? "" : ", ") + std::to_string(c);
      throw PartialMapError(pending, "clusters unreachable from the reference: " + names);
    }
  }
  return plan;
}

namespace {

// Squared mismatch between measured ranges and map distances over pairs that
// join a node only in `incoming` to a node only in `global`.
std::optional<double> cross_range_cost(const LocalMap& global, const LocalMap& incoming, const RigidTransform& tf,
                                       const RangeMatrix& ranges) {
  double cost = 0.0;
  bool any = false;
  for (Index r = 0; r < incoming.size(); ++r) {
    const Index a = incoming.members[static_cast<std::size_t>(r)];
    if (global.contains(a)) continue;
    const Position pa = tf.apply(Position(incoming.coords.row(r).transpose()));
    for (Index g = 0; g < global.size(); ++g) {
      const Index b = global.members[static_cast<std::size_t>(g)];
      if (incoming.contains(b) || !ranges.measured(a, b)) continue;
      const double e = (pa - global.coords.row(g).transpose()).norm() - ranges.value(a, b);
      cost += e * e;
      any = true;
    }
  }
  return any ? std::optional<double>(cost) : std::nullopt;
}

GlobalMap merge_impl(const std::vector<LocalMap>& local_maps, const MergePlan& plan, Index agent_count,
                     const RangeMatrix* ranges) {
  if (local_maps.size() != plan.augmented.size()) {
    throw Error(ErrorCode::kUsage, "one local map per cluster required");
  }
  LocalMap global = local_maps[static_cast<std::size_t>(plan.reference)];
  GlobalMap out;
  out.frame = plan.reference;
  out.merged.push_back(plan.reference);

  for (const MergeStep& step : plan.steps) {
    const LocalMap& incoming = local_maps[static_cast<std::size_t>(step.cluster)];
    const auto anchors = step.nodes.all();
    Coords source(4, 3);
    Coords target(4, 3);
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      const Index s = incoming.row_of(anchors[a]);
      const Index t = global.row_of(anchors[a]);
      if (s < 0 || t < 0) {
        throw Error(ErrorCode::kUsage, "public node " + std::to_string(anchors[a]) +
                                           " missing from a local map; maps must follow the merge plan");
      }
      source.row(static_cast<Index>(a)) = incoming.coords.row(s);
      target.row(static_cast<Index>(a)) = global.coords.row(t);
    }
    // Each local map has its own arbitrary handedness. The four public nodes
    // often lie close to one plane, so the reflection is judged on measured
    // cross ranges when they exist and on the public-node fit otherwise.
    LocalMap reflected = incoming;
    reflected.coords.col(2) *= -1.0;
    Coords mirrored = source;
    mirrored.col(2) *= -1.0;
    const RigidTransform direct = procrustes_fit(source, target);
    const RigidTransform flipped = procrustes_fit(mirrored, target);
    std::optional<double> direct_cost;
    std::optional<double> flipped_cost;
    if (ranges != nullptr) {
      direct_cost = cross_range_cost(global, incoming, direct, *ranges);
      flipped_cost = cross_range_cost(global, reflected, flipped, *ranges);
    }
    if (!direct_cost || !flipped_cost) {
      direct_cost = alignment_cost(direct, source, target);
      flipped_cost = alignment_cost(flipped, mirrored, target);
    }
    global = *flipped_cost < *direct_cost ? merge_pair(global, reflected, flipped)
                                          : merge_pair(global, incoming, direct);
    out.merged.push_back(step.cluster);
  }

  out.coords.resize(agent_count, 3);
  for (Index agent = 0; agent < agent_count; ++agent) {
    const Index row = global.row_of(agent);
    if (row < 0) throw Error(ErrorCode::kUsage, "agent " + std::to_string(agent) + " absent from merged map");
    out.coords.row(agent) = global.coords.row(row);
  }
  return out;
}

}  // namespace

GlobalMap merge_all(const std::vector<LocalMap>& local_maps, const MergePlan& plan, Index agent_count) {
  return merge_impl(local_maps, plan, agent_count, nullptr);
}

GlobalMap merge_all(const std::vector<LocalMap>& local_maps, const MergePlan& plan, const RangeMatrix& ranges) {
  return merge_impl(local_maps, plan, ranges.size(), &ranges);
}

GlobalMap merge_all(const std::vector<LocalMap>& local_maps, const RangeMatrix& ranges,
                    const ClusterSet& clusters) {
  return merge_all(local_maps, plan_merges(clusters, ranges), ranges);
}

}  // namespace swarmloc
