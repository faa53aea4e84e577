#include "swarmloc/baselines.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "swarmloc/error.hpp"
#include "swarmloc/localization.hpp"

namespace swarmloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense Dijkstra from every source restricted to `nodes`; returns +inf for
// unreachable pairs.
Eigen::MatrixXd all_pairs_shortest(const RangeMatrix& ranges, const Cluster& nodes) {
  const auto n = static_cast<Index>(nodes.size());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(n, n, kInf);
  std::vector<char> done(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) {
    std::fill(done.begin(), done.end(), 0);
    dist(s, s) = 0.0;
    for (Index iter = 0; iter < n; ++iter) {
      Index u = -1;
      double best = kInf;
      for (Index i = 0; i < n; ++i) {
        if (!done[static_cast<std::size_t>(i)] && dist(s, i) < best) {
          best = dist(s, i);
          u = i;
        }
      }
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      const Index gu = nodes[static_cast<std::size_t>(u)];
      for (Index v = 0; v < n; ++v) {
        const Index gv = nodes[static_cast<std::size_t>(v)];
        if (done[static_cast<std::size_t>(v)] || !ranges.measured(gu, gv)) continue;
        dist(s, v) = std::min(dist(s, v), best + ranges.value(gu, gv));
      }
    }
  }
  return dist;
}

Cluster all_agents(Index n) {
  Cluster all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  return all;
}

Cluster hop_neighbourhood(const RangeMatrix& ranges, Index center, Index hops) {
  const Index n = ranges.size();
  std::vector<Index> depth(static_cast<std::size_t>(n), -1);
  std::deque<Index> queue{center};
  depth[static_cast<std::size_t>(center)] = 0;
  Cluster out;
  while (!queue.empty()) {
    const Index u = queue.front();
    queue.pop_front();
    out.push_back(u);
    if (depth[static_cast<std::size_t>(u)] == hops) continue;
    for (Index v = 0; v < n; ++v) {
      if (v == u || depth[static_cast<std::size_t>(v)] >= 0 || !ranges.measured(u, v)) continue;
      depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
      queue.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Eigen::MatrixXd shortest_path_complete(const RangeMatrix& ranges) {
  Eigen::MatrixXd dist = all_pairs_shortest(ranges, all_agents(ranges.size()));
  if (!dist.allFinite()) {
    throw Error(ErrorCode::kDisconnected, "range graph is disconnected; shortest paths undefined");
  }
  return dist;
}

GlobalMap mds_map(const RangeMatrix& ranges) {
  GlobalMap out;
  out.coords = classical_mds(shortest_path_complete(ranges), 3).coords;
  return out;
}

GlobalMap mds_map_p(const RangeMatrix& ranges, Index patch_hops) {
  if (patch_hops < 1) throw Error(ErrorCode::kConfig, "patch_hops must be >= 1");
  const Index n = ranges.size();
  // Connectivity check doubles as the global precondition.
  (void)shortest_path_complete(ranges);

  std::vector<LocalMap> patches;
  patches.reserve(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c) {
    LocalMap patch;
    patch.members = hop_neighbourhood(ranges, c, patch_hops);
    if (patch.size() >= 2) {
      patch.coords = classical_mds(all_pairs_shortest(ranges, patch.members), 3).coords;
    } else {
      patch.coords = Coords::Zero(patch.size(), 3);
    }
    patches.push_back(std::move(patch));
  }

  Index start = 0;
  for (Index c = 1; c < n; ++c) {
    if (patches[static_cast<std::size_t>(c)].size() > patches[static_cast<std::size_t>(start)].size()) start = c;
  }

  Coords sum = Coords::Zero(n, 3);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
  auto accumulate = [&](const LocalMap& patch, const RigidTransform& tf) {
    for (Index r = 0; r < patch.size(); ++r) {
      const Index a = patch.members[static_cast<std::size_t>(r)];
      sum.row(a) += tf.apply(Position(patch.coords.row(r).transpose())).transpose();
      count(a) += 1.0;
    }
  };
  accumulate(patches[static_cast<std::size_t>(start)], RigidTransform{});

  std::vector<char> stitched(static_cast<std::size_t>(n), 0);
  stitched[static_cast<std::size_t>(start)] = 1;
  for (Index step = 1; step < n; ++step) {
    // Nearest-first: patch centre closest to the current map, then the one
    // sharing most nodes, then the lowest centre.
    Index next = -1;
    double next_dist = kInf;
    Index next_shared = 0;
    for (Index c = 0; c < n; ++c) {
      if (stitched[static_cast<std::size_t>(c)]) continue;
      const LocalMap& patch = patches[static_cast<std::size_t>(c)];
      Index shared = 0;
      for (Index a : patch.members) shared += count(a) > 0.0 ? 1 : 0;
      if (shared < 4) continue;
      double dist = count(c) > 0.0 ? 0.0 : kInf;
      if (dist > 0.0) {
        for (Index a = 0; a < n; ++a) {
          if (count(a) > 0.0 && ranges.measured(c, a)) dist = std::min(dist, ranges.value(c, a));
        }
      }
      if (dist < next_dist || (dist == next_dist && shared > next_shared)) {
        next = c;
        next_dist = dist;
        next_shared = shared;
      }
    }
    if (next < 0) {
      if ((count.array() > 0.0).all()) break;
      throw Error(ErrorCode::kStitch, "no remaining patch shares >= 4 nodes with the stitched map");
    }
    const LocalMap& patch = patches[static_cast<std::size_t>(next)];
    Coords source(next_shared, 3);
    Coords target(next_shared, 3);
    Index row = 0;
    for (Index r = 0; r < patch.size(); ++r) {
      const Index a = patch.members[static_cast<std::size_t>(r)];
      if (count(a) <= 0.0) continue;
      source.row(row) = patch.coords.row(r);
      target.row(row) = sum.row(a) / count(a);
      ++row;
    }
    // Patch handedness is arbitrary; keep whichever chirality fits better.
    Coords mirrored = source;
    mirrored.col(2) *= -1.0;
    const RigidTransform direct = procrustes_fit(source, target);
    const RigidTransform flipped = procrustes_fit(mirrored, target);
    if (alignment_cost(flipped, mirrored, target) < alignment_cost(direct, source, target)) {
      LocalMap reflected = patch;
      reflected.coords.col(2) *= -1.0;
      accumulate(reflected, flipped);
    } else {
      accumulate(patch, direct);
    }
    stitched[static_cast<std::size_t>(next)] = 1;
  }

  if (!(count.array() > 0.0).all()) {
    throw Error(ErrorCode::kStitch, "stitching left agents without coordinates");
  }
  GlobalMap out;
  out.coords = sum.array().colwise() / count.array();
  return out;
}

GlobalMap proposed_fix(const RangeMatrix& ranges, Index k_fixed, const PipelineConfig& config) {
  if (k_fixed < 1 || k_fixed > ranges.size() / 2) {
    throw Error(ErrorCode::kUsage, "k_fixed must lie in [1, floor(L/2)], got " + std::to_string(k_fixed));
  }
  PipelineConfig fixed = config;
  fixed.clustering.k_fixed = k_fixed;
  return localize_swarm(ranges, fixed).map;
}

}  // namespace swarmloc
