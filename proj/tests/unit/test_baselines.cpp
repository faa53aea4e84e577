#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "swarmloc/baselines.hpp"
#include "swarmloc/error.hpp"
#include "swarmloc/evaluation.hpp"
#include "swarmloc/pipeline.hpp"

using namespace swarmloc;

namespace {

// Independent Floyd-Warshall over the measured graph.
Eigen::MatrixXd floyd_warshall(const RangeMatrix& r) {
  const Index n = r.size();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (r.measured(i, j)) d(i, j) = r.value(i, j);
    }
  }
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    }
  }
  return d;
}

RangeMatrix sparse_ranges(const Swarm& s, double ratio, std::uint64_t seed) {
  MeasurementConfig mc;
  mc.retention_ratio = ratio;
  mc.seed = seed;
  return observe_ranges(s, mc);
}

}  // namespace

TEST_CASE("shortest paths on a fully connected graph are the input") {
  const Swarm s = generate_swarm(12, Eigen::Vector3d(100, 100, 100), 1);
  const Eigen::MatrixXd d = true_range_matrix(s);
  CHECK(testing::max_abs_diff(shortest_path_complete(RangeMatrix::from_dense(d)), d) <= 1e-12);
}

TEST_CASE("shortest path along a chain") {
  RangeMatrix r(3);
  r.set(0, 1, 3.0);
  r.set(1, 2, 4.0);
  const Eigen::MatrixXd d = shortest_path_complete(r);
  CHECK(d(0, 2) == 7.0);
  CHECK(d(2, 0) == 7.0);
}

TEST_CASE("shortest paths match Floyd-Warshall and satisfy the triangle inequality") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Swarm s = generate_swarm(25, Eigen::Vector3d(100, 100, 100), seed);
    const RangeMatrix r = sparse_ranges(s, 0.3, seed);
    const Eigen::MatrixXd oracle = floyd_warshall(r);
    if (!std::isfinite(oracle.maxCoeff())) {
      CHECK_THROWS_AS(shortest_path_complete(r), Error);
      continue;
    }
    const Eigen::MatrixXd d = shortest_path_complete(r);
    CHECK(testing::max_abs_diff(d, oracle) <= 1e-9);
    for (Index i = 0; i < 25; ++i) {
      for (Index j = 0; j < 25; ++j) {
        if (r.measured(i, j)) CHECK(d(i, j) <= r.value(i, j));
        for (Index k = 0; k < 25; ++k) CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-9);
      }
    }
  }
}

TEST_CASE("MDS-MAP is exact on full noiseless ranges") {
  const Swarm s = generate_swarm(30, Eigen::Vector3d(1000, 1000, 1000), 4);
  const GlobalMap g = mds_map(RangeMatrix::from_dense(true_range_matrix(s)));
  CHECK(testing::max_abs_diff(testing::brute_distances(g.coords), true_range_matrix(s)) <= 1e-7);
}

TEST_CASE("MDS-MAP rejects a disconnected graph") {
  RangeMatrix r(6);
  r.set(0, 1, 1.0);
  r.set(1, 2, 1.0);
  r.set(3, 4, 1.0);
  r.set(4, 5, 1.0);
  CHECK_THROWS_AS(mds_map(r), Error);
  try {
    (void)mds_map(r);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDisconnected);
  }
}

TEST_CASE("MDS-MAP(P) degenerates to MDS-MAP under full connectivity") {
  const Swarm s = generate_swarm(20, Eigen::Vector3d(1000, 1000, 1000), 6);
  const RangeMatrix r = RangeMatrix::from_dense(true_range_matrix(s));
  const GlobalMap p = mds_map_p(r, 1);
  const GlobalMap m = mds_map(r);
  CHECK(testing::max_abs_diff(testing::brute_distances(p.coords), testing::brute_distances(m.coords)) <= 1e-6);
  CHECK_THROWS_AS(mds_map_p(r, 0), Error);
}

TEST_CASE("MDS-MAP(P) with wide patches matches MDS-MAP") {
  const Swarm s = generate_swarm(30, Eigen::Vector3d(1000, 1000, 1000), 2);
  const RangeMatrix r = sparse_ranges(s, 0.7, 2);
  const GlobalMap p = mds_map_p(r, 30);
  const GlobalMap m = mds_map(r);
  CHECK(testing::max_abs_diff(testing::brute_distances(p.coords), testing::brute_distances(m.coords)) <= 1e-6);
}

TEST_CASE("baselines cover every agent and are deterministic") {
  const Swarm s = generate_swarm(30, Eigen::Vector3d(1000, 1000, 1000), 8);
  const RangeMatrix r = sparse_ranges(s, 0.7, 8);
  CHECK(mds_map(r).coords == mds_map(r).coords);
  CHECK(mds_map_p(r).coords == mds_map_p(r).coords);
  CHECK(mds_map_p(r).coords.rows() == 30);
  PipelineConfig pc;
  pc.clustering.seed = pc.completion.seed = 3;
  const GlobalMap a = proposed_fix(r, 3, pc);
  CHECK(a.coords.rows() == 30);
  CHECK(a.coords == proposed_fix(r, 3, pc).coords);
}

TEST_CASE("proposed-Fix with one cluster is plain completion plus MDS") {
  const Swarm s = generate_swarm(16, Eigen::Vector3d(1000, 1000, 1000), 3);
  const RangeMatrix r = sparse_ranges(s, 0.85, 3);
  PipelineConfig pc;
  pc.clustering.seed = pc.completion.seed = 5;
  const GlobalMap g = proposed_fix(r, 1, pc);
  Cluster all(16);
  for (Index i = 0; i < 16; ++i) all[static_cast<std::size_t>(i)] = i;
  const LocalMap lm = localize_cluster(all, r, pc.completion);
  CHECK(testing::max_abs_diff(testing::brute_distances(g.coords), testing::brute_distances(lm.coords)) <= 1e-9);
}

TEST_CASE("proposed-Fix rejects k beyond the swarm") {
  const Swarm s = generate_swarm(10, Eigen::Vector3d(100, 100, 100), 3);
  const RangeMatrix r = RangeMatrix::from_dense(true_range_matrix(s));
  CHECK_THROWS_AS(proposed_fix(r, 11, PipelineConfig{}), Error);
  CHECK_THROWS_AS(proposed_fix(r, 0, PipelineConfig{}), Error);
}

TEST_CASE("at retention 0.9 MDS-MAP trails the proposed pipeline on most seeds") {
  const std::vector<Method> methods{Method::kProposed, Method::kMdsMap};
  const std::vector<double> ratio{0.9};
  ExperimentConfig cfg;
  const SweepResult res = sweep_retention(methods, ratio, 50, 20, 31, cfg);
  int wins = 0;
  for (const SweepRow& a : res.rows) {
    if (a.method != "mds-map") continue;
    for (const SweepRow& b : res.rows) {
      if (b.method == "proposed" && b.seed == a.seed && a.rmse_m && b.rmse_m && *a.rmse_m > *b.rmse_m && *a.rmse_m > 0) {
        ++wins;
      }
    }
  }
  CHECK(wins >= 16);
}
