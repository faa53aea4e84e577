#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "swarmloc/clustering.hpp"
#include "swarmloc/error.hpp"
#include "swarmloc/linalg.hpp"

using namespace swarmloc;

namespace {

Eigen::VectorXd eigenvalues_of(const Eigen::MatrixXd& m) { return symmetric_eigen(m).values; }

// Random block-diagonal weights: `blocks` dense blocks, zero across blocks.
Eigen::MatrixXd block_weights(const std::vector<Index>& sizes, std::uint64_t seed) {
  const Index n = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Index start = 0;
  for (Index s : sizes) {
    for (Index i = start; i < start + s; ++i) {
      for (Index j = i + 1; j < start + s; ++j) w(i, j) = w(j, i) = u(rng);
    }
    start += s;
  }
  return w;
}

// Connected components by depth-first search on nonzero weights.
Index count_components(const Eigen::MatrixXd& w) {
  const Index n = w.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  Index comps = 0;
  for (Index s = 0; s < n; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    ++comps;
    std::vector<Index> stack{s};
    seen[static_cast<std::size_t>(s)] = true;
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (Index u = 0; u < n; ++u) {
        if (w(v, u) != 0.0 && !seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = true;
          stack.push_back(u);
        }
      }
    }
  }
  return comps;
}

Index zero_multiplicity(const Eigen::VectorXd& ev, double tol) {
  return static_cast<Index>((ev.array().abs() <= tol).count());
}

RangeMatrix chain_ranges(const std::vector<double>& xs) {
  const auto n = static_cast<Index>(xs.size());
  RangeMatrix r(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) r.set(i, j, std::abs(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)]));
  }
  return r;
}

}  // namespace

TEST_CASE("similarity kernel values") {
  RangeMatrix r(3);
  r.set(0, 1, 2.0);
  r.set(1, 2, 0.0);
  const SimilarityMatrix w = similarity_matrix(r, 2.0);
  CHECK(w.weights(0, 2) == 0.0);
  CHECK(w.weights(1, 2) == 1.0);
  CHECK(w.weights(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(w.weights(0, 0) == 0.0);
}

TEST_CASE("similarity uses the median range by default") {
  RangeMatrix r(4);
  r.set(0, 1, 1.0);
  r.set(1, 2, 3.0);
  r.set(2, 3, 5.0);
  CHECK(similarity_matrix(r).sigma == doctest::Approx(3.0));
}

TEST_CASE("similarity is symmetric, bounded and decreasing in range") {
  const Swarm s = generate_swarm(25, Eigen::Vector3d(100, 100, 100), 8);
  MeasurementConfig mc;
  mc.retention_ratio = 0.7;
  mc.seed = 2;
  const RangeMatrix r = observe_ranges(s, mc);
  const SimilarityMatrix w = similarity_matrix(r);
  CHECK(testing::max_abs_diff(w.weights, w.weights.transpose()) == 0.0);
  CHECK(w.weights.minCoeff() >= 0.0);
  CHECK(w.weights.maxCoeff() <= 1.0);
  for (Index i = 0; i < 25; ++i) {
    for (Index j = 0; j < 25; ++j) {
      for (Index a = 0; a < 25; ++a) {
        if (i == j || i == a || !r.measured(i, j) || !r.measured(i, a)) continue;
        if (r.value(i, j) < r.value(i, a)) CHECK(w.weights(i, j) >= w.weights(i, a));
      }
    }
  }
}

TEST_CASE("similarity rejects a graph with no measured pair") {
  CHECK_THROWS_AS(similarity_matrix(RangeMatrix(5)), Error);
}

TEST_CASE("normalized Laplacian spectra of small graphs") {
  Eigen::MatrixXd two_pairs = Eigen::MatrixXd::Zero(4, 4);
  two_pairs(0, 1) = two_pairs(1, 0) = 1.0;
  two_pairs(2, 3) = two_pairs(3, 2) = 1.0;
  const Eigen::VectorXd ev = eigenvalues_of(normalized_laplacian(two_pairs));
  CHECK(ev(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev(2) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ev(3) == doctest::Approx(2.0).epsilon(1e-12));

  Eigen::MatrixXd edge = Eigen::MatrixXd::Zero(2, 2);
  edge(0, 1) = edge(1, 0) = 0.3;
  const Eigen::VectorXd e2 = eigenvalues_of(normalized_laplacian(edge));
  CHECK(std::abs(e2(0)) <= 1e-12);
  CHECK(e2(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("zero-eigenvalue multiplicity equals the component count") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::uniform_int_distribution<Index> size(2, 7);
    std::uniform_int_distribution<int> blocks(1, 5);
    std::vector<Index> sizes(static_cast<std::size_t>(blocks(rng)));
    for (Index& s : sizes) s = size(rng);
    const Eigen::MatrixXd w = block_weights(sizes, seed);
    const Eigen::MatrixXd lap = normalized_laplacian(w);
    const Eigen::VectorXd ev = eigenvalues_of(lap);
    CHECK(zero_multiplicity(ev, 1e-9) == count_components(w));
    // Symmetric positive semidefinite with spectrum in [0, 2].
    CHECK(testing::max_abs_diff(lap, lap.transpose()) <= 1e-12);
    CHECK(ev.minCoeff() >= -1e-9);
    CHECK(ev.maxCoeff() <= 2.0 + 1e-9);
    const std::vector<double> asc(ev.data(), ev.data() + ev.size());
    if (sizes.size() >= 2) {
      CHECK(choose_k(asc, static_cast<Index>(asc.size()) - 1) == static_cast<Index>(sizes.size()));
    }
  }
}

TEST_CASE("isolated nodes get a zero Laplacian row") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 1) = w(1, 0) = 1.0;
  const Eigen::MatrixXd lap = normalized_laplacian(w);
  CHECK(lap.row(2).isZero());
  CHECK(lap.col(2).isZero());
}

TEST_CASE("spectral_embed with k = L is an orthonormal basis") {
  const Eigen::MatrixXd lap = normalized_laplacian(block_weights({4, 3}, 5));
  const Eigen::MatrixXd u = spectral_embed(lap, 7);
  CHECK(testing::max_abs_diff(u.transpose() * u, Eigen::MatrixXd::Identity(7, 7)) <= 1e-10);
  CHECK(spectral_embed(lap, 3) == spectral_embed(lap, 3));
}

TEST_CASE("block indicator structure of the embedding") {
  const std::vector<Index> sizes{4, 5, 3};
  const Eigen::MatrixXd u = spectral_embed(normalized_laplacian(block_weights(sizes, 3)), 3);
  Eigen::MatrixXd rows = u;
  for (Index i = 0; i < rows.rows(); ++i) rows.row(i).normalize();
  std::vector<Eigen::RowVectorXd> reps;
  Index start = 0;
  for (Index s : sizes) {
    for (Index i = start + 1; i < start + s; ++i) CHECK((rows.row(i) - rows.row(start)).norm() <= 1e-8);
    reps.push_back(rows.row(start));
    start += s;
  }
  CHECK((reps[0] - reps[1]).norm() > 0.5);
  CHECK((reps[0] - reps[2]).norm() > 0.5);
  CHECK((reps[1] - reps[2]).norm() > 0.5);
}

TEST_CASE("choose_k picks the largest gap") {
  const std::vector<double> ev{0, 0, 0, 0.9, 1.0, 1.1};
  CHECK(choose_k(ev, 5) == 3);
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5, 0.5};
  CHECK(choose_k(flat, 4) == 2);
}

TEST_CASE("choose_k is scale invariant") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ev(12);
    for (double& x : ev) x = u(rng);
    std::sort(ev.begin(), ev.end());
    std::vector<double> scaled = ev;
    for (double& x : scaled) x *= 7.5;
    CHECK(choose_k(ev, 10) == choose_k(scaled, 10));
  }
}

TEST_CASE("kmeans separates two far groups exactly") {
  Eigen::MatrixXd pts(6, 2);
  pts << 1.0, 0.01, 0.99, 0.0, 1.0, -0.01, 0.0, 1.0, 0.01, 0.99, -0.01, 1.0;
  const ClusterSet cs = kmeans_assign(pts, 2, 3);
  // Oracle: enumerate all 2-partitions and take the lowest inertia.
  double best = 1e300;
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < (1u << 6) - 1; ++mask) {
    double inertia = 0.0;
    for (int side = 0; side < 2; ++side) {
      Eigen::RowVector2d c = Eigen::RowVector2d::Zero();
      int n = 0;
      for (int i = 0; i < 6; ++i) {
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
          Eigen::RowVector2d p = pts.row(i).normalized();
          c += p;
          ++n;
        }
      }
      c /= n;
      for (int i = 0; i < 6; ++i) {
        if (((mask >> i) & 1u) == static_cast<unsigned>(side)) inertia += (Eigen::RowVector2d(pts.row(i).normalized()) - c).squaredNorm();
      }
    }
    if (inertia < best) {
      best = inertia;
      best_mask = mask;
    }
  }
  Cluster oracle_a;
  Cluster oracle_b;
  for (Index i = 0; i < 6; ++i) (((best_mask >> i) & 1u) ? oracle_a : oracle_b).push_back(i);
  std::vector<Cluster> oracle{oracle_a, oracle_b};
  std::sort(oracle.begin(), oracle.end());
  REQUIRE(cs.count() == 2);
  CHECK(cs.clusters == oracle);
}

TEST_CASE("kmeans with k = L gives singletons; duplicates stay together") {
  Eigen::MatrixXd pts(4, 2);
  pts << 1, 0, 0, 1, -1, 0, 0, -1;
  const ClusterSet singles = kmeans_assign(pts, 4, 1);
  CHECK(singles.count() == 4);
  for (const Cluster& c : singles.clusters) CHECK(c.size() == 1);

  Eigen::MatrixXd dup(5, 2);
  dup << 1, 0, 1, 0, 0, 1, 0, 1, 0.7, 0.7;
  const ClusterSet cs = kmeans_assign(dup, 2, 9);
  for (const Cluster& c : cs.clusters) {
    const bool has0 = std::find(c.begin(), c.end(), 0) != c.end();
    const bool has1 = std::find(c.begin(), c.end(), 1) != c.end();
    const bool has2 = std::find(c.begin(), c.end(), 2) != c.end();
    const bool has3 = std::find(c.begin(), c.end(), 3) != c.end();
    CHECK(has0 == has1);
    CHECK(has2 == has3);
  }
}

TEST_CASE("complement_undersized leaves large clusters alone") {
  const RangeMatrix r = chain_ranges({0, 1, 2, 3, 10, 11, 12, 13});
  ClusterSet in;
  in.clusters = {{0, 1, 2, 3}, {4, 5, 6, 7}};
  const ClusterSet out = complement_undersized(in, r, 4);
  CHECK(out.clusters == in.clusters);
}

TEST_CASE("complement_undersized merges a pair into its neighbour") {
  const RangeMatrix r = chain_ranges({0, 1, 5, 6, 7, 8, 9});
  ClusterSet in;
  in.clusters = {{0, 1}, {2, 3, 4, 5, 6}};
  const ClusterSet out = complement_undersized(in, r, 4);
  REQUIRE(out.count() == 1);
  CHECK(out.clusters[0] == Cluster{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("three singletons terminate within two merges") {
  const RangeMatrix r = chain_ranges({0, 1, 2});
  ClusterSet in;
  in.clusters = {{0}, {1}, {2}};
  const ClusterSet out = complement_undersized(in, r, 2);
  CHECK(out.count() >= 1);
  CHECK(in.count() - out.count() <= 2);
  for (const Cluster& c : out.clusters) CHECK(c.size() >= 2);
}

TEST_CASE("complement_undersized output is a partition meeting the floor") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Swarm s = generate_swarm(30, Eigen::Vector3d(100, 100, 100), seed);
    MeasurementConfig mc;
    mc.retention_ratio = 0.6;
    mc.seed = seed;
    const RangeMatrix r = observe_ranges(s, mc);
    ClusterSet in;
    for (Index i = 0; i < 30; ++i) in.clusters.push_back({i});
    const Index b = 1 + static_cast<Index>(seed % 6);
    const ClusterSet out = complement_undersized(in, r, b);
    CHECK(out.is_partition_of(30));
    CHECK(out.agent_count() == 30);
    for (const Cluster& c : out.clusters) CHECK(static_cast<Index>(c.size()) >= std::min<Index>(b, 30));
  }
}

TEST_CASE("completion degrees of freedom") {
  // r*m - r(r-1)/2 for a symmetric rank-r matrix.
  CHECK(symmetric_rank_dof(10, 5) == 40);
  CHECK(symmetric_rank_dof(18, 5) == 80);
  const RangeMatrix r = chain_ranges({0, 1, 2, 3});
  CHECK(observed_pairs({0, 1, 2, 3}, r) == 6);
  CHECK(observed_pairs({0, 2}, r) == 1);
}

TEST_CASE("merge_underdetermined merges sparse clusters and is a no-op at margin 0") {
  const Swarm s = generate_swarm(40, Eigen::Vector3d(100, 100, 100), 6);
  MeasurementConfig mc;
  mc.retention_ratio = 0.5;
  mc.seed = 6;
  const RangeMatrix r = observe_ranges(s, mc);
  ClusterSet in;
  for (Index c = 0; c < 5; ++c) {
    Cluster cl;
    for (Index i = c * 8; i < c * 8 + 8; ++i) cl.push_back(i);
    in.clusters.push_back(cl);
  }
  CHECK(merge_underdetermined(in, r, 5, 0.0).clusters == in.clusters);
  const ClusterSet out = merge_underdetermined(in, r, 5, 1.2);
  CHECK(out.is_partition_of(40));
  if (out.count() > 1) {
    for (const Cluster& c : out.clusters) {
      CHECK(static_cast<double>(observed_pairs(c, r)) >=
            1.2 * static_cast<double>(symmetric_rank_dof(static_cast<Index>(c.size()), 5)));
    }
  }
}

TEST_CASE("spectral clustering recovers well separated groups") {
  // Three tight groups far apart, fully measured.
  Eigen::MatrixXd pts(12, 3);
  Rng rng(2);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (Index i = 0; i < 12; ++i) {
    const double cx = 100.0 * static_cast<double>(i / 4);
    pts.row(i) << cx + jitter(rng), jitter(rng), jitter(rng);
  }
  const RangeMatrix r = RangeMatrix::from_dense(testing::brute_distances(pts));
  ClusteringConfig cfg;
  cfg.sigma = 5.0;
  cfg.seed = 1;
  const ClusteringResult res = spectral_cluster(r, cfg);
  CHECK(res.chosen_k == 3);
  REQUIRE(res.clusters.count() == 3);
  CHECK(res.clusters.clusters[0] == Cluster{0, 1, 2, 3});
  CHECK(res.clusters.clusters[1] == Cluster{4, 5, 6, 7});
  CHECK(res.clusters.clusters[2] == Cluster{8, 9, 10, 11});
}

TEST_CASE("spectral clustering is deterministic") {
  const Swarm s = generate_swarm(40, Eigen::Vector3d(1000, 1000, 1000), 12);
  MeasurementConfig mc;
  mc.retention_ratio = 0.7;
  mc.seed = 4;
  const RangeMatrix r = observe_ranges(s, mc);
  ClusteringConfig cfg;
  cfg.seed = 77;
  CHECK(spectral_cluster(r, cfg).clusters.clusters == spectral_cluster(r, cfg).clusters.clusters);
  cfg.k_fixed = 4;
  const ClusteringResult fixed = spectral_cluster(r, cfg);
  CHECK(fixed.clusters.is_partition_of(40));
}
