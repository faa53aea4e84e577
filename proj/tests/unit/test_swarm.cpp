#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "swarmloc/error.hpp"
#include "swarmloc/rng.hpp"
#include "swarmloc/swarm.hpp"

using namespace swarmloc;

TEST_CASE("generate_swarm stays inside the scene box") {
  const Swarm s = generate_swarm(50, Eigen::Vector3d(1000, 1000, 1000), 1);
  CHECK(s.size() == 50);
  CHECK(s.positions.minCoeff() >= 0.0);
  CHECK(s.positions.maxCoeff() <= 1000.0);

  const Swarm unit = generate_swarm(4, Eigen::Vector3d(1, 1, 1), 7);
  CHECK(unit.size() == 4);
  CHECK(unit.positions.minCoeff() >= 0.0);
  CHECK(unit.positions.maxCoeff() <= 1.0);
}

TEST_CASE("generate_swarm is deterministic per seed") {
  const Eigen::Vector3d box(1000, 1000, 1000);
  CHECK(generate_swarm(30, box, 9).positions == generate_swarm(30, box, 9).positions);
  CHECK(generate_swarm(30, box, 9).positions != generate_swarm(30, box, 10).positions);
}

TEST_CASE("generate_swarm rejects bad input") {
  CHECK_THROWS_AS(generate_swarm(3, Eigen::Vector3d(1, 1, 1), 1), Error);
  CHECK_THROWS_AS(generate_swarm(10, Eigen::Vector3d(1, 0, 1), 1), Error);
}

TEST_CASE("true_range") {
  CHECK(true_range({0, 0, 0}, {0, 0, 0}) == 0.0);
  CHECK(true_range({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0).epsilon(1e-15));
  // Oracle: sqrt((4-1)^2 + (6-2)^2 + 0^2).
  CHECK(true_range({1, 2, 3}, {4, 6, 3}) == doctest::Approx(std::sqrt(9.0 + 16.0)).epsilon(1e-15));
}

TEST_CASE("full retention reproduces the true range matrix") {
  const Swarm s = generate_swarm(50, Eigen::Vector3d(1000, 1000, 1000), 3);
  MeasurementConfig mc;
  const RangeMatrix r = observe_ranges(s, mc);
  CHECK(r.measured_pairs() == 1225);
  const Eigen::MatrixXd oracle = testing::brute_distances(s.positions);
  CHECK(testing::max_abs_diff(r.values(), oracle) <= 1e-12);
}

TEST_CASE("retention 0.8 keeps ceil(0.8 * 1225) pairs") {
  const Swarm s = generate_swarm(50, Eigen::Vector3d(1000, 1000, 1000), 3);
  MeasurementConfig mc;
  mc.retention_ratio = 0.8;
  mc.seed = 5;
  CHECK(observe_ranges(s, mc).measured_pairs() == 980);
  CHECK(retained_pair_count(50, 0.8) == 980);
}

TEST_CASE("retention 0 keeps only the diagonal") {
  const Swarm s = generate_swarm(12, Eigen::Vector3d(10, 10, 10), 3);
  MeasurementConfig mc;
  mc.retention_ratio = 0.0;
  const RangeMatrix r = observe_ranges(s, mc);
  CHECK(r.measured_pairs() == 0);
  for (Index i = 0; i < 12; ++i) CHECK(r.measured(i, i));
}

TEST_CASE("observed ranges are symmetric with a zero diagonal") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Swarm s = generate_swarm(15, Eigen::Vector3d(100, 100, 100), seed);
    MeasurementConfig mc;
    mc.retention_ratio = 0.1 * static_cast<double>(seed % 10);
    mc.noise_sigma = (seed % 3) * 0.5;
    mc.seed = seed;
    const RangeMatrix r = observe_ranges(s, mc);
    CHECK(r.is_symmetric());
    for (Index i = 0; i < s.size(); ++i) {
      CHECK(r.measured(i, i));
      CHECK(r.value(i, i) == 0.0);
      for (Index j = 0; j < s.size(); ++j) {
        CHECK(r.measured(i, j) == r.measured(j, i));
        if (r.measured(i, j)) CHECK(r.value(i, j) == r.value(j, i));
      }
    }
  }
}

TEST_CASE("measured pair count matches ceil(ratio * L(L-1)/2) across sizes") {
  for (Index l = 4; l <= 100; l += 8) {
    const Swarm s = generate_swarm(l, Eigen::Vector3d(1, 1, 1), static_cast<std::uint64_t>(l));
    for (double ratio : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      MeasurementConfig mc;
      mc.retention_ratio = ratio;
      mc.seed = 11;
      const auto pairs = static_cast<double>(l * (l - 1) / 2);
      CHECK(observe_ranges(s, mc).measured_pairs() == static_cast<Index>(std::ceil(ratio * pairs)));
    }
  }
}

TEST_CASE("range-threshold masking drops long links") {
  const Swarm s = generate_swarm(30, Eigen::Vector3d(100, 100, 100), 2);
  MeasurementConfig mc;
  mc.mask_mode = MaskMode::kRangeThreshold;
  mc.range_threshold_m = 60.0;
  const RangeMatrix r = observe_ranges(s, mc);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 30; ++j) {
      CHECK(r.measured(i, j) == (true_range(s.position(i), s.position(j)) <= 60.0));
    }
  }
}

TEST_CASE("noise perturbs measured values only") {
  const Swarm s = generate_swarm(20, Eigen::Vector3d(100, 100, 100), 4);
  MeasurementConfig mc;
  mc.noise_sigma = 1.0;
  mc.seed = 3;
  const RangeMatrix r = observe_ranges(s, mc);
  double sum_sq = 0.0;
  for (Index i = 0; i < 20; ++i) {
    for (Index j = i + 1; j < 20; ++j) {
      const double e = r.value(i, j) - true_range(s.position(i), s.position(j));
      sum_sq += e * e;
    }
  }
  const double sd = std::sqrt(sum_sq / 190.0);
  CHECK(sd > 0.7);
  CHECK(sd < 1.3);
}

TEST_CASE("RangeMatrix accessors") {
  RangeMatrix r(3);
  CHECK(r.measured(0, 0));
  CHECK_FALSE(r.measured(0, 1));
  CHECK_FALSE(r.at(0, 1).has_value());
  r.set(0, 1, 4.5);
  CHECK(*r.at(1, 0) == 4.5);
  CHECK(r.measured_pairs() == 1);
  r.set_missing(1, 0);
  CHECK_FALSE(r.measured(0, 1));
}

TEST_CASE("derive_seed separates key orders") {
  CHECK(derive_seed(1, {1, 2}) != derive_seed(1, {2, 1}));
  CHECK(derive_seed(1, {1}) == derive_seed(1, {1}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(42, {k}));
  CHECK(seen.size() == 1000);
}
