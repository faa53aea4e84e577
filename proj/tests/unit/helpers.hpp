#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "swarmloc/rng.hpp"
#include "swarmloc/swarm.hpp"

namespace testing {

using namespace swarmloc;

inline Eigen::Matrix3d rotation_about(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline Eigen::Matrix3d random_rotation(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

/// Independent pairwise distance evaluation, one scalar loop per entry.
inline Eigen::MatrixXd brute_distances(const Eigen::MatrixXd& pts) {
  const Index n = pts.rows();
  Eigen::MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Index c = 0; c < pts.cols(); ++c) s += (pts(i, c) - pts(j, c)) * (pts(i, c) - pts(j, c));
      d(i, j) = std::sqrt(s);
    }
  }
  return d;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline Swarm swarm_from(const Eigen::MatrixXd& pts) {
  Swarm s;
  s.positions = pts;
  return s;
}

}  // namespace testing
