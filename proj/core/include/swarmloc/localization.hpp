#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/clustering.hpp"
#include "swarmloc/swarm.hpp"

namespace swarmloc {

/// Anchors shared between a cluster C_p and its neighbour C_q: two members
/// of each, chosen by their smallest measured range to the other side.
struct PublicNodes {
  Index a_p1 = -1;
  Index a_p2 = -1;
  Index a_q1 = -1;
  Index a_q2 = -1;

  std::array<Index, 4> all() const { return {a_p1, a_p2, a_q1, a_q2}; }
};

/// Throws Error(kMergeInfeasible) when either side has fewer than two
/// members with a measured link to the other side.
PublicNodes select_public_nodes(const Cluster& c_p, const Cluster& c_adj, const RangeMatrix& ranges);

/// Sub-matrix of a range matrix restricted to one cluster. `observed` is the
/// index set Omega; it never contains the diagonal.
struct ClusterMatrix {
  Cluster members;
  Eigen::MatrixXd values;
  Mask observed;

  Index size() const { return values.rows(); }
  Index observed_count() const { return observed.count(); }
};

ClusterMatrix extract_cluster_matrix(const Cluster& members, const RangeMatrix& ranges);

enum class CompletionMode {
  /// Complete the element-wise squared ranges (exactly rank <= 5 for 3D).
  kSquared,
  /// Complete raw ranges, which are only approximately low rank.
  kRaw,
};

struct CompletionConfig {
  Index rank = 5;
  /// nullopt selects lambda_factor times the mean observed magnitude.
  std::optional<double> lambda;
  double lambda_factor = 1e-3;
  int max_iterations = 500;
  /// Stop once the observed-entry RMSE moves by less than
  /// tolerance * (mean observed magnitude) between sweeps.
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
  CompletionMode mode = CompletionMode::kSquared;
  /// Independent Gaussian initializations; the lowest final objective wins.
  int restarts = 10;
  /// Fit the known zero diagonal along with the measured entries.
  bool fit_diagonal = true;
  /// Extra sweeps on the winning factors with lambda scaled by polish_factor.
  /// Removes most of the ridge bias without the instability of a small
  /// lambda from a random start. Not recorded in the objective trace.
  int polish_iterations = 200;
  double polish_factor = 1e-3;

  void validate() const;
};

struct CompletionTrace {
  Eigen::MatrixXd completed;
  /// Regularized objective at initialization and after every ALS sweep.
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

/// Regularized low-rank factorization D ~ U V^T over the entries in
/// `observed`, fitted by alternating ridge solves. The returned matrix is
/// symmetrized, has a zero diagonal, no negatives, and carries the observed
/// entries unchanged.
CompletionTrace als_factorize(const Eigen::MatrixXd& values, const Mask& observed,
                              const CompletionConfig& config);

inline Eigen::MatrixXd als_complete(const Eigen::MatrixXd& values, const Mask& observed,
                                    const CompletionConfig& config) {
  return als_factorize(values, observed, config).completed;
}

struct MdsResult {
  /// m x dim.
  Eigen::MatrixXd coords;
  /// Eigenvalues of the double-centered Gram matrix, descending.
  Eigen::VectorXd eigenvalues;
  /// Fewer than `dim` positive eigenvalues; missing axes are zero-filled.
  bool degenerate = false;
};

/// Classical MDS: B = -1/2 J D^2 J, coordinates from the `dim` largest
/// eigenpairs scaled by sqrt(lambda).
MdsResult classical_mds(const Eigen::MatrixXd& distances, Index dim = 3);

/// Relative coordinates of one (possibly augmented) cluster. Rows follow
/// `members`.
struct LocalMap {
  Cluster members;
  Coords coords;

  Index size() const { return static_cast<Index>(members.size()); }
  /// Row of `agent`, or -1 when absent.
  Index row_of(Index agent) const;
  bool contains(Index agent) const { return row_of(agent) >= 0; }
};

/// Completion (when anything is missing) followed by classical MDS.
LocalMap localize_cluster(const Cluster& members, const RangeMatrix& ranges,
                          const CompletionConfig& config);

}  // namespace swarmloc
