#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "swarmloc/linalg.hpp"
#include "swarmloc/swarm.hpp"

namespace swarmloc {

/// Sorted agent indices.
using Cluster = std::vector<Index>;

/// Partition of the swarm. Clusters are kept in canonical order: members
/// ascending, clusters ordered by their smallest member. A cluster's id is
/// its position in `clusters`.
struct ClusterSet {
  std::vector<Cluster> clusters;
  Index min_size = 1;

  Index count() const { return static_cast<Index>(clusters.size()); }
  Index agent_count() const;
  bool is_partition_of(Index agents) const;
  void canonicalize();
};

struct SimilarityMatrix {
  Eigen::MatrixXd weights;
  double sigma = 0.0;
};

/// Gaussian-kernel similarity exp(-d^2 / 2 sigma^2) on measured pairs, 0 on
/// missing pairs and on the diagonal. With no explicit sigma the median of
/// the measured off-diagonal ranges is used. Throws Error(kDegenerateGraph)
/// when nothing off-diagonal is measured or the median range is zero.
SimilarityMatrix similarity_matrix(const RangeMatrix& ranges,
                                   std::optional<double> sigma = std::nullopt);

/// Gamma^-1/2 (Gamma - W) Gamma^-1/2 with Gamma the degree matrix. Isolated
/// nodes get a zero row and column.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& weights);
inline Eigen::MatrixXd normalized_laplacian(const SimilarityMatrix& w) {
  return normalized_laplacian(w.weights);
}

/// Eigenvectors of the k smallest eigenvalues, ascending, canonical signs.
Eigen::MatrixXd spectral_embed(const Eigen::MatrixXd& laplacian, Index k);

/// Largest eigengap: argmax over k in [2, k_max] of lambda_{k+1} - lambda_k
/// (1-based), ties to the smaller k. `ascending` must be sorted.
Index choose_k(std::span<const double> ascending, Index k_max);

/// Lloyd's algorithm with k-means++ seeding on unit-normalized rows (zero
/// rows kept as-is); best inertia over `restarts`, earliest restart on ties.
ClusterSet kmeans_assign(const Eigen::MatrixXd& embedding, Index k, std::uint64_t seed,
                         int restarts = 10);

/// Single-linkage range between two clusters over measured pairs; +inf when
/// no pair is measured.
double cluster_distance(const Cluster& a, const Cluster& b, const RangeMatrix& ranges);

/// Merges undersized clusters into their nearest neighbour until every
/// cluster has at least `min_size` members or a single cluster remains.
ClusterSet complement_undersized(ClusterSet clusters, const RangeMatrix& ranges, Index min_size);

/// Measured unordered pairs with both ends in `members`.
Index observed_pairs(const Cluster& members, const RangeMatrix& ranges);

/// Free parameters of a symmetric size x size matrix of rank `rank`.
Index symmetric_rank_dof(Index size, Index rank);

/// Same nearest-cluster merge as complement_undersized, applied while some
/// cluster has fewer than margin * symmetric_rank_dof(|C|, rank) measured
/// pairs, i.e. too few to pin down its rank-`rank` completion. margin <= 0
/// is a no-op.
ClusterSet merge_underdetermined(ClusterSet clusters, const RangeMatrix& ranges, Index rank, double margin);

struct ClusteringConfig {
  /// nullopt selects the median measured range.
  std::optional<double> sigma;
  Index min_size = 4;
  /// 0 selects floor(L / min_size).
  Index k_max = 0;
  /// Bypasses eigengap selection when set.
  std::optional<Index> k_fixed;
  int kmeans_restarts = 10;
  std::uint64_t seed = 0;
};

struct ClusteringResult {
  ClusterSet clusters;
  Index chosen_k = 0;
  Eigen::VectorXd eigenvalues;
};

ClusteringResult spectral_cluster(const RangeMatrix& ranges, const ClusteringConfig& config);

}  // namespace swarmloc
