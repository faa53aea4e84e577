#include "swarmloc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "swarmloc/error.hpp"
#include "swarmloc/rng.hpp"

namespace swarmloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct KMeansRun {
  std::vector<Index> assignment;
  double inertia = kInf;
};

KMeansRun lloyd(const Eigen::MatrixXd& points, Index k, Rng& rng) {
  const Index n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<Index> first(0, n - 1);
  centers.row(0) = points.row(first(rng));
  Eigen::VectorXd nearest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Index chosen = 0;
    if (total <= 0.0) {
      chosen = std::uniform_int_distribution<Index>(0, n - 1)(rng);
    } else {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= nearest(i);
        if (target <= 0.0 && nearest(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(c) = points.row(chosen);
    nearest = nearest.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<Index> assignment(static_cast<std::size_t>(n), -1);
  Eigen::VectorXd dist2(n);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = kInf;
      for (Index c = 0; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist2(i) = best_d;
      if (assignment[static_cast<std::size_t>(i)] != best) {
        assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts(assignment[static_cast<std::size_t>(i)]);
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centers.row(c) = sums.row(c) / counts(c);
        continue;
      }
      // Empty cluster: steal the point farthest from its center.
      Index far = 0;
      dist2.maxCoeff(&far);
      centers.row(c) = points.row(far);
      dist2(far) = 0.0;
    }
  }

  KMeansRun run;
  run.assignment = std::move(assignment);
  run.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    run.inertia += (points.row(i) - centers.row(run.assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return run;
}

}  // namespace

Index ClusterSet::agent_count() const {
  Index total = 0;
  for (const auto& c : clusters) total += static_cast<Index>(c.size());
  return total;
}

bool ClusterSet::is_partition_of(Index agents) const {
  std::vector<int> seen(static_cast<std::size_t>(agents), 0);
  for (const auto& c : clusters) {
    if (c.empty()) return false;
    for (Index a : c) {
      if (a < 0 || a >= agents || seen[static_cast<std::size_t>(a)]++ > 0) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

void ClusterSet::canonicalize() {
  std::erase_if(clusters, [](const Cluster& c) { return c.empty(); });
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.front() < b.front(); });
}

SimilarityMatrix similarity_matrix(const RangeMatrix& ranges, std::optional<double> sigma) {
  const Index n = ranges.size();
  std::vector<double> measured;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (ranges.measured(i, j)) measured.push_back(ranges.value(i, j));
    }
  }
  if (measured.empty()) {
    throw Error(ErrorCode::kDegenerateGraph, "no measured off-diagonal range; similarity graph is empty");
  }
  SimilarityMatrix out;
  out.sigma = sigma ? *sigma : median(measured);
  if (!(out.sigma > 0.0) || !std::isfinite(out.sigma)) {
    throw Error(ErrorCode::kDegenerateGraph, "kernel bandwidth must be positive");
  }
  out.weights = Eigen::MatrixXd::Zero(n, n);
  const double denom = 2.0 * out.sigma * out.sigma;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (!ranges.measured(i, j)) continue;
      const double d = ranges.value(i, j);
      out.weights(i, j) = out.weights(j, i) = std::exp(-d * d / denom);
    }
  }
  return out;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& weights) {
  const Eigen::VectorXd degree = weights.rowwise().sum();
  Eigen::VectorXd inv_sqrt(degree.size());
  for (Index i = 0; i < degree.size(); ++i) {
    inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  Eigen::MatrixXd gamma_minus_w = -weights;
  gamma_minus_w.diagonal() += degree;
  return inv_sqrt.asDiagonal() * gamma_minus_w * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd spectral_embed(const Eigen::MatrixXd& laplacian, Index k) {
  if (k < 1 || k > laplacian.rows()) {
    throw Error(ErrorCode::kUsage, "spectral_embed: k out of range");
  }
  SymmetricEigen eig = symmetric_eigen(laplacian);
  return eig.vectors.leftCols(k);
}

Index choose_k(std::span<const double> ascending, Index k_max) {
  const Index n = static_cast<Index>(ascending.size());
  // lambda_{k+1} must exist, so k <= n - 1.
  const Index upper = std::min(k_max, n - 1);
  if (upper < 2) return std::max<Index>(1, std::min<Index>(2, n));
  Index best = 2;
  double best_gap = -kInf;
  for (Index k = 2; k <= upper; ++k) {
    const double gap = ascending[static_cast<std::size_t>(k)] - ascending[static_cast<std::size_t>(k - 1)];
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

ClusterSet kmeans_assign(const Eigen::MatrixXd& embedding, Index k, std::uint64_t seed, int restarts) {
  const Index n = embedding.rows();
  if (k < 1 || k > n) throw Error(ErrorCode::kUsage, "kmeans_assign: k must lie in [1, L]");
  Eigen::MatrixXd points = embedding;
  for (Index i = 0; i < n; ++i) {
    const double norm = points.row(i).norm();
    if (norm > 0.0) points.row(i) /= norm;
  }

  KMeansRun best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    KMeansRun run = lloyd(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  ClusterSet out;
  out.clusters.resize(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) {
    out.clusters[static_cast<std::size_t>(best.assignment[static_cast<std::size_t>(i)])].push_back(i);
  }
  out.canonicalize();
  return out;
}

double cluster_distance(const Cluster& a, const Cluster& b, const RangeMatrix& ranges) {
  double best = kInf;
  for (Index u : a) {
    for (Index v : b) {
      if (u != v && ranges.measured(u, v)) best = std::min(best, ranges.value(u, v));
    }
  }
  return best;
}

namespace {

// Folds the first cluster failing `keep` into its nearest cluster by single
// linkage (lowest id on ties) until every cluster passes or one remains.
template <typename Keep>
ClusterSet merge_until(ClusterSet clusters, const RangeMatrix& ranges, Keep keep) {
  clusters.canonicalize();
  while (clusters.count() > 1) {
    auto& cs = clusters.clusters;
    const auto weak = std::find_if(cs.begin(), cs.end(), [&](const Cluster& c) { return !keep(c); });
    if (weak == cs.end()) break;
    const auto p = static_cast<std::size_t>(weak - cs.begin());

    std::size_t q = p == 0 ? 1 : 0;
    double q_dist = kInf;
    for (std::size_t c = 0; c < cs.size(); ++c) {
      if (c == p) continue;
      const double d = cluster_distance(cs[p], cs[c], ranges);
      if (d < q_dist) {
        q_dist = d;
        q = c;
      }
    }
    cs[q].insert(cs[q].end(), cs[p].begin(), cs[p].end());
    cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(p));
    clusters.canonicalize();
  }
  return clusters;
}

}  // namespace

ClusterSet complement_undersized(ClusterSet clusters, const RangeMatrix& ranges, Index min_size) {
  clusters.min_size = min_size;
  return merge_until(std::move(clusters), ranges,
                     [&](const Cluster& c) { return static_cast<Index>(c.size()) >= min_size; });
}

Index observed_pairs(const Cluster& members, const RangeMatrix& ranges) {
  Index count = 0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) count += ranges.measured(members[a], members[b]) ? 1 : 0;
  }
  return count;
}

Index symmetric_rank_dof(Index size, Index rank) {
  const Index r = std::min(rank, size);
  return r * size - r * (r - 1) / 2;
}

ClusterSet merge_underdetermined(ClusterSet clusters, const RangeMatrix& ranges, Index rank, double margin) {
  if (!(margin > 0.0)) return clusters;
  return merge_until(std::move(clusters), ranges, [&](const Cluster& c) {
    const auto m = static_cast<Index>(c.size());
    return static_cast<double>(observed_pairs(c, ranges)) >= margin * static_cast<double>(symmetric_rank_dof(m, rank));
  });
}

ClusteringResult spectral_cluster(const RangeMatrix& ranges, const ClusteringConfig& config) {
  const Index n = ranges.size();
  if (config.min_size < 1) throw Error(ErrorCode::kConfig, "min cluster size must be >= 1");
  if (n < config.min_size) {
    throw Error(ErrorCode::kConfig, "swarm smaller than the minimum cluster size");
  }
  if (config.k_fixed && (*config.k_fixed < 1 || *config.k_fixed > n)) {
    throw Error(ErrorCode::kUsage, "fixed cluster count must lie in [1, L], got " +
                                       std::to_string(*config.k_fixed));
  }

  ClusteringResult out;
  const SimilarityMatrix w = similarity_matrix(ranges, config.sigma);
  const SymmetricEigen eig = symmetric_eigen(normalized_laplacian(w));
  out.eigenvalues = eig.values;

  Index k = 1;
  if (config.k_fixed) {
    k = *config.k_fixed;
  } else {
    const Index k_max = config.k_max > 0 ? config.k_max : n / config.min_size;
    if (k_max >= 2) {
      k = choose_k(std::span<const double>(eig.values.data(), static_cast<std::size_t>(n)), k_max);
    }
  }
  out.chosen_k = k;

  ClusterSet initial;
  if (k <= 1) {
    Cluster all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    initial.clusters.push_back(std::move(all));
  } else {
    initial = kmeans_assign(eig.vectors.leftCols(k), k, config.seed, config.kmeans_restarts);
  }
  out.clusters = complement_undersized(std::move(initial), ranges, config.min_size);
  return out;
}

}  // namespace swarmloc
