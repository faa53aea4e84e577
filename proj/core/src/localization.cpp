#include "swarmloc/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "swarmloc/error.hpp"
#include "swarmloc/linalg.hpp"
#include "swarmloc/rng.hpp"

namespace swarmloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Members of `from` ordered by their smallest measured range to `to`,
// dropping members without any measured link.
std::vector<Index> closest_to(const Cluster& from, const Cluster& to, const RangeMatrix& ranges) {
  std::vector<std::pair<double, Index>> scored;
  for (Index u : from) {
    double best = kInf;
    for (Index v : to) {
      if (u != v && ranges.measured(u, v)) best = std::min(best, ranges.value(u, v));
    }
    if (best < kInf) scored.emplace_back(best, u);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<Index> out;
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

// Observed positions per row and per column, fixed for a whole factorization.
struct Pattern {
  std::vector<std::vector<Index>> by_row;
  std::vector<std::vector<Index>> by_col;
  Eigen::MatrixXd weight;
  double count = 0.0;

  explicit Pattern(const Mask& observed)
      : by_row(static_cast<std::size_t>(observed.rows())),
        by_col(static_cast<std::size_t>(observed.cols())),
        weight(observed.cast<double>()),
        count(static_cast<double>(observed.count())) {
    for (Index i = 0; i < observed.rows(); ++i) {
      for (Index j = 0; j < observed.cols(); ++j) {
        if (!observed(i, j)) continue;
        by_row[static_cast<std::size_t>(i)].push_back(j);
        by_col[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
};

double squared_residual(const Eigen::MatrixXd& values, const Pattern& p, const Eigen::MatrixXd& u,
                        const Eigen::MatrixXd& v) {
  return p.weight.cwiseProduct(values - u * v.transpose()).squaredNorm();
}

double objective(const Eigen::MatrixXd& values, const Pattern& p, const Eigen::MatrixXd& u,
                 const Eigen::MatrixXd& v, double lambda) {
  return squared_residual(values, p, u, v) + lambda * (u.squaredNorm() + v.squaredNorm());
}

double observed_rmse(const Eigen::MatrixXd& values, const Pattern& p, const Eigen::MatrixXd& u,
                     const Eigen::MatrixXd& v) {
  return p.count > 0 ? std::sqrt(squared_residual(values, p, u, v) / p.count) : 0.0;
}

// One half-sweep: every row of `solve` is the ridge least-squares fit against
// the fixed factor, using entries observed in that row (or column when
// `transposed`).
void ridge_sweep(const Eigen::MatrixXd& values, const Pattern& p, bool transposed, const Eigen::MatrixXd& fixed,
                 double lambda, Eigen::MatrixXd& solve) {
  const Index r = fixed.cols();
  const auto& lists = transposed ? p.by_col : p.by_row;
  Eigen::MatrixXd f;
  Eigen::VectorXd d;
  Eigen::MatrixXd a(r, r);
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  for (Index i = 0; i < solve.rows(); ++i) {
    const std::vector<Index>& idx = lists[static_cast<std::size_t>(i)];
    const auto k = static_cast<Index>(idx.size());
    f.resize(k, r);
    d.resize(k);
    for (Index t = 0; t < k; ++t) {
      const Index j = idx[static_cast<std::size_t>(t)];
      f.row(t) = fixed.row(j);
      d(t) = transposed ? values(j, i) : values(i, j);
    }
    a.setIdentity();
    a *= lambda;
    a.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose());
    llt.compute(a);
    solve.row(i).noalias() = llt.solve(f.transpose() * d).transpose();
  }
}

}  // namespace

PublicNodes select_public_nodes(const Cluster& c_p, const Cluster& c_adj, const RangeMatrix& ranges) {
  const std::vector<Index> p_side = closest_to(c_p, c_adj, ranges);
  const std::vector<Index> q_side = closest_to(c_adj, c_p, ranges);
  if (p_side.size() < 2 || q_side.size() < 2) {
    throw Error(ErrorCode::kMergeInfeasible,
                "fewer than two cross-linked nodes between clusters; cannot pick public nodes");
  }
  return PublicNodes{p_side[0], p_side[1], q_side[0], q_side[1]};
}

ClusterMatrix extract_cluster_matrix(const Cluster& members, const RangeMatrix& ranges) {
  const auto m = static_cast<Index>(members.size());
  if (m < 2) throw Error(ErrorCode::kUsage, "cluster matrix needs at least two members");
  ClusterMatrix out;
  out.members = members;
  out.values = Eigen::MatrixXd::Zero(m, m);
  out.observed = Mask::Constant(m, m, false);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) {
      if (a == b) continue;
      const Index i = members[static_cast<std::size_t>(a)];
      const Index j = members[static_cast<std::size_t>(b)];
      if (ranges.measured(i, j)) {
        out.values(a, b) = ranges.value(i, j);
        out.observed(a, b) = true;
      }
    }
  }
  return out;
}

void CompletionConfig::validate() const {
  if (rank < 1) throw Error(ErrorCode::kConfig, "completion rank must be >= 1");
  if (lambda && !(*lambda > 0.0)) throw Error(ErrorCode::kConfig, "completion lambda must be > 0");
  if (max_iterations < 1) throw Error(ErrorCode::kConfig, "completion max_iterations must be >= 1");
  if (!(lambda_factor > 0.0)) throw Error(ErrorCode::kConfig, "completion lambda_factor must be > 0");
  if (restarts < 1) throw Error(ErrorCode::kConfig, "completion restarts must be >= 1");
  if (polish_iterations < 0) throw Error(ErrorCode::kConfig, "completion polish_iterations must be >= 0");
  if (!(polish_factor > 0.0)) throw Error(ErrorCode::kConfig, "completion polish_factor must be > 0");
  if (!(tolerance >= 0.0)) throw Error(ErrorCode::kConfig, "completion tolerance must be >= 0");
}

CompletionTrace als_factorize(const Eigen::MatrixXd& values, const Mask& observed,
                              const CompletionConfig& config) {
  config.validate();
  const Index m = values.rows();
  Mask measured = observed;
  measured.diagonal().setConstant(false);

  double magnitude = 0.0;
  for (Index i = 0; i < m; ++i) {
    if (!measured.row(i).any() || !measured.col(i).any()) {
      throw Error(ErrorCode::kCompletionInfeasible,
                  "row/column " + std::to_string(i) + " has no observed entry");
    }
    for (Index j = 0; j < m; ++j) {
      if (measured(i, j)) magnitude += std::abs(values(i, j));
    }
  }
  magnitude /= static_cast<double>(measured.count());
  const double lambda = config.lambda ? *config.lambda : std::max(config.lambda_factor * magnitude, 1e-300);

  CompletionTrace trace;
  if (measured.count() == m * (m - 1)) {
    trace.completed = values;
    trace.converged = true;
  } else {
    Mask omega = measured;
    Eigen::MatrixXd target = values;
    if (config.fit_diagonal) {
      omega.diagonal().setConstant(true);
      target.diagonal().setZero();
    }
    const Pattern pattern(omega);
    const Index r = config.rank;
    std::normal_distribution<double> gauss(0.0, std::sqrt(std::max(magnitude, 1e-12)) / std::sqrt(static_cast<double>(r)));
    Eigen::MatrixXd best_u;
    Eigen::MatrixXd best_v;
    for (int restart = 0; restart < config.restarts; ++restart) {
      Eigen::MatrixXd u(m, r);
      Eigen::MatrixXd v(m, r);
      Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(restart)}));
      for (Index i = 0; i < m; ++i) {
        for (Index c = 0; c < r; ++c) u(i, c) = gauss(rng);
      }
      for (Index i = 0; i < m; ++i) {
        for (Index c = 0; c < r; ++c) v(i, c) = gauss(rng);
      }

      CompletionTrace run;
      run.objective.push_back(objective(target, pattern, u, v, lambda));
      double prev_rmse = observed_rmse(target, pattern, u, v);
      for (int it = 0; it < config.max_iterations; ++it) {
        ridge_sweep(target, pattern, false, v, lambda, u);
        ridge_sweep(target, pattern, true, u, lambda, v);
        run.objective.push_back(objective(target, pattern, u, v, lambda));
        ++run.iterations;
        const double rmse = observed_rmse(target, pattern, u, v);
        if (std::abs(prev_rmse - rmse) <= config.tolerance * magnitude) {
          run.converged = true;
          break;
        }
        prev_rmse = rmse;
      }
      if (restart == 0 || run.objective.back() < trace.objective.back()) {
        trace = std::move(run);
        best_u = std::move(u);
        best_v = std::move(v);
      }
    }

    const double fine = lambda * config.polish_factor;
    double prev_rmse = observed_rmse(target, pattern, best_u, best_v);
    for (int it = 0; it < config.polish_iterations; ++it) {
      ridge_sweep(target, pattern, false, best_v, fine, best_u);
      ridge_sweep(target, pattern, true, best_u, fine, best_v);
      const double rmse = observed_rmse(target, pattern, best_u, best_v);
      if (std::abs(prev_rmse - rmse) <= config.tolerance * magnitude) break;
      prev_rmse = rmse;
    }
    trace.completed = best_u * best_v.transpose();
  }

  Eigen::MatrixXd& d = trace.completed;
  d = (0.5 * (d + d.transpose())).eval();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (measured(i, j)) d(i, j) = values(i, j);
    }
  }
  return trace;
}

MdsResult classical_mds(const Eigen::MatrixXd& distances, Index dim) {
  const Index m = distances.rows();
  if (m < 2 || distances.cols() != m) throw Error(ErrorCode::kUsage, "MDS needs a square matrix with m >= 2");
  if (dim < 1) throw Error(ErrorCode::kUsage, "MDS dimension must be >= 1");

  const Eigen::MatrixXd squared = distances.cwiseProduct(distances);
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  const Eigen::MatrixXd gram = -0.5 * centering * squared * centering;

  const SymmetricEigen eig = symmetric_eigen(gram);
  MdsResult out;
  out.eigenvalues = eig.values.reverse();
  out.coords = Eigen::MatrixXd::Zero(m, dim);

  const double scale = std::max(out.eigenvalues.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Index positive = 0;
  for (Index c = 0; c < std::min(dim, m); ++c) {
    const double lambda = out.eigenvalues(c);
    if (lambda <= 1e-10 * scale) continue;
    ++positive;
    out.coords.col(c) = eig.vectors.col(m - 1 - c) * std::sqrt(lambda);
  }
  out.degenerate = positive < dim;
  return out;
}

Index LocalMap::row_of(Index agent) const {
  const auto it = std::find(members.begin(), members.end(), agent);
  return it == members.end() ? -1 : static_cast<Index>(it - members.begin());
}

LocalMap localize_cluster(const Cluster& members, const RangeMatrix& ranges,
                          const CompletionConfig& config) {
  const ClusterMatrix sub = extract_cluster_matrix(members, ranges);
  const Index m = sub.size();

  Eigen::MatrixXd complete;
  if (sub.observed_count() == m * (m - 1)) {
    complete = sub.values;
  } else {
    CompletionConfig local = config;
    local.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(members.front()),
                                           static_cast<std::uint64_t>(m)});
    if (config.mode == CompletionMode::kSquared) {
      const Eigen::MatrixXd filled = als_complete(sub.values.cwiseProduct(sub.values), sub.observed, local);
      complete = filled.cwiseSqrt();
    } else {
      complete = als_complete(sub.values, sub.observed, local);
    }
  }

  LocalMap out;
  out.members = members;
  out.coords = classical_mds(complete, 3).coords;
  return out;
}

}  // namespace swarmloc
