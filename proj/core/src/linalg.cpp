#include "swarmloc/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace swarmloc {

void canonicalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const double peak = vectors.col(c).cwiseAbs().maxCoeff();
    // Entries equal to the peak up to rounding resolve to the first one.
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) >= peak * (1.0 - 1e-9)) {
        if (vectors(r, c) < 0.0) vectors.col(c) *= -1.0;
        break;
      }
    }
  }
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& symmetric) {
  // Symmetrize explicitly; callers build matrices that are symmetric only up
  // to rounding.
  const Eigen::MatrixXd s = 0.5 * (symmetric + symmetric.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  SymmetricEigen out{solver.eigenvalues(), solver.eigenvectors()};
  canonicalize_signs(out.vectors);
  return out;
}

}  // namespace swarmloc
