#pragma once

#include <Eigen/Core>

namespace swarmloc {

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Flips each column so that its largest-magnitude component is positive
/// (first such component on ties).
void canonicalize_signs(Eigen::MatrixXd& vectors);

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& symmetric);

}  // namespace swarmloc
