#pragma once

#include <Eigen/Dense>

namespace nfim::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
  int sweeps = 0;
  double off_norm = 0.0;    // Frobenius norm of the off-diagonal part at exit
};

// Cyclic Jacobi rotations until the off-diagonal norm drops below
// tol * max(1, ||A||_F).
// Throws std::runtime_error reporting the residual when max_sweeps is hit.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& A, double tol = 1e-10, int max_sweeps = 100);

}  // namespace nfim::linalg
