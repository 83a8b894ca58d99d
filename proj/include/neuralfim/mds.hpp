#pragma once

#include <Eigen/Dense>

#include <vector>

namespace nfim::mds {

struct EmbeddingTargets {
  Eigen::MatrixXd Y;  // N x k, column-centered
  double stress = 0.0;
  int iterations = 0;
  std::vector<double> stress_history;  // stress of init, then after every iteration
};

// Raw stress sum_{i<j} (D_ij - |Y_i - Y_j|)^2.
double raw_stress(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y);

// Torgerson scaling: top-k eigenpairs of -1/2 J D^2 J, negative eigenvalues truncated.
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, int k);

// Stress majorization (Guttman transform). Stops once the relative stress
// improvement of an iteration is <= tol, or after max_iters iterations.
EmbeddingTargets smacof(const Eigen::MatrixXd& D, int k, int max_iters, double tol,
                        const Eigen::MatrixXd& init);

// jsd distances between rows of Pt, classical MDS init, SMACOF refinement.
EmbeddingTargets phate_jsd_targets(const Eigen::MatrixXd& Pt, int k, int max_iters = 300,
                                   double tol = 1e-7);

}  // namespace nfim::mds
