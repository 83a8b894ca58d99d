#pragma once

#include "neuralfim/data.hpp"

#include <Eigen/Dense>

#include <string>

namespace nfim::diffusion {

enum class KernelKind { FixedGaussian, AdaptiveGaussian, AlphaDecay };

KernelKind parse_kernel_kind(const std::string& name);
std::string to_string(KernelKind kind);

struct KernelConfig {
  KernelKind kind = KernelKind::AlphaDecay;
  double sigma = 1.0;       // fixed-gaussian bandwidth, A = exp(-D^2 / sigma)
  int knn = 5;              // adaptive bandwidth: distance to knn-th neighbour
  double beta = 2.0;        // alpha-decay exponent
  double anisotropy = 1.0;  // density normalization exponent in [0, 1]

  void validate() const;
};

struct DiffusionOperator {
  Eigen::MatrixXd P;       // row-stochastic
  KernelConfig config;
  Eigen::VectorXd degree;  // row sums of K before row normalization
  bool symmetric_kernel = true;

  Eigen::Index size() const { return P.rows(); }
};

struct PotentialMatrix {
  Eigen::MatrixXd U;
  double t = 1.0;
  double floor_eps = 1e-7;
};

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);
inline Eigen::MatrixXd pairwise_distances(const PointCloud& pc) {
  return pairwise_distances(pc.points);
}

// Throws std::domain_error naming the point when an adaptive bandwidth is 0.
Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& D, const KernelConfig& config);

// K_ij = A_ij / (q_i^a q_j^a), q = A 1.
Eigen::MatrixXd anisotropic_normalize(const Eigen::MatrixXd& A, double anisotropy);

DiffusionOperator row_normalize(const Eigen::MatrixXd& K, const KernelConfig& config = {});

// Integer t: repeated multiplication. Fractional t: eigendecomposition of the
// symmetric conjugate D^-1/2 K D^-1/2 with negative eigenvalues clamped to 0.
Eigen::MatrixXd matrix_power(const DiffusionOperator& op, double t);

// The eigendecomposition path of matrix_power, used for every t (integer or not).
Eigen::MatrixXd spectral_power(const DiffusionOperator& op, double t);

PotentialMatrix potential(const DiffusionOperator& op, double t, double floor_eps = 1e-7);

// distances -> kernel -> anisotropic normalization -> row normalization.
DiffusionOperator diffuse(const PointCloud& pc, const KernelConfig& config);

}  // namespace nfim::diffusion
