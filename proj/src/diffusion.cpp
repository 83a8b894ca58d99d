#include "neuralfim/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nfim::diffusion {

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "fixed-gaussian") return KernelKind::FixedGaussian;
  if (name == "adaptive-gaussian") return KernelKind::AdaptiveGaussian;
  if (name == "alpha-decay") return KernelKind::AlphaDecay;
  throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::FixedGaussian: return "fixed-gaussian";
    case KernelKind::AdaptiveGaussian: return "adaptive-gaussian";
    case KernelKind::AlphaDecay: return "alpha-decay";
  }
  return "unknown";
}

void KernelConfig::validate() const {
  if (anisotropy < 0.0 || anisotropy > 1.0)
    throw std::invalid_argument("kernel anisotropy must lie in [0, 1]");
  switch (kind) {
    case KernelKind::FixedGaussian:
      if (!(sigma > 0.0)) throw std::invalid_argument("kernel sigma must be positive");
      break;
    case KernelKind::AlphaDecay:
      if (!(beta > 0.0)) throw std::invalid_argument("kernel beta must be positive");
      [[fallthrough]];
    case KernelKind::AdaptiveGaussian:
      if (knn < 1) throw std::invalid_argument("kernel knn must be >= 1");
      break;
  }
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < points.cols(); ++c) {
        const double diff = points(i, c) - points(j, c);
        s += diff * diff;
      }
      D(i, j) = D(j, i) = std::sqrt(s);
    }
  }
  return D;
}

namespace {

Eigen::VectorXd knn_bandwidths(const Eigen::MatrixXd& D, int knn) {
  const Eigen::Index n = D.rows();
  if (knn > n - 1)
    throw std::invalid_argument("kernel knn=" + std::to_string(knn) +
                                " exceeds number of neighbours " + std::to_string(n - 1));
  Eigen::VectorXd bw(n);
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row.push_back(D(i, j));
    auto kth = row.begin() + (knn - 1);
    std::nth_element(row.begin(), kth, row.end());
    bw(i) = *kth;
    if (!(bw(i) > 0.0))
      throw std::domain_error("adaptive bandwidth is zero at point " + std::to_string(i) +
                              " (duplicate points within its " + std::to_string(knn) +
                              " nearest neighbours)");
  }
  return bw;
}

}  // namespace

Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& D, const KernelConfig& config) {
  config.validate();
  const Eigen::Index n = D.rows();
  if (D.cols() != n) throw std::invalid_argument("build_kernel: distance matrix must be square");
  Eigen::MatrixXd A(n, n);

  if (config.kind == KernelKind::FixedGaussian) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) A(i, j) = std::exp(-D(i, j) * D(i, j) / config.sigma);
    return A;
  }

  const double beta = config.kind == KernelKind::AdaptiveGaussian ? 2.0 : config.beta;
  const Eigen::VectorXd bw = knn_bandwidths(D, config.knn);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      A(i, j) = 0.5 * std::exp(-std::pow(D(i, j) / bw(i), beta)) +
                0.5 * std::exp(-std::pow(D(i, j) / bw(j), beta));
    }
  }
  return A;
}

Eigen::MatrixXd anisotropic_normalize(const Eigen::MatrixXd& A, double anisotropy) {
  if (anisotropy < 0.0 || anisotropy > 1.0)
    throw std::invalid_argument("anisotropy must lie in [0, 1]");
  if (anisotropy == 0.0) return A;
  const Eigen::VectorXd q = A.rowwise().sum();
  Eigen::VectorXd scale(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i)
    scale(i) = anisotropy == 1.0 ? q(i) : std::pow(q(i), anisotropy);
  Eigen::MatrixXd K(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) K(i, j) = A(i, j) / (scale(i) * scale(j));
  return K;
}

DiffusionOperator row_normalize(const Eigen::MatrixXd& K, const KernelConfig& config) {
  DiffusionOperator op;
  op.config = config;
  op.degree = K.rowwise().sum();
  op.P.resize(K.rows(), K.cols());
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    if (!(op.degree(i) > 0.0))
      throw std::domain_error("row_normalize: row " + std::to_string(i) + " has zero sum");
    op.P.row(i) = K.row(i) / op.degree(i);
  }
  op.symmetric_kernel = K.isApprox(K.transpose(), 1e-12);
  return op;
}

Eigen::MatrixXd matrix_power(const DiffusionOperator& op, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("matrix_power: t must be positive");
  const Eigen::MatrixXd& P = op.P;
  if (t == std::floor(t) && t < 1e6) {
    long n = static_cast<long>(t);
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(P.rows(), P.cols());
    Eigen::MatrixXd base = P;
    while (n > 0) {
      if (n & 1) result = result * base;
      n >>= 1;
      if (n > 0) base = base * base;
    }
    return result;
  }
  return spectral_power(op, t);
}

Eigen::MatrixXd spectral_power(const DiffusionOperator& op, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("matrix_power: t must be positive");
  const Eigen::MatrixXd& P = op.P;
  if (!op.symmetric_kernel)
    throw std::domain_error("matrix_power: fractional powers need a symmetric kernel");

  const Eigen::VectorXd sqrt_deg = op.degree.array().sqrt();
  // S = D^1/2 P D^-1/2 = D^-1/2 K D^-1/2
  Eigen::MatrixXd S = sqrt_deg.asDiagonal() * P * sqrt_deg.cwiseInverse().asDiagonal();
  S = (0.5 * (S + S.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw std::runtime_error("matrix_power: eigensolver failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = lam(i) > 0.0 ? std::pow(lam(i), t) : 0.0;
  const Eigen::MatrixXd& V = eig.eigenvectors();
  Eigen::MatrixXd Pt = sqrt_deg.cwiseInverse().asDiagonal() * (V * lam.asDiagonal() * V.transpose()) *
                       sqrt_deg.asDiagonal();
  for (Eigen::Index i = 0; i < Pt.rows(); ++i) {
    Pt.row(i) = Pt.row(i).cwiseMax(0.0);
    const double s = Pt.row(i).sum();
    if (s > 0.0) Pt.row(i) /= s;
  }
  return Pt;
}

PotentialMatrix potential(const DiffusionOperator& op, double t, double floor_eps) {
  if (!(floor_eps > 0.0 && floor_eps < 1.0))
    throw std::invalid_argument("potential: floor_eps must lie in (0, 1)");
  PotentialMatrix pm;
  pm.t = t;
  pm.floor_eps = floor_eps;
  pm.U = matrix_power(op, t).unaryExpr([floor_eps](double v) { return std::log(std::max(v, floor_eps)); });
  return pm;
}

DiffusionOperator diffuse(const PointCloud& pc, const KernelConfig& config) {
  if (pc.size() < 2) throw std::invalid_argument("diffuse: need at least two points");
  const Eigen::MatrixXd D = pairwise_distances(pc);
  const Eigen::MatrixXd A = build_kernel(D, config);
  return row_normalize(anisotropic_normalize(A, config.anisotropy), config);
}

}  // namespace nfim::diffusion
