#include "neuralfim/mds.hpp"

#include "neuralfim/infogeo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nfim::mds {

double raw_stress(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index j = i + 1; j < D.rows(); ++j) {
      const double r = D(i, j) - (Y.row(i) - Y.row(j)).norm();
      s += r * r;
    }
  return s;
}

static void check_args(const Eigen::MatrixXd& D, int k) {
  if (D.rows() != D.cols()) throw std::invalid_argument("mds: distance matrix must be square");
  if (k < 1 || k > D.rows() - 1)
    throw std::invalid_argument("mds: k=" + std::to_string(k) + " out of range [1, " +
                                std::to_string(D.rows() - 1) + "]");
}

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, int k) {
  check_args(D, k);
  const Eigen::Index n = D.rows();
  const Eigen::MatrixXd D2 = D.array().square().matrix();
  const Eigen::VectorXd row_mean = D2.rowwise().mean();
  const Eigen::VectorXd col_mean = D2.colwise().mean().transpose();
  const double grand = D2.mean();
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      B(i, j) = -0.5 * (D2(i, j) - row_mean(i) - col_mean(j) + grand);
  B = (0.5 * (B + B.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  if (eig.info() != Eigen::Success) throw std::runtime_error("classical_mds: eigensolver failed");
  Eigen::MatrixXd Y(n, k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = n - 1 - c;  // ascending order from Eigen
    const double lam = eig.eigenvalues()(src);
    Y.col(c) = eig.eigenvectors().col(src) * (lam > 0.0 ? std::sqrt(lam) : 0.0);
  }
  return Y;
}

namespace {

Eigen::MatrixXd guttman_transform(const Eigen::MatrixXd& D, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (X.row(i) - X.row(j)).norm();
      const double b = dist > 0.0 ? -D(i, j) / dist : 0.0;
      B(i, j) = B(j, i) = b;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) B(i, i) = -B.row(i).sum();
  return (B * X) / static_cast<double>(n);
}

Eigen::MatrixXd centered(Eigen::MatrixXd Y) {
  Y.rowwise() -= Y.colwise().mean();
  return Y;
}

}  // namespace

EmbeddingTargets smacof(const Eigen::MatrixXd& D, int k, int max_iters, double tol,
                        const Eigen::MatrixXd& init) {
  check_args(D, k);
  if (init.rows() != D.rows() || init.cols() != k)
    throw std::invalid_argument("smacof: init must be N x k");
  EmbeddingTargets out;
  out.Y = centered(init);
  double stress = raw_stress(D, out.Y);
  out.stress_history.push_back(stress);
  for (int it = 0; it < max_iters; ++it) {
    out.Y = guttman_transform(D, out.Y);
    const double next = raw_stress(D, out.Y);
    out.stress_history.push_back(next);
    ++out.iterations;
    const double improvement = stress - next;
    stress = next;
    if (improvement <= tol * out.stress_history[out.stress_history.size() - 2]) break;
  }
  out.Y = centered(out.Y);
  out.stress = stress;
  return out;
}

EmbeddingTargets phate_jsd_targets(const Eigen::MatrixXd& Pt, int k, int max_iters, double tol) {
  const Eigen::MatrixXd D = infogeo::jsd_matrix(Pt);
  return smacof(D, k, max_iters, tol, classical_mds(D, k));
}

}  // namespace nfim::mds
