#include "neuralfim/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfim::linalg {

static double off_diagonal_norm(const Eigen::MatrixXd& A) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (i != j) s += A(i, j) * A(i, j);
  return std::sqrt(s);
}

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw std::invalid_argument("jacobi_eigen: matrix must be square");
  Eigen::MatrixXd A = 0.5 * (input + input.transpose());
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);

  SymmetricEigen out;
  const double threshold = tol * std::max(1.0, A.norm());
  double off = off_diagonal_norm(A);
  while (off >= threshold) {
    if (out.sweeps >= max_sweeps)
      throw std::runtime_error("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                               " sweeps, off-diagonal residual " + std::to_string(off));
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        // Rotation angle from the standard stable formula (Golub & Van Loan 8.5.2).
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = A(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++out.sweeps;
    off = off_diagonal_norm(A);
  }
  out.off_norm = off;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&A](Eigen::Index a, Eigen::Index b) { return A(a, a) > A(b, b); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = A(src, src);
    out.vectors.col(k) = V.col(src);
  }
  return out;
}

}  // namespace nfim::linalg
