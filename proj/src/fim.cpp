#include "neuralfim/fim.hpp"

#include "neuralfim/csv.hpp"
#include "neuralfim/jacobi.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nfim::fim {

FimMode parse_mode(const std::string& name) {
  if (name == "standard") return FimMode::Standard;
  if (name == "literal") return FimMode::Literal;
  throw std::invalid_argument("unknown FIM mode '" + name + "'");
}

std::string to_string(FimMode mode) { return mode == FimMode::Standard ? "standard" : "literal"; }

FimTensor fim_at(const nn::Mlp& mlp, const Eigen::VectorXd& x, FimMode mode) {
  if (mlp.output_mode() != nn::OutputMode::Simplex)
    throw std::invalid_argument("fim_at: network output is not a probability vector");
  Eigen::VectorXd p;
  const Eigen::MatrixXd J = mlp.jacobian_input(x, &p);
  Eigen::VectorXd w(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k)
    w(k) = mode == FimMode::Standard ? 1.0 / std::max(p(k), kProbabilityFloor) : p(k);
  FimTensor t;
  t.g = J.transpose() * w.asDiagonal() * J;
  t.g = (0.5 * (t.g + t.g.transpose())).eval();
  t.point = x;
  t.mode = mode;
  return t;
}

double volume_element(const Eigen::MatrixXd& g) {
  const Eigen::VectorXd lam = linalg::jacobi_eigen(g).values;
  // Sum of logs keeps the product from under/overflowing in higher dimensions.
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double a = std::abs(lam(i));
    if (a == 0.0) return 0.0;
    log_det += std::log(a);
  }
  return std::exp(0.5 * log_det);
}

double trace(const Eigen::MatrixXd& g) { return g.trace(); }

Eigen::VectorXd eigenspectrum(const Eigen::MatrixXd& g) { return linalg::jacobi_eigen(g).values; }

FimField fim_field(const nn::Mlp& mlp, const PointCloud& pc, FimMode mode) {
  const Eigen::Index n = pc.size(), d = pc.dim();
  FimField field;
  field.points = pc.points;
  field.volume.resize(n);
  field.trace.resize(n);
  field.eigenvalues.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const FimTensor t = fim_at(mlp, pc.points.row(i).transpose(), mode);
    const auto eig = linalg::jacobi_eigen(t.g);
    double log_det = 0.0;
    bool zero = false;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double a = std::abs(eig.values(k));
      if (a == 0.0) zero = true;
      else log_det += std::log(a);
    }
    field.volume(i) = zero ? 0.0 : std::exp(0.5 * log_det);
    field.trace(i) = t.g.trace();
    field.eigenvalues.row(i) = eig.values.transpose();
  }
  return field;
}

void write_field_csv(const std::string& path, const FimField& field) {
  const Eigen::Index n = field.points.rows(), d = field.points.cols();
  Eigen::MatrixXd all(n, 1 + d + 2 + d);
  std::vector<std::string> header{"index"};
  for (Eigen::Index c = 0; c < d; ++c) header.push_back("x" + std::to_string(c));
  header.emplace_back("volume");
  header.emplace_back("trace");
  for (Eigen::Index c = 0; c < d; ++c) header.push_back("eig" + std::to_string(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    all(i, 0) = static_cast<double>(i);
    all.block(i, 1, 1, d) = field.points.row(i);
    all(i, 1 + d) = field.volume(i);
    all(i, 2 + d) = field.trace(i);
    all.block(i, 3 + d, 1, d) = field.eigenvalues.row(i);
  }
  csv::write_matrix(path, all, header);
}

}  // namespace nfim::fim
