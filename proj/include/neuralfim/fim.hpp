#pragma once

#include "neuralfim/data.hpp"
#include "neuralfim/nn.hpp"

#include <Eigen/Dense>

#include <string>

namespace nfim::fim {

// standard: J^T diag(1/p) J, the Fisher metric of x -> phi(x).
// literal:  J^T diag(p) J, weighting the output Jacobian by the output itself.
enum class FimMode { Standard, Literal };

FimMode parse_mode(const std::string& name);
std::string to_string(FimMode mode);

inline constexpr double kProbabilityFloor = 1e-12;

struct FimTensor {
  Eigen::MatrixXd g;
  Eigen::VectorXd point;
  FimMode mode = FimMode::Standard;
};

FimTensor fim_at(const nn::Mlp& mlp, const Eigen::VectorXd& x, FimMode mode = FimMode::Standard);

// sqrt(|det g|) as the square root of the product of |eigenvalues|.
double volume_element(const Eigen::MatrixXd& g);
inline double volume_element(const FimTensor& t) { return volume_element(t.g); }

double trace(const Eigen::MatrixXd& g);
inline double trace(const FimTensor& t) { return trace(t.g); }

// Descending eigenvalues from the Jacobi solver.
Eigen::VectorXd eigenspectrum(const Eigen::MatrixXd& g);
inline Eigen::VectorXd eigenspectrum(const FimTensor& t) { return eigenspectrum(t.g); }

struct FimField {
  Eigen::MatrixXd points;      // N x d
  Eigen::VectorXd volume;      // N
  Eigen::VectorXd trace;       // N
  Eigen::MatrixXd eigenvalues; // N x d, descending per row
};

FimField fim_field(const nn::Mlp& mlp, const PointCloud& pc, FimMode mode = FimMode::Standard);

// Columns: index, x0..x{d-1}, volume, trace, eig0..eig{d-1}.
void write_field_csv(const std::string& path, const FimField& field);

}  // namespace nfim::fim
