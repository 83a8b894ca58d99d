#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace nfim {

struct PointCloud {
  Eigen::MatrixXd points;                     // N x d
  std::optional<Eigen::VectorXi> labels;      // length N
  std::optional<Eigen::MatrixXd> intrinsic;   // N x k ground-truth coordinates
  std::string name;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  // Throws std::invalid_argument when any invariant is broken.
  void validate() const;
};

PointCloud select_rows(const PointCloud& pc, const std::vector<Eigen::Index>& rows);

}  // namespace nfim

namespace nfim::data {

PointCloud load_csv(const std::string& path, bool has_header,
                    const std::optional<std::string>& label_column = std::nullopt);

// Writes points, then labels (if any), then intrinsic columns (if any).
void save_csv(const std::string& path, const PointCloud& pc);

// Random tree: branch 0 leaves the origin, every later branch leaves a
// uniformly chosen point of an earlier branch. Each branch is
// points_per_branch equally spaced samples over unit length.
// intrinsic = (branch id, arclength along branch).
PointCloud gen_tree(int n_branches, int points_per_branch, int dim,
                    double noise_sd, std::uint64_t seed);

// (u cos u, v, u sin u) with u ~ U[1.5pi, 4.5pi], v ~ U[0, 21].
// intrinsic = (arclength from 1.5pi to u, v).
PointCloud gen_swiss_roll(int n, std::uint64_t seed, double noise_sd);

// Arclength of the spiral (s cos s, s sin s) between parameters a and b.
double spiral_arclength(double a, double b);

PointCloud add_noise(const PointCloud& pc, double level, std::uint64_t seed);

// n distinct indices drawn without replacement, sorted ascending.
std::vector<Eigen::Index> subsample_indices(Eigen::Index total, Eigen::Index n,
                                            std::uint64_t seed);

}  // namespace nfim::data
