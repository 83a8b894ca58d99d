#pragma once

#include "neuralfim/data.hpp"
#include "neuralfim/infogeo.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nfim::paramscan {

// Fixed-gaussian kernel (bandwidth sigma), full density normalization, P^t
// flattened row-major and divided by N: a pmf over N^2 outcomes.
Eigen::VectorXd potential_pmf(const PointCloud& pc, double t, double sigma);

infogeo::DiscreteFamily potential_family(const PointCloud& pc);

// 2x2 Fisher information over theta = (t, sigma).
Eigen::Matrix2d fim_params(const PointCloud& pc, double t, double sigma, double h_t,
                           double h_sigma);

struct ScanSteps {
  double h_t = 1e-2;
  double h_sigma_rel = 1e-2;  // h_sigma = h_sigma_rel * sigma
};

struct ParamGrid {
  Eigen::VectorXd t_values;
  Eigen::VectorXd sigma_values;
  Eigen::MatrixXd volume;  // |t| x |sigma|, NaN marks a failed cell
  std::vector<std::string> failures;
};

ParamGrid volume_grid(const PointCloud& pc, std::pair<double, double> t_range,
                      std::pair<double, double> sigma_range, int t_steps, int sigma_steps,
                      ScanSteps steps = {});

// First row: empty corner then sigma values; each later row: t then volumes.
void write_heatmap_csv(const std::string& path, const ParamGrid& grid);

}  // namespace nfim::paramscan
