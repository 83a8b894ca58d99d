#include "neuralfim/paramscan.hpp"

#include "neuralfim/csv.hpp"
#include "neuralfim/diffusion.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nfim::paramscan {

namespace {

diffusion::DiffusionOperator fixed_operator(const Eigen::MatrixXd& D, double sigma) {
  diffusion::KernelConfig cfg;
  cfg.kind = diffusion::KernelKind::FixedGaussian;
  cfg.sigma = sigma;
  cfg.anisotropy = 1.0;
  const Eigen::MatrixXd A = diffusion::build_kernel(D, cfg);
  return diffusion::row_normalize(diffusion::anisotropic_normalize(A, 1.0), cfg);
}

Eigen::VectorXd flatten_pmf(const Eigen::MatrixXd& Pt) {
  const Eigen::Index n = Pt.rows();
  Eigen::VectorXd out(n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i * n + j) = Pt(i, j) / static_cast<double>(n);
  return out;
}

// Fractional path for every t so the family is smooth in t.
Eigen::VectorXd pmf_from_distances(const Eigen::MatrixXd& D, double t, double sigma) {
  if (!(t > 0.0)) throw std::invalid_argument("potential_pmf: t must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("potential_pmf: sigma must be positive");
  const auto op = fixed_operator(D, sigma);
  if (D.rows() == 1) return Eigen::VectorXd::Ones(1);
  return flatten_pmf(diffusion::spectral_power(op, t));
}

}  // namespace

Eigen::VectorXd potential_pmf(const PointCloud& pc, double t, double sigma) {
  return pmf_from_distances(diffusion::pairwise_distances(pc), t, sigma);
}

infogeo::DiscreteFamily potential_family(const PointCloud& pc) {
  const Eigen::MatrixXd D = diffusion::pairwise_distances(pc);
  infogeo::DiscreteFamily fam;
  const double inf = std::numeric_limits<double>::infinity();
  fam.domain = {{0.0, inf}, {0.0, inf}};
  fam.eval = [D](const Eigen::VectorXd& theta) { return pmf_from_distances(D, theta(0), theta(1)); };
  return fam;
}

Eigen::Matrix2d fim_params(const PointCloud& pc, double t, double sigma, double h_t,
                           double h_sigma) {
  const auto fam = potential_family(pc);
  const Eigen::MatrixXd I =
      infogeo::discrete_family_fim(fam, Eigen::Vector2d(t, sigma), Eigen::Vector2d(h_t, h_sigma));
  return I;
}

ParamGrid volume_grid(const PointCloud& pc, std::pair<double, double> t_range,
                      std::pair<double, double> sigma_range, int t_steps, int sigma_steps,
                      ScanSteps steps) {
  if (t_steps < 1 || sigma_steps < 1) throw std::invalid_argument("volume_grid: steps must be >= 1");
  if (!(t_range.first > 0.0 && t_range.second >= t_range.first && sigma_range.first > 0.0 &&
        sigma_range.second >= sigma_range.first))
    throw std::invalid_argument("volume_grid: ranges must be positive and ascending");
  auto axis = [](std::pair<double, double> r, int n) -> Eigen::VectorXd {
    return n == 1 ? Eigen::VectorXd(Eigen::VectorXd::Constant(1, r.first))
                  : Eigen::VectorXd( Eigen::VectorXd::LinSpaced(n, r.first, r.second));
  };
  ParamGrid grid;
  grid.t_values = axis(t_range, t_steps);
  grid.sigma_values = axis(sigma_range, sigma_steps);
  grid.volume.resize(t_steps, sigma_steps);

  const auto fam = potential_family(pc);
  for (int i = 0; i < t_steps; ++i) {
    for (int j = 0; j < sigma_steps; ++j) {
      const double t = grid.t_values(i), s = grid.sigma_values(j);
      try {
        const Eigen::MatrixXd I = infogeo::discrete_family_fim(
            fam, Eigen::Vector2d(t, s), Eigen::Vector2d(steps.h_t, steps.h_sigma_rel * s));
        const double det = I(0, 0) * I(1, 1) - I(0, 1) * I(1, 0);
        grid.volume(i, j) = std::sqrt(std::abs(det));
      } catch (const std::exception& e) {
        grid.volume(i, j) = std::numeric_limits<double>::quiet_NaN();
        grid.failures.push_back("cell (" + std::to_string(i) + "," + std::to_string(j) + "): " + e.what());
      }
    }
  }
  return grid;
}

void write_heatmap_csv(const std::string& path, const ParamGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t\\sigma";
  for (Eigen::Index j = 0; j < grid.sigma_values.size(); ++j) out << ',' << csv::format_real(grid.sigma_values(j));
  out << '\n';
  for (Eigen::Index i = 0; i < grid.t_values.size(); ++i) {
    out << csv::format_real(grid.t_values(i));
    for (Eigen::Index j = 0; j < grid.sigma_values.size(); ++j) out << ',' << csv::format_real(grid.volume(i, j));
    out << '\n';
  }
}

}  // namespace nfim::paramscan
