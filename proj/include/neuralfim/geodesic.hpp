#pragma once

#include "neuralfim/data.hpp"
#include "neuralfim/fim.hpp"
#include "neuralfim/nn.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace nfim::geodesic {

// g(x): d x d symmetric PSD metric tensor on a chart of dimension d.
class MetricProvider {
 public:
  virtual ~MetricProvider() = default;
  virtual int dim() const = 0;
  virtual Eigen::MatrixXd metric(const Eigen::VectorXd& x) const = 0;
  // dg/dx_k for k = 0..d-1. Defaults to central differences.
  virtual std::vector<Eigen::MatrixXd> metric_partials(const Eigen::VectorXd& x) const;
};

class EuclideanMetric final : public MetricProvider {
 public:
  explicit EuclideanMetric(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  Eigen::MatrixXd metric(const Eigen::VectorXd& x) const override;
  std::vector<Eigen::MatrixXd> metric_partials(const Eigen::VectorXd& x) const override;

 private:
  int dim_;
};

// Unit sphere on the (colatitude, longitude) chart: diag(1, sin^2 colatitude).
class SphereMetric final : public MetricProvider {
 public:
  int dim() const override { return 2; }
  Eigen::MatrixXd metric(const Eigen::VectorXd& x) const override;
  std::vector<Eigen::MatrixXd> metric_partials(const Eigen::VectorXd& x) const override;
};

class LearnedFimMetric final : public MetricProvider {
 public:
  LearnedFimMetric(nn::Mlp model, fim::FimMode mode = fim::FimMode::Standard)
      : model_(std::move(model)), mode_(mode) {}
  int dim() const override { return model_.input_dim(); }
  Eigen::MatrixXd metric(const Eigen::VectorXd& x) const override;

 private:
  nn::Mlp model_;
  fim::FimMode mode_;
};

using VectorField = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// Network f(t, y) with input (t, y) of length 1 + d and output of length d.
class OdeField {
 public:
  OdeField(int dim, int width, int hidden_layers, std::uint64_t seed);
  explicit OdeField(nn::Mlp net);

  int dim() const { return net_.output_dim(); }
  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& y) const;
  const nn::Mlp& net() const { return net_; }
  nn::Mlp& net() { return net_; }

 private:
  nn::Mlp net_;
};

// Classical fixed-step RK4 on [a, b]; returns the n_steps + 1 states row-wise.
Eigen::MatrixXd rk4_integrate(const VectorField& field, const Eigen::VectorXd& start, double a,
                              double b, int n_steps);
Eigen::MatrixXd rk4_integrate(const OdeField& field, const Eigen::VectorXd& start, double a,
                              double b, int n_steps);

// Left-endpoint sum h * sum_i sqrt(f_i^T g(path_i) f_i) over i < n_steps.
double path_length(const Eigen::MatrixXd& path, const Eigen::MatrixXd& velocities,
                   const MetricProvider& metric, double a, double b);

struct GeodesicConfig {
  double lambda = 100.0;
  int n_steps = 20;
  int epochs = 6000;
  double learning_rate = 3e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  double a = 0.0;
  double b = 1.0;
  int width = 64;
  int hidden_layers = 3;
  bool length_term = true;  // false trains on the endpoint error alone
};

struct GeodesicResult {
  Eigen::MatrixXd path;        // (n_steps + 1) x d
  Eigen::MatrixXd velocities;  // n_steps x d, field at the start of each step
  double length = 0.0;                // RK4-weighted stage quadrature, the trained length term
  double left_endpoint_length = 0.0;  // path_length over path and velocities
  double endpoint_error = 0.0;
  std::vector<double> loss_history;
  double a = 0.0;
  double b = 1.0;
};

// Minimizes lambda |y(b) - target|^2 + length, backpropagating through the
// unrolled RK4 steps. Length per step is h * sum_s w_s sqrt(k_s^T g(Y_s) k_s)
// over the four RK4 stages with weights (1, 2, 2, 1) / 6.
GeodesicResult train_geodesic(const MetricProvider& metric, const Eigen::VectorXd& start,
                              const Eigen::VectorXd& target, const GeodesicConfig& config);

// Great-circle distance between two (colatitude, longitude) points on the unit sphere.
double sphere_great_circle(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2);

// Distance between intrinsic (arclength, height) coordinates of a swiss roll.
double swiss_roll_geodesic(const PointCloud& pc, Eigen::Index i, Eigen::Index j);

}  // namespace nfim::geodesic
