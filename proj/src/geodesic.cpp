#include "neuralfim/geodesic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nfim::geodesic {

std::vector<Eigen::MatrixXd> MetricProvider::metric_partials(const Eigen::VectorXd& x) const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    out.push_back((metric(xp) - metric(xm)) / (2.0 * h));
  }
  return out;
}

Eigen::MatrixXd EuclideanMetric::metric(const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Identity(dim_, dim_);
}

std::vector<Eigen::MatrixXd> EuclideanMetric::metric_partials(const Eigen::VectorXd&) const {
  return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(dim_),
                                      Eigen::MatrixXd::Zero(dim_, dim_));
}

Eigen::MatrixXd SphereMetric::metric(const Eigen::VectorXd& x) const {
  const double s = std::sin(x(0));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
  g(0, 0) = 1.0;
  g(1, 1) = s * s;
  return g;
}

std::vector<Eigen::MatrixXd> SphereMetric::metric_partials(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd d0 = Eigen::MatrixXd::Zero(2, 2);
  d0(1, 1) = 2.0 * std::sin(x(0)) * std::cos(x(0));
  return {d0, Eigen::MatrixXd::Zero(2, 2)};
}

Eigen::MatrixXd LearnedFimMetric::metric(const Eigen::VectorXd& x) const {
  return fim::fim_at(model_, x, mode_).g;
}

OdeField::OdeField(int dim, int width, int hidden_layers, std::uint64_t seed) {
  std::vector<int> dims{dim + 1};
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(width);
  dims.push_back(dim);
  net_ = nn::init_mlp(dims, nn::Activation::Selu, nn::OutputMode::Linear, seed);
}

OdeField::OdeField(nn::Mlp net) : net_(std::move(net)) {
  if (net_.input_dim() != net_.output_dim() + 1)
    throw std::invalid_argument("OdeField: network must map (t, y) to dy/dt");
}

static Eigen::VectorXd time_state(double t, const Eigen::VectorXd& y) {
  Eigen::VectorXd in(y.size() + 1);
  in(0) = t;
  in.tail(y.size()) = y;
  return in;
}

Eigen::VectorXd OdeField::operator()(double t, const Eigen::VectorXd& y) const {
  return net_.forward(time_state(t, y));
}

Eigen::MatrixXd rk4_integrate(const VectorField& field, const Eigen::VectorXd& start, double a,
                              double b, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("rk4_integrate: n_steps must be >= 1");
  if (!(b > a)) throw std::invalid_argument("rk4_integrate: need b > a");
  const double h = (b - a) / n_steps;
  Eigen::MatrixXd path(n_steps + 1, start.size());
  path.row(0) = start.transpose();
  Eigen::VectorXd y = start;
  for (int i = 0; i < n_steps; ++i) {
    const double t = a + i * h;
    const Eigen::VectorXd k1 = field(t, y);
    const Eigen::VectorXd k2 = field(t + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = field(t + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = field(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite())
      throw std::runtime_error("rk4_integrate: non-finite state at step " + std::to_string(i + 1));
    path.row(i + 1) = y.transpose();
  }
  return path;
}

Eigen::MatrixXd rk4_integrate(const OdeField& field, const Eigen::VectorXd& start, double a,
                              double b, int n_steps) {
  return rk4_integrate([&field](double t, const Eigen::VectorXd& y) { return field(t, y); }, start,
                       a, b, n_steps);
}

double path_length(const Eigen::MatrixXd& path, const Eigen::MatrixXd& velocities,
                   const MetricProvider& metric, double a, double b) {
  const Eigen::Index n = path.rows() - 1;
  if (n < 1) return 0.0;
  if (velocities.rows() < n || velocities.cols() != path.cols())
    throw std::invalid_argument("path_length: velocities not aligned with path");
  const double h = (b - a) / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd f = velocities.row(i).transpose();
    const double q = f.dot(metric.metric(path.row(i).transpose()) * f);
    total += std::sqrt(std::max(q, 0.0)) * h;
  }
  return total;
}

namespace {

struct Stage {
  nn::ForwardCache cache;
  Eigen::VectorXd k;
};

struct Step {
  Eigen::VectorXd y;
  std::array<Stage, 4> stages;
};

constexpr std::array<double, 4> kStageWeights{1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0};

Eigen::VectorXd stage_state(const Stage& stage, Eigen::Index d) { return stage.cache.inputs[0].col(0).tail(d); }

Eigen::VectorXd eval_stage(const nn::Mlp& net, double t, const Eigen::VectorXd& y, Stage& stage) {
  stage.k = net.forward_batch(time_state(t, y), &stage.cache).col(0);
  return stage.k;
}

// Unrolled forward pass keeping every network evaluation for backprop.
Eigen::VectorXd unroll(const nn::Mlp& net, const Eigen::VectorXd& start, double a, double h,
                       int n_steps, std::vector<Step>& steps) {
  steps.resize(static_cast<std::size_t>(n_steps));
  Eigen::VectorXd y = start;
  for (int i = 0; i < n_steps; ++i) {
    Step& s = steps[static_cast<std::size_t>(i)];
    const double t = a + i * h;
    s.y = y;
    const Eigen::VectorXd k1 = eval_stage(net, t, y, s.stages[0]);
    const Eigen::VectorXd k2 = eval_stage(net, t + 0.5 * h, y + 0.5 * h * k1, s.stages[1]);
    const Eigen::VectorXd k3 = eval_stage(net, t + 0.5 * h, y + 0.5 * h * k2, s.stages[2]);
    const Eigen::VectorXd k4 = eval_stage(net, t + h, y + h * k3, s.stages[3]);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

double stage_length(const std::vector<Step>& steps, const MetricProvider& metric, double h) {
  double total = 0.0;
  for (const Step& s : steps)
    for (std::size_t st = 0; st < 4; ++st) {
      const Eigen::VectorXd& f = s.stages[st].k;
      const double q = f.dot(metric.metric(stage_state(s.stages[st], f.size())) * f);
      total += h * kStageWeights[st] * std::sqrt(std::max(q, 0.0));
    }
  return total;
}

}  // namespace

GeodesicResult train_geodesic(const MetricProvider& metric, const Eigen::VectorXd& start,
                              const Eigen::VectorXd& target, const GeodesicConfig& config) {
  const Eigen::Index d = start.size();
  if (target.size() != d || metric.dim() != d)
    throw std::invalid_argument("train_geodesic: start, target and metric dimensions differ");
  if (config.n_steps < 1) throw std::invalid_argument("train_geodesic: n_steps must be >= 1");
  if (!(config.b > config.a)) throw std::invalid_argument("train_geodesic: need b > a");
  if (!(config.lambda > 0.0)) throw std::invalid_argument("train_geodesic: lambda must be positive");

  OdeField field(static_cast<int>(d), config.width, config.hidden_layers, config.seed);
  nn::Mlp& net = field.net();
  nn::AdamWState state = nn::AdamWState::for_params(net.params());
  const double h = (config.b - config.a) / config.n_steps;
  const int n = config.n_steps;

  GeodesicResult result;
  result.a = config.a;
  result.b = config.b;
  std::vector<Step> steps;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Eigen::VectorXd end = unroll(net, start, config.a, h, n, steps);
    const Eigen::VectorXd miss = end - target;
    double loss = config.lambda * miss.squaredNorm();

    nn::Params grads = nn::zeros_like(net.params());
    Eigen::VectorXd y_bar = 2.0 * config.lambda * miss;
    for (int i = n - 1; i >= 0; --i) {
      Step& s = steps[static_cast<std::size_t>(i)];
      std::array<Eigen::VectorXd, 4> k_bar;
      k_bar[0] = (h / 6.0) * y_bar;
      k_bar[1] = (h / 3.0) * y_bar;
      k_bar[2] = (h / 3.0) * y_bar;
      k_bar[3] = (h / 6.0) * y_bar;
      Eigen::VectorXd y_bar_prev = y_bar;

      std::array<Eigen::VectorXd, 4> state_bar;
      for (auto& v : state_bar) v = Eigen::VectorXd::Zero(d);
      if (config.length_term) {
        for (std::size_t st = 0; st < 4; ++st) {
          const Eigen::VectorXd& f = s.stages[st].k;
          const Eigen::VectorXd ys = stage_state(s.stages[st], d);
          const Eigen::VectorXd gf = metric.metric(ys) * f;
          const double q = f.dot(gf);
          if (!(q > 0.0)) continue;
          const double root = std::sqrt(q);
          const double w = h * kStageWeights[st];
          loss += w * root;
          k_bar[st] += (w / root) * gf;
          const auto partials = metric.metric_partials(ys);
          for (Eigen::Index k = 0; k < d; ++k)
            state_bar[st](k) = w * f.dot(partials[static_cast<std::size_t>(k)] * f) / (2.0 * root);
        }
      }

      // Stage inputs: (t, y), (t, y + h/2 k1), (t, y + h/2 k2), (t, y + h k3).
      const std::array<double, 4> feed{0.0, 0.5 * h, 0.5 * h, h};
      for (int st = 3; st >= 0; --st) {
        const auto idx = static_cast<std::size_t>(st);
        const Eigen::MatrixXd in_bar = net.backward(s.stages[idx].cache, k_bar[idx], grads);
        const Eigen::VectorXd u = in_bar.col(0).tail(d) + state_bar[idx];
        y_bar_prev += u;
        if (st > 0) k_bar[idx - 1] += feed[idx] * u;
      }
      y_bar = std::move(y_bar_prev);
    }

    if (!std::isfinite(loss))
      throw std::runtime_error("train_geodesic: non-finite loss at epoch " + std::to_string(epoch));
    result.loss_history.push_back(loss);
    nn::adamw_step(net.params(), grads, state, config.learning_rate, config.weight_decay);
  }

  unroll(net, start, config.a, h, n, steps);
  result.path = rk4_integrate(field, start, config.a, config.b, n);
  result.velocities.resize(n, d);
  for (int i = 0; i < n; ++i) result.velocities.row(i) = steps[static_cast<std::size_t>(i)].stages[0].k.transpose();
  result.length = stage_length(steps, metric, h);
  result.left_endpoint_length = path_length(result.path, result.velocities, metric, config.a, config.b);
  result.endpoint_error = (result.path.row(n).transpose() - target).norm();
  return result;
}

double sphere_great_circle(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2) {
  auto embed = [](const Eigen::Vector2d& p) {
    return Eigen::Vector3d(std::sin(p(0)) * std::cos(p(1)), std::sin(p(0)) * std::sin(p(1)),
                           std::cos(p(0)));
  };
  const double c = std::clamp(embed(p1).dot(embed(p2)), -1.0, 1.0);
  return std::acos(c);
}

double swiss_roll_geodesic(const PointCloud& pc, Eigen::Index i, Eigen::Index j) {
  if (!pc.intrinsic) throw std::invalid_argument("swiss_roll_geodesic: point cloud has no intrinsic coordinates");
  return (pc.intrinsic->row(i) - pc.intrinsic->row(j)).norm();
}

}  // namespace nfim::geodesic
