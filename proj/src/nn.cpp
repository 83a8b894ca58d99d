#include "neuralfim/nn.hpp"

#include "neuralfim/infogeo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nfim::nn {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "selu") return Activation::Selu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

OutputMode parse_output_mode(const std::string& name) {
  if (name == "simplex") return OutputMode::Simplex;
  if (name == "linear") return OutputMode::Linear;
  throw std::invalid_argument("unknown output mode '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "selu"; }
std::string to_string(OutputMode m) { return m == OutputMode::Simplex ? "simplex" : "linear"; }

Params zeros_like(const Params& p) {
  Params z(p.size());
  for (std::size_t l = 0; l < p.size(); ++l) {
    z[l].W = Eigen::MatrixXd::Zero(p[l].W.rows(), p[l].W.cols());
    z[l].b = Eigen::VectorXd::Zero(p[l].b.size());
  }
  return z;
}

namespace {

double activate(Activation a, double z) {
  if (a == Activation::Relu) return z > 0.0 ? z : 0.0;
  return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
}

double activate_deriv(Activation a, double z) {
  if (a == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
  return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
}

// Column-wise softmax with max shift.
Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd P(Z.rows(), Z.cols());
  for (Eigen::Index c = 0; c < Z.cols(); ++c) {
    const double mx = Z.col(c).maxCoeff();
    P.col(c) = (Z.col(c).array() - mx).exp().matrix();
    P.col(c) /= P.col(c).sum();
  }
  return P;
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_dims, Activation hidden, OutputMode mode, Params params)
    : dims_(std::move(layer_dims)), hidden_(hidden), mode_(mode), params_(std::move(params)) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  if (params_.size() != dims_.size() - 1)
    throw std::invalid_argument("Mlp: layer count does not match dims");
  for (std::size_t l = 0; l < params_.size(); ++l) {
    if (dims_[l] < 1 || dims_[l + 1] < 1) throw std::invalid_argument("Mlp: dims must be positive");
    if (params_[l].W.rows() != dims_[l + 1] || params_[l].W.cols() != dims_[l] ||
        params_[l].b.size() != dims_[l + 1])
      throw std::invalid_argument("Mlp: parameter shape mismatch at layer " + std::to_string(l));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : params_) n += static_cast<std::size_t>(layer.W.size() + layer.b.size());
  return n;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x, nullptr).col(0);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& X, ForwardCache* cache) const {
  if (X.rows() != input_dim())
    throw std::invalid_argument("Mlp::forward: expected input dim " + std::to_string(input_dim()) +
                                ", got " + std::to_string(X.rows()));
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  Eigen::MatrixXd a = X;
  const std::size_t L = params_.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = params_[l].W * a;
    z.colwise() += params_[l].b;
    if (cache) {
      cache->inputs.push_back(a);
      cache->preacts.push_back(z);
    }
    if (l + 1 < L)
      a = z.unaryExpr([this](double v) { return activate(hidden_, v); });
    else
      a = std::move(z);
  }
  if (mode_ == OutputMode::Simplex) a = softmax_cols(a);
  if (cache) cache->output = a;
  return a;
}

Eigen::MatrixXd Mlp::jacobian_input(const Eigen::VectorXd& x, Eigen::VectorXd* output) const {
  ForwardCache cache;
  const Eigen::VectorXd out = forward_batch(x, &cache).col(0);
  const std::size_t L = params_.size();
  Eigen::MatrixXd J = params_[0].W;
  for (std::size_t l = 1; l < L; ++l) {
    const Eigen::VectorXd& z = cache.preacts[l - 1].col(0);
    const Eigen::VectorXd dz = z.unaryExpr([this](double v) { return activate_deriv(hidden_, v); });
    J = params_[l].W * (dz.asDiagonal() * J);
  }
  if (mode_ == OutputMode::Simplex) {
    const Eigen::RowVectorXd pJ = out.transpose() * J;
    J = out.asDiagonal() * J;
    J.noalias() -= out * pJ;
  }
  if (output) *output = out;
  return J;
}

Eigen::MatrixXd Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_out,
                              Params& grads) const {
  const std::size_t L = params_.size();
  Eigen::MatrixXd delta;
  if (mode_ == OutputMode::Simplex) {
    // dL/dz = p * (g - <p, g>) per column
    const Eigen::MatrixXd& P = cache.output;
    const Eigen::RowVectorXd dots = (P.array() * grad_out.array()).colwise().sum();
    delta = P.array() * (grad_out.rowwise() - dots).array();
  } else {
    delta = grad_out;
  }
  for (std::size_t l = L; l-- > 0;) {
    grads[l].W.noalias() += delta * cache.inputs[l].transpose();
    grads[l].b += delta.rowwise().sum();
    Eigen::MatrixXd up = params_[l].W.transpose() * delta;
    if (l > 0) {
      const Eigen::MatrixXd& z = cache.preacts[l - 1];
      delta = up.array() * z.unaryExpr([this](double v) { return activate_deriv(hidden_, v); }).array();
    } else {
      delta = std::move(up);
    }
  }
  return delta;
}

Mlp init_mlp(const std::vector<int>& layer_dims, Activation hidden, OutputMode mode,
             std::uint64_t seed) {
  if (layer_dims.size() < 2) throw std::invalid_argument("init_mlp: need at least two layer dims");
  std::mt19937_64 rng(seed);
  Params params;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l], fan_out = layer_dims[l + 1];
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("init_mlp: dims must be positive");
    const double scale = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> unif(-scale, scale);
    Layer layer;
    layer.W.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.W(r, c) = unif(rng);
    layer.b = Eigen::VectorXd::Zero(fan_out);
    params.push_back(std::move(layer));
  }
  return Mlp(layer_dims, hidden, mode, std::move(params));
}

AdamWState AdamWState::for_params(const Params& p) {
  AdamWState s;
  s.m = zeros_like(p);
  s.v = zeros_like(p);
  return s;
}

void adamw_step(Params& params, const Params& grads, AdamWState& state, double lr, double wd) {
  if (grads.size() != params.size()) throw std::invalid_argument("adamw_step: layer count mismatch");
  if (state.m.size() != params.size()) {
    if (!state.m.empty()) throw std::invalid_argument("adamw_step: state shape mismatch");
    state.m = zeros_like(params);
    state.v = zeros_like(params);
  }
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (grads[l].W.rows() != params[l].W.rows() || grads[l].W.cols() != params[l].W.cols() ||
        grads[l].b.size() != params[l].b.size())
      throw std::invalid_argument("adamw_step: gradient shape mismatch at layer " + std::to_string(l));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    p *= (1.0 - lr * wd);
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].W, grads[l].W, state.m[l].W, state.v[l].W);
    update(params[l].b, grads[l].b, state.m[l].b, state.v[l].b);
  }
}

double loss_match_rows(const Mlp& mlp, const Eigen::MatrixXd& X, const Eigen::MatrixXd& rows) {
  if (rows.rows() != X.rows() || rows.cols() != mlp.output_dim())
    throw std::invalid_argument("loss_match_rows: batch rows must be B x output_dim");
  const Eigen::MatrixXd out = mlp.forward_batch(X.transpose());
  double s = 0.0;
  for (Eigen::Index b = 0; b < X.rows(); ++b) s += (out.col(b) - rows.row(b).transpose()).norm();
  return s / static_cast<double>(X.rows());
}

LossGrad loss_match_rows_grad(const Mlp& mlp, const Eigen::MatrixXd& X, const Eigen::MatrixXd& rows) {
  if (rows.rows() != X.rows() || rows.cols() != mlp.output_dim())
    throw std::invalid_argument("loss_match_rows: batch rows must be B x output_dim");
  ForwardCache cache;
  const Eigen::MatrixXd out = mlp.forward_batch(X.transpose(), &cache);
  const double inv_b = 1.0 / static_cast<double>(X.rows());
  LossGrad lg;
  lg.grads = zeros_like(mlp.params());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  for (Eigen::Index b = 0; b < X.rows(); ++b) {
    const Eigen::VectorXd diff = out.col(b) - rows.row(b).transpose();
    const double n = diff.norm();
    lg.loss += n * inv_b;
    if (n > 0.0) g.col(b) = diff * (inv_b / n);
  }
  mlp.backward(cache, g, lg.grads);
  return lg;
}

static void check_pairs(const IndexPairs& pairs, Eigen::Index batch, const Eigen::MatrixXd& T) {
  if (T.rows() != batch) throw std::invalid_argument("loss_jsd_phate: targets misaligned with batch");
  if (pairs.empty()) throw std::invalid_argument("loss_jsd_phate: no pairs");
  for (const auto& [a, b] : pairs)
    if (a < 0 || b < 0 || a >= batch || b >= batch)
      throw std::out_of_range("loss_jsd_phate: pair index outside batch");
}

double loss_jsd_phate(const Mlp& mlp, const Eigen::MatrixXd& X, const IndexPairs& pairs,
                      const Eigen::MatrixXd& T) {
  if (mlp.output_mode() != OutputMode::Simplex)
    throw std::invalid_argument("loss_jsd_phate: network must have simplex output");
  check_pairs(pairs, X.rows(), T);
  const Eigen::MatrixXd out = mlp.forward_batch(X.transpose());
  double s = 0.0;
  for (const auto& [a, b] : pairs) {
    const double r = infogeo::jsd(out.col(a), out.col(b)) - (T.row(a) - T.row(b)).norm();
    s += r * r;
  }
  return s / static_cast<double>(pairs.size());
}

LossGrad loss_jsd_phate_grad(const Mlp& mlp, const Eigen::MatrixXd& X, const IndexPairs& pairs,
                             const Eigen::MatrixXd& T) {
  if (mlp.output_mode() != OutputMode::Simplex)
    throw std::invalid_argument("loss_jsd_phate: network must have simplex output");
  check_pairs(pairs, X.rows(), T);
  ForwardCache cache;
  const Eigen::MatrixXd out = mlp.forward_batch(X.transpose(), &cache);
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  LossGrad lg;
  lg.grads = zeros_like(mlp.params());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  for (const auto& [a, b] : pairs) {
    const auto p = out.col(a);
    const auto q = out.col(b);
    const double d = infogeo::jsd(p, q);
    const double r = d - (T.row(a) - T.row(b)).norm();
    lg.loss += r * r * inv_n;
    if (d < 1e-12) continue;  // jsd is not differentiable at p == q
    // d js / d p_k = 1/2 log(p_k / m_k), and d jsd = d js / (2 jsd)
    const double scale = 2.0 * r * inv_n / (2.0 * d);
    for (Eigen::Index k = 0; k < out.rows(); ++k) {
      const double m = 0.5 * (p(k) + q(k));
      g(k, a) += scale * 0.5 * std::log(p(k) / m);
      g(k, b) += scale * 0.5 * std::log(q(k) / m);
    }
  }
  mlp.backward(cache, g, lg.grads);
  return lg;
}

TrainResult train(const PointCloud& pc, const mds::EmbeddingTargets& targets,
                  const std::vector<int>& hidden_and_output, const TrainConfig& config,
                  Activation hidden) {
  if (targets.Y.rows() != pc.size())
    throw std::invalid_argument("train: target rows do not match point count");
  if (config.batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  if (config.pairs_per_batch < 1) throw std::invalid_argument("train: pairs_per_batch must be >= 1");
  std::vector<int> dims{static_cast<int>(pc.dim())};
  dims.insert(dims.end(), hidden_and_output.begin(), hidden_and_output.end());

  TrainResult result{init_mlp(dims, hidden, OutputMode::Simplex, config.seed), {}};
  AdamWState state = AdamWState::for_params(result.model.params());
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const Eigen::Index n = pc.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size, n - start);
      if (bs < 2) continue;
      Eigen::MatrixXd X(bs, pc.dim());
      Eigen::MatrixXd T(bs, targets.Y.cols());
      for (Eigen::Index i = 0; i < bs; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        X.row(i) = pc.points.row(src);
        T.row(i) = targets.Y.row(src);
      }
      IndexPairs pairs;
      pairs.reserve(static_cast<std::size_t>(config.pairs_per_batch));
      std::uniform_int_distribution<Eigen::Index> pick(0, bs - 1);
      std::uniform_int_distribution<Eigen::Index> pick_other(0, bs - 2);
      for (int k = 0; k < config.pairs_per_batch; ++k) {
        const Eigen::Index a = pick(rng);
        Eigen::Index b = pick_other(rng);
        if (b >= a) ++b;
        pairs.emplace_back(a, b);
      }
      LossGrad lg = loss_jsd_phate_grad(result.model, X, pairs, T);
      if (!std::isfinite(lg.loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      adamw_step(result.model, lg.grads, state, config);
      total += lg.loss;
      ++batches;
    }
    result.loss_history.push_back(batches ? total / batches : 0.0);
  }
  return result;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

constexpr const char* kCheckpointFormat = "neuralfim-mlp";
constexpr int kCheckpointVersion = 1;

}  // namespace

std::string checkpoint_to_string(const Mlp& mlp) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["layer_dims"] = mlp.layer_dims();
  j["hidden_activation"] = to_string(mlp.hidden_activation());
  j["output_mode"] = to_string(mlp.output_mode());
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : mlp.params()) {
    nlohmann::json lj;
    lj["W"] = matrix_json(layer.W);
    lj["b"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j.dump(1);
}

Mlp checkpoint_from_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != kCheckpointFormat)
    throw std::runtime_error("checkpoint: unrecognized format");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + j.at("version").dump());
  const auto dims = j.at("layer_dims").get<std::vector<int>>();
  Params params;
  for (const auto& lj : j.at("layers")) {
    const auto& rows = lj.at("W");
    Layer layer;
    layer.W.resize(static_cast<Eigen::Index>(rows.size()),
                   rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        layer.W(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    const auto b = lj.at("b").get<std::vector<double>>();
    layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    params.push_back(std::move(layer));
  }
  return Mlp(dims, parse_activation(j.at("hidden_activation").get<std::string>()),
             parse_output_mode(j.at("output_mode").get<std::string>()), std::move(params));
}

void save_checkpoint(const std::string& path, const Mlp& mlp) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << checkpoint_to_string(mlp);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace nfim::nn
