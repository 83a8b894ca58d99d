#pragma once

#include "neuralfim/data.hpp"
#include "neuralfim/mds.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nfim::nn {

enum class Activation { Relu, Selu };
enum class OutputMode { Simplex, Linear };

Activation parse_activation(const std::string& name);
OutputMode parse_output_mode(const std::string& name);
std::string to_string(Activation a);
std::string to_string(OutputMode m);

// Standard self-normalizing constants.
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

// Parameters and their gradients share this shape.
using Params = std::vector<Layer>;

Params zeros_like(const Params& p);

// Batched activations kept for backpropagation; one sample per column.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // input to layer l
  std::vector<Eigen::MatrixXd> preacts;      // W_l a + b_l
  Eigen::MatrixXd output;                    // after softmax in simplex mode
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_dims, Activation hidden, OutputMode mode, Params params);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  const std::vector<int>& layer_dims() const { return dims_; }
  Activation hidden_activation() const { return hidden_; }
  OutputMode output_mode() const { return mode_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // X is d x B (one sample per column); returns m x B.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, ForwardCache* cache = nullptr) const;

  // d(output)/d(input), m x d, including the softmax in simplex mode. The
  // forward output is stored in *output when given.
  Eigen::MatrixXd jacobian_input(const Eigen::VectorXd& x, Eigen::VectorXd* output = nullptr) const;

  // grad_out is dL/d(output), m x B. Accumulates parameter gradients into
  // grads (same shape as params) and returns dL/d(input), d x B.
  Eigen::MatrixXd backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_out,
                           Params& grads) const;

  std::size_t parameter_count() const;

 private:
  std::vector<int> dims_;
  Activation hidden_ = Activation::Relu;
  OutputMode mode_ = OutputMode::Linear;
  Params params_;
};

// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
Mlp init_mlp(const std::vector<int>& layer_dims, Activation hidden, OutputMode mode,
             std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 150;
  int batch_size = 64;
  double weight_decay = 1e-2;
  std::uint64_t seed = 0;
  int pairs_per_batch = 256;
};

struct AdamWState {
  Params m;
  Params v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamWState for_params(const Params& p);
};

// Decoupled weight decay: p <- p - lr*wd*p, then the bias-corrected Adam step.
void adamw_step(Params& params, const Params& grads, AdamWState& state, double learning_rate,
                double weight_decay);
inline void adamw_step(Mlp& mlp, const Params& grads, AdamWState& state, const TrainConfig& config) {
  adamw_step(mlp.params(), grads, state, config.learning_rate, config.weight_decay);
}

struct LossGrad {
  double loss = 0.0;
  Params grads;
};

// Mean over the batch of |phi(x_b) - R_b|_2. X is B x d, rows is B x m.
double loss_match_rows(const Mlp& mlp, const Eigen::MatrixXd& X, const Eigen::MatrixXd& rows);
LossGrad loss_match_rows_grad(const Mlp& mlp, const Eigen::MatrixXd& X, const Eigen::MatrixXd& rows);

// Mean over pairs of (jsd(phi(x_a), phi(x_b)) - |T_a - T_b|)^2. X is B x d and
// T is B x k, pair indices refer to rows of X and T.
using IndexPairs = std::vector<std::pair<Eigen::Index, Eigen::Index>>;
double loss_jsd_phate(const Mlp& mlp, const Eigen::MatrixXd& X, const IndexPairs& pairs,
                      const Eigen::MatrixXd& T);
LossGrad loss_jsd_phate_grad(const Mlp& mlp, const Eigen::MatrixXd& X, const IndexPairs& pairs,
                             const Eigen::MatrixXd& T);

struct TrainResult {
  Mlp model;
  std::vector<double> loss_history;  // mean batch loss per epoch
};

// hidden_and_output: layer sizes after the input layer, e.g. {100, 100, 50}.
TrainResult train(const PointCloud& pc, const mds::EmbeddingTargets& targets,
                  const std::vector<int>& hidden_and_output, const TrainConfig& config,
                  Activation hidden = Activation::Relu);

// Versioned JSON container; doubles round-trip exactly.
void save_checkpoint(const std::string& path, const Mlp& mlp);
Mlp load_checkpoint(const std::string& path);
std::string checkpoint_to_string(const Mlp& mlp);
Mlp checkpoint_from_string(const std::string& text);

}  // namespace nfim::nn
