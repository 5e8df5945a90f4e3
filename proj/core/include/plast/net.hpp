#ifndef PLAST_NET_HPP
#define PLAST_NET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plast/linalg.hpp"
#include "plast/rng.hpp"

namespace plast {

// Architecture of a fully connected ReLU network. hidden_widths may be
// empty, which yields a pure linear model.
struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_dim = 1;
  bool use_bias = true;

  std::size_t num_layers() const { return hidden_widths.size() + 1; }
  std::size_t layer_in(std::size_t l) const {
    return l == 0 ? input_dim : hidden_widths[l - 1];
  }
  std::size_t layer_out(std::size_t l) const {
    return l == hidden_widths.size() ? output_dim : hidden_widths[l];
  }
  std::size_t param_count() const;
  // Offset of layer l's weight block in the flat parameter vector; biases
  // (when enabled) follow the weights of each layer.
  std::size_t weight_offset(std::size_t l) const;
  std::size_t bias_offset(std::size_t l) const;

  bool operator==(const MlpSpec&) const = default;
};

struct CheckpointMeta {
  std::string run_id;
  std::int64_t task_index = 0;
  std::int64_t step_count = 0;
  std::uint64_t seed = 0;
};

// Flat parameter vector plus its architecture; the unit of everything the
// diagnostics and gain estimators operate on.
struct Checkpoint {
  MlpSpec spec;
  std::vector<double> theta;
  CheckpointMeta meta;
};

struct ForwardTrace {
  Matrix output;                    // batch x output_dim
  std::vector<Matrix> activations;  // post-ReLU, one per hidden layer
  Matrix penultimate;               // last hidden activation, or the input
};

enum class LossKind {
  MseHalf,       // 0.5 (z - y)^2, scalar output
  MseMean,       // mean over output dims of (z_k - y_k)^2
  Logistic01,    // log(1 + exp(z)) - y z, y in {0, 1}
  CrossEntropy,  // softmax cross-entropy, y holds the class index
};

// A labeled batch: row i of X pairs with row i of Y. For CrossEntropy, Y is
// a single column holding class indices.
struct Dataset {
  Matrix X;
  Matrix Y;

  std::size_t size() const { return X.rows; }
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  static AdamState init(std::size_t param_count, double lr);
};

// Weights uniform on [-sqrt(6/fan_in), sqrt(6/fan_in)], biases zero.
Checkpoint init_mlp(const MlpSpec& spec, std::uint64_t seed);

ForwardTrace forward(const Checkpoint& ckpt, const Matrix& X);

// Mean loss and its gradient over the batch (or over the rows selected by
// `indices` when non-empty). ReLU subgradient at 0 is 0.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
LossGrad loss_and_grad(const Checkpoint& ckpt, const Dataset& batch,
                       LossKind loss,
                       std::span<const std::size_t> indices = {});

// Mean loss only; cheaper than loss_and_grad for rollout scoring.
double loss_value(const Checkpoint& ckpt, const Dataset& batch, LossKind loss,
                  std::span<const std::size_t> indices = {});

// Gradient of the scalar network output (not the loss) w.r.t. all
// parameters. Rejects vector-output networks.
std::vector<double> per_sample_output_grad(const Checkpoint& ckpt,
                                           std::span<const double> x);

Checkpoint sgd_step(const Checkpoint& ckpt, std::span<const double> grad,
                    double eta);
// In-place variant used by tight rollout loops.
void sgd_step_inplace(Checkpoint& ckpt, std::span<const double> grad,
                      double eta);

Checkpoint adam_step(AdamState& state, const Checkpoint& ckpt,
                     std::span<const double> grad);
void adam_step_inplace(AdamState& state, Checkpoint& ckpt,
                       std::span<const double> grad);

// Central finite differences of the analytic gradient, symmetrized.
// Throws when the parameter count exceeds `param_cap`.
Matrix hessian_exact(const Checkpoint& ckpt, const Dataset& data,
                     LossKind loss, std::size_t param_cap = 2000);

double pointwise_loss(LossKind loss, std::span<const double> z,
                      std::span<const double> y);

}  // namespace plast

#endif  // PLAST_NET_HPP
