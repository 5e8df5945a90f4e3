#ifndef PLAST_GAIN_HPP
#define PLAST_GAIN_HPP

#include <cstdint>
#include <vector>

#include "plast/net.hpp"
#include "plast/tasks.hpp"

namespace plast {

struct GainConfig {
  std::size_t k = 1;
  double eta = 1e-3;
  std::size_t m = 4;          // rollout mini-batch size
  std::size_t rollouts = 128;
  std::uint64_t seed = 0;
};

struct GainEstimate {
  double gain = 0.0;
  double pre_loss = 0.0;
  double mean_post_loss = 0.0;
  std::vector<double> per_rollout_post_losses;
  double std_error = 0.0;
  std::size_t excluded_rollouts = 0;  // diverged (non-finite loss)
};

// Mini-batch k-step gain: each rollout runs k SGD steps from the checkpoint
// on fresh with-replacement mini-batches; post losses are measured on the
// full validation set. Diverged rollouts are excluded and counted.
GainEstimate k_step_gain(const Checkpoint& ckpt, const Dataset& valset,
                         LossKind loss, const GainConfig& cfg);

// Deterministic gain under exact population-gradient descent on a
// finite-support task.
double full_support_gain(const Checkpoint& ckpt, const Task& full_task,
                         std::size_t k, double eta);

// Predicted outputs after one full-support step from a zero-output-layer
// two-layer net: -eta * G(W) * q(theta), G(W) = Phi Phi^T / n.
std::vector<double> one_step_output(const Checkpoint& ckpt, const Task& full_task,
                                    double eta);

struct BoundCheck {
  double eta = 0.0;
  double alpha = 0.0;     // eta * beta / R
  double gain = 0.0;      // exhaustive-expectation one-step gain
  double bound = 0.0;     // alpha (1 - alpha) / beta * OR
  double margin = 0.0;    // gain - bound
  bool holds = false;
  bool skipped = false;   // eta >= R / beta
};

struct BoundReport {
  double beta = 0.0;
  double strength = 0.0;
  double reliability = 0.0;
  double or_value = 0.0;
  std::vector<BoundCheck> checks;
};

// Certifies the one-step lower bound gain >= alpha(1-alpha)/beta * OR on a
// task whose smoothness constant beta is known exactly (linear-model
// quadratics). The one-step expectation is exhaustive over all N^m ordered
// mini-batches.
BoundReport verify_one_step_bound(const Dataset& support, LossKind loss,
                                  const Checkpoint& ckpt,
                                  const std::vector<double>& eta_grid,
                                  double beta, std::size_t m);

}  // namespace plast

#endif  // PLAST_GAIN_HPP
