#include "plast/gain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plast/diagnostics.hpp"

namespace plast {

namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

GainEstimate k_step_gain(const Checkpoint& ckpt, const Dataset& valset,
                         LossKind loss, const GainConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("k_step_gain: k must be >= 1");
  if (cfg.m < 1 || cfg.rollouts < 1)
    throw std::invalid_argument("k_step_gain: counts must be >= 1");

  GainEstimate est;
  est.pre_loss = loss_value(ckpt, valset, loss);
  if (est.pre_loss <= 0.0) return est;  // Def-1 zero branch

  std::vector<std::size_t> idx(cfg.m);
  std::vector<double> gains;
  gains.reserve(cfg.rollouts);
  for (std::size_t r = 0; r < cfg.rollouts; ++r) {
    Rng rng(derive_seed(cfg.seed, "gain-rollout", r));
    Checkpoint theta = ckpt;
    bool diverged = false;
    for (std::size_t s = 0; s < cfg.k; ++s) {
      for (std::size_t i = 0; i < cfg.m; ++i)
        idx[i] = rng.next_below(valset.size());
      const LossGrad lg = loss_and_grad(theta, valset, loss, idx);
      if (!std::isfinite(lg.loss)) {
        diverged = true;
        break;
      }
      sgd_step_inplace(theta, lg.grad, cfg.eta);
    }
    double post = std::numeric_limits<double>::quiet_NaN();
    if (!diverged) post = loss_value(theta, valset, loss);
    if (!std::isfinite(post)) {
      ++est.excluded_rollouts;
      continue;
    }
    est.per_rollout_post_losses.push_back(post);
    gains.push_back((est.pre_loss - post) / est.pre_loss);
  }
  if (gains.empty()) {
    est.gain = 0.0;
    return est;
  }
  double mean_post = 0.0;
  for (double p : est.per_rollout_post_losses) mean_post += p;
  mean_post /= static_cast<double>(est.per_rollout_post_losses.size());
  est.mean_post_loss = mean_post;
  est.gain = (est.pre_loss - mean_post) / est.pre_loss;
  if (gains.size() > 1) {
    double var = 0.0;
    for (double g : gains) var += (g - est.gain) * (g - est.gain);
    var /= static_cast<double>(gains.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(gains.size()));
  }
  return est;
}

double full_support_gain(const Checkpoint& ckpt, const Task& full_task,
                         std::size_t k, double eta) {
  if (!full_task.support)
    throw std::invalid_argument("full_support_gain: task has no finite support");
  const Dataset& sup = *full_task.support;
  const double pre = loss_value(ckpt, sup, full_task.loss);
  if (pre <= 0.0) return 0.0;
  Checkpoint theta = ckpt;
  for (std::size_t s = 0; s < k; ++s) {
    const LossGrad lg = loss_and_grad(theta, sup, full_task.loss);
    sgd_step_inplace(theta, lg.grad, eta);
  }
  return (pre - loss_value(theta, sup, full_task.loss)) / pre;
}

std::vector<double> one_step_output(const Checkpoint& ckpt, const Task& full_task,
                                    double eta) {
  if (!full_task.support)
    throw std::invalid_argument("one_step_output: task has no finite support");
  const MlpSpec& spec = ckpt.spec;
  if (spec.hidden_widths.size() != 1 || spec.use_bias || spec.output_dim != 1)
    throw std::invalid_argument("one_step_output: needs a bias-free two-layer net");
  // Output layer must be zero.
  const std::size_t l = 1;
  const double* v = ckpt.theta.data() + spec.weight_offset(l);
  for (std::size_t j = 0; j < spec.hidden_widths[0]; ++j)
    if (v[j] != 0.0)
      throw std::invalid_argument("one_step_output: output layer must be zero");

  const Dataset& sup = *full_task.support;
  const std::size_t n = sup.size();
  const ForwardTrace tr = forward(ckpt, sup.X);
  const Matrix& phi = tr.penultimate;  // n x M

  // q_i = dl/dz at the (zero) outputs.
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = tr.output(i, 0);
    switch (full_task.loss) {
      case LossKind::MseHalf:
        q[i] = z - sup.Y(i, 0);
        break;
      case LossKind::Logistic01: {
        const double sig = 1.0 / (1.0 + std::exp(-z));
        q[i] = sig - sup.Y(i, 0);
        break;
      }
      default:
        throw std::invalid_argument("one_step_output: unsupported loss kind");
    }
  }

  // f_{theta_1}(X) = -eta G q with G = Phi Phi^T / n.
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = &phi.data[i * phi.cols];
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double* rj = &phi.data[j * phi.cols];
      double dot = 0.0;
      for (std::size_t kk = 0; kk < phi.cols; ++kk) dot += ri[kk] * rj[kk];
      acc += dot * q[j];
    }
    out[i] = -eta * acc / static_cast<double>(n);
  }
  return out;
}

BoundReport verify_one_step_bound(const Dataset& support, LossKind loss,
                                  const Checkpoint& ckpt,
                                  const std::vector<double>& eta_grid,
                                  double beta, std::size_t m) {
  const std::size_t n = support.size();
  if (n == 0) throw std::invalid_argument("verify_one_step_bound: empty support");
  const double tuples_d = std::pow(double(n), double(m));
  if (tuples_d > 1e6)
    throw std::invalid_argument("verify_one_step_bound: support too large");
  const auto tuples = static_cast<std::size_t>(tuples_d);
  const std::size_t p = ckpt.theta.size();

  std::vector<std::vector<double>> per_sample(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx[1] = {i};
    per_sample[i] = loss_and_grad(ckpt, support, loss, {idx, 1}).grad;
  }
  const LossGrad full = loss_and_grad(ckpt, support, loss);

  BoundReport rep;
  rep.beta = beta;
  const ReliabilityEstimate rel =
      gradient_reliability_exhaustive(ckpt, support, loss, m);
  rep.reliability = rel.value;
  rep.strength = full.loss > 0.0 ? squared_norm(full.grad) / full.loss : 0.0;
  rep.or_value = rel.degenerate || full.loss <= 0.0
                     ? 0.0
                     : rep.strength * rep.reliability;

  // Pre-assemble every mini-batch gradient once; each eta reuses them.
  std::vector<std::vector<double>> batch_grads(tuples,
                                               std::vector<double>(p, 0.0));
  {
    std::vector<std::size_t> tuple(m, 0);
    for (std::size_t t = 0; t < tuples; ++t) {
      for (std::size_t s : tuple)
        for (std::size_t j = 0; j < p; ++j) batch_grads[t][j] += per_sample[s][j];
      const double inv_m = 1.0 / static_cast<double>(m);
      for (double& v : batch_grads[t]) v *= inv_m;
      for (std::size_t d = 0; d < m; ++d) {
        if (++tuple[d] < n) break;
        tuple[d] = 0;
      }
    }
  }

  Checkpoint theta = ckpt;
  for (double eta : eta_grid) {
    BoundCheck chk;
    chk.eta = eta;
    if (rep.reliability <= 0.0 || eta >= rep.reliability / beta || eta <= 0.0) {
      chk.skipped = true;
      rep.checks.push_back(chk);
      continue;
    }
    chk.alpha = eta * beta / rep.reliability;
    double mean_post = 0.0;
    for (std::size_t t = 0; t < tuples; ++t) {
      for (std::size_t j = 0; j < p; ++j)
        theta.theta[j] = ckpt.theta[j] - eta * batch_grads[t][j];
      mean_post += loss_value(theta, support, loss);
    }
    mean_post /= tuples_d;
    chk.gain = full.loss > 0.0 ? (full.loss - mean_post) / full.loss : 0.0;
    chk.bound = chk.alpha * (1.0 - chk.alpha) / beta * rep.or_value;
    chk.margin = chk.gain - chk.bound;
    chk.holds = chk.gain >= chk.bound - 1e-10;
    rep.checks.push_back(chk);
  }
  return rep;
}

}  // namespace plast
