#include "plast/net.hpp"

#include <cmath>
#include <stdexcept>

namespace plast {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double softplus(double z) {
  // log(1 + exp(z)) without overflow.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    n += layer_in(l) * layer_out(l);
    if (use_bias) n += layer_out(l);
  }
  return n;
}

std::size_t MlpSpec::weight_offset(std::size_t l) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < l; ++k) {
    off += layer_in(k) * layer_out(k);
    if (use_bias) off += layer_out(k);
  }
  return off;
}

std::size_t MlpSpec::bias_offset(std::size_t l) const {
  return weight_offset(l) + layer_in(l) * layer_out(l);
}

AdamState AdamState::init(std::size_t param_count, double lr_) {
  AdamState s;
  s.m.assign(param_count, 0.0);
  s.v.assign(param_count, 0.0);
  s.lr = lr_;
  return s;
}

Checkpoint init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1 || spec.output_dim < 1)
    throw std::invalid_argument("init_mlp: dims must be >= 1");
  for (std::size_t w : spec.hidden_widths)
    if (w < 1) throw std::invalid_argument("init_mlp: hidden width must be >= 1");

  Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.theta.assign(spec.param_count(), 0.0);
  ckpt.meta.seed = seed;
  Rng rng(derive_seed(seed, "mlp-init"));
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.layer_in(l)));
    double* w = ckpt.theta.data() + spec.weight_offset(l);
    const std::size_t nw = spec.layer_in(l) * spec.layer_out(l);
    for (std::size_t i = 0; i < nw; ++i) w[i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return ckpt;
}

ForwardTrace forward(const Checkpoint& ckpt, const Matrix& X) {
  const MlpSpec& spec = ckpt.spec;
  if (X.cols != spec.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");

  const std::size_t L = spec.hidden_widths.size();
  ForwardTrace tr;
  tr.activations.reserve(L);

  const Matrix* cur = &X;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = spec.layer_in(l);
    const std::size_t out = spec.layer_out(l);
    const double* w = ckpt.theta.data() + spec.weight_offset(l);
    const double* b = spec.use_bias ? ckpt.theta.data() + spec.bias_offset(l) : nullptr;
    Matrix a(X.rows, out);
    for (std::size_t r = 0; r < X.rows; ++r) {
      const double* xin = &cur->data[r * in];
      double* arow = &a.data[r * out];
      for (std::size_t j = 0; j < out; ++j) {
        double s = b ? b[j] : 0.0;
        const double* wrow = w + j * in;
        for (std::size_t k = 0; k < in; ++k) s += wrow[k] * xin[k];
        arow[j] = s > 0.0 ? s : 0.0;
      }
    }
    tr.activations.push_back(std::move(a));
    cur = &tr.activations.back();
  }

  tr.penultimate = *cur;

  const std::size_t l = L;
  const std::size_t in = spec.layer_in(l);
  const std::size_t out = spec.layer_out(l);
  const double* w = ckpt.theta.data() + spec.weight_offset(l);
  const double* b = spec.use_bias ? ckpt.theta.data() + spec.bias_offset(l) : nullptr;
  tr.output = Matrix(X.rows, out);
  for (std::size_t r = 0; r < X.rows; ++r) {
    const double* xin = &cur->data[r * in];
    double* orow = &tr.output.data[r * out];
    for (std::size_t j = 0; j < out; ++j) {
      double s = b ? b[j] : 0.0;
      const double* wrow = w + j * in;
      for (std::size_t k = 0; k < in; ++k) s += wrow[k] * xin[k];
      orow[j] = s;
    }
  }
  return tr;
}

double pointwise_loss(LossKind loss, std::span<const double> z,
                      std::span<const double> y) {
  switch (loss) {
    case LossKind::MseHalf: {
      const double d = z[0] - y[0];
      return 0.5 * d * d;
    }
    case LossKind::MseMean: {
      double s = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        const double d = z[k] - y[k];
        s += d * d;
      }
      return s / static_cast<double>(z.size());
    }
    case LossKind::Logistic01:
      return softplus(z[0]) - y[0] * z[0];
    case LossKind::CrossEntropy: {
      const auto c = static_cast<std::size_t>(y[0]);
      if (c >= z.size())
        throw std::invalid_argument("pointwise_loss: class index out of range");
      double zmax = z[0];
      for (double v : z) zmax = std::max(zmax, v);
      double se = 0.0;
      for (double v : z) se += std::exp(v - zmax);
      return zmax + std::log(se) - z[c];
    }
  }
  throw std::logic_error("pointwise_loss: unknown loss kind");
}

namespace {

// dl/dz for one sample, written into dz (size output_dim).
void loss_backward(LossKind loss, std::span<const double> z,
                   std::span<const double> y, std::span<double> dz) {
  switch (loss) {
    case LossKind::MseHalf:
      dz[0] = z[0] - y[0];
      return;
    case LossKind::MseMean: {
      const double inv = 2.0 / static_cast<double>(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) dz[k] = inv * (z[k] - y[k]);
      return;
    }
    case LossKind::Logistic01:
      dz[0] = sigmoid(z[0]) - y[0];
      return;
    case LossKind::CrossEntropy: {
      const auto c = static_cast<std::size_t>(y[0]);
      double zmax = z[0];
      for (double v : z) zmax = std::max(zmax, v);
      double se = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        dz[k] = std::exp(z[k] - zmax);
        se += dz[k];
      }
      for (std::size_t k = 0; k < z.size(); ++k) dz[k] /= se;
      dz[c] -= 1.0;
      return;
    }
  }
  throw std::logic_error("loss_backward: unknown loss kind");
}

// Per-sample forward keeping the activation stack, then backprop of
// `delta_out` (already scaled) into `grad`. Returns the raw outputs in `z`.
struct Workspace {
  std::vector<std::vector<double>> act;  // hidden activations, one per layer
  std::vector<double> z;
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

void sample_forward(const Checkpoint& ckpt, const double* x, Workspace& ws) {
  const MlpSpec& spec = ckpt.spec;
  const std::size_t L = spec.hidden_widths.size();
  ws.act.resize(L);
  const double* cur = x;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = spec.layer_in(l);
    const std::size_t out = spec.layer_out(l);
    const double* w = ckpt.theta.data() + spec.weight_offset(l);
    const double* b = spec.use_bias ? ckpt.theta.data() + spec.bias_offset(l) : nullptr;
    ws.act[l].resize(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = b ? b[j] : 0.0;
      const double* wrow = w + j * in;
      for (std::size_t k = 0; k < in; ++k) s += wrow[k] * cur[k];
      ws.act[l][j] = s > 0.0 ? s : 0.0;
    }
    cur = ws.act[l].data();
  }
  const std::size_t l = L;
  const std::size_t in = spec.layer_in(l);
  const std::size_t out = spec.layer_out(l);
  const double* w = ckpt.theta.data() + spec.weight_offset(l);
  const double* b = spec.use_bias ? ckpt.theta.data() + spec.bias_offset(l) : nullptr;
  ws.z.resize(out);
  for (std::size_t j = 0; j < out; ++j) {
    double s = b ? b[j] : 0.0;
    const double* wrow = w + j * in;
    for (std::size_t k = 0; k < in; ++k) s += wrow[k] * cur[k];
    ws.z[j] = s;
  }
}

void sample_backward(const Checkpoint& ckpt, const double* x, Workspace& ws,
                     double* grad) {
  const MlpSpec& spec = ckpt.spec;
  const std::size_t L = spec.hidden_widths.size();
  // ws.delta holds dl/dz on entry.
  for (std::size_t li = L + 1; li-- > 0;) {
    const std::size_t l = li;
    const std::size_t in = spec.layer_in(l);
    const std::size_t out = spec.layer_out(l);
    const double* input = (l == 0) ? x : ws.act[l - 1].data();
    double* gw = grad + spec.weight_offset(l);
    for (std::size_t j = 0; j < out; ++j) {
      const double d = ws.delta[j];
      if (d != 0.0) {
        double* gwrow = gw + j * in;
        for (std::size_t k = 0; k < in; ++k) gwrow[k] += d * input[k];
      }
    }
    if (spec.use_bias) {
      double* gb = grad + spec.bias_offset(l);
      for (std::size_t j = 0; j < out; ++j) gb[j] += ws.delta[j];
    }
    if (l == 0) break;
    const double* w = ckpt.theta.data() + spec.weight_offset(l);
    ws.delta_prev.assign(in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      const double d = ws.delta[j];
      if (d == 0.0) continue;
      const double* wrow = w + j * in;
      for (std::size_t k = 0; k < in; ++k) ws.delta_prev[k] += d * wrow[k];
    }
    // ReLU subgradient: strictly positive pre-activation only.
    const std::vector<double>& a = ws.act[l - 1];
    ws.delta.resize(in);
    for (std::size_t k = 0; k < in; ++k)
      ws.delta[k] = a[k] > 0.0 ? ws.delta_prev[k] : 0.0;
  }
}

void check_labels(const Checkpoint& ckpt, const Dataset& batch, LossKind loss) {
  if (batch.X.cols != ckpt.spec.input_dim)
    throw std::invalid_argument("loss: input dimension mismatch");
  const std::size_t out = ckpt.spec.output_dim;
  switch (loss) {
    case LossKind::MseHalf:
    case LossKind::Logistic01:
      if (out != 1 || batch.Y.cols != 1)
        throw std::invalid_argument("loss: scalar loss needs scalar output/label");
      break;
    case LossKind::MseMean:
      if (batch.Y.cols != out)
        throw std::invalid_argument("loss: label dimension mismatch");
      break;
    case LossKind::CrossEntropy:
      if (batch.Y.cols != 1)
        throw std::invalid_argument("loss: cross-entropy label must be a class index");
      break;
  }
}

}  // namespace

LossGrad loss_and_grad(const Checkpoint& ckpt, const Dataset& batch,
                       LossKind loss, std::span<const std::size_t> indices) {
  check_labels(ckpt, batch, loss);
  const std::size_t n = indices.empty() ? batch.size() : indices.size();
  if (n == 0) throw std::invalid_argument("loss_and_grad: empty batch");

  LossGrad out;
  out.grad.assign(ckpt.theta.size(), 0.0);
  Workspace ws;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t r = indices.empty() ? t : indices[t];
    const double* x = &batch.X.data[r * batch.X.cols];
    const double* y = &batch.Y.data[r * batch.Y.cols];
    sample_forward(ckpt, x, ws);
    out.loss += pointwise_loss(loss, ws.z, {y, batch.Y.cols});
    ws.delta.resize(ws.z.size());
    loss_backward(loss, ws.z, {y, batch.Y.cols}, ws.delta);
    for (double& d : ws.delta) d *= inv_n;
    sample_backward(ckpt, x, ws, out.grad.data());
  }
  out.loss *= inv_n;
  return out;
}

double loss_value(const Checkpoint& ckpt, const Dataset& batch, LossKind loss,
                  std::span<const std::size_t> indices) {
  check_labels(ckpt, batch, loss);
  const std::size_t n = indices.empty() ? batch.size() : indices.size();
  if (n == 0) throw std::invalid_argument("loss_value: empty batch");
  Workspace ws;
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t r = indices.empty() ? t : indices[t];
    const double* x = &batch.X.data[r * batch.X.cols];
    const double* y = &batch.Y.data[r * batch.Y.cols];
    sample_forward(ckpt, x, ws);
    total += pointwise_loss(loss, ws.z, {y, batch.Y.cols});
  }
  return total / static_cast<double>(n);
}

std::vector<double> per_sample_output_grad(const Checkpoint& ckpt,
                                           std::span<const double> x) {
  if (ckpt.spec.output_dim != 1)
    throw std::invalid_argument(
        "per_sample_output_grad: vector-output networks unsupported");
  if (x.size() != ckpt.spec.input_dim)
    throw std::invalid_argument("per_sample_output_grad: input dimension mismatch");
  Workspace ws;
  sample_forward(ckpt, x.data(), ws);
  std::vector<double> grad(ckpt.theta.size(), 0.0);
  ws.delta.assign(1, 1.0);
  sample_backward(ckpt, x.data(), ws, grad.data());
  return grad;
}

Checkpoint sgd_step(const Checkpoint& ckpt, std::span<const double> grad,
                    double eta) {
  Checkpoint next = ckpt;
  sgd_step_inplace(next, grad, eta);
  return next;
}

void sgd_step_inplace(Checkpoint& ckpt, std::span<const double> grad,
                      double eta) {
  if (grad.size() != ckpt.theta.size())
    throw std::invalid_argument("sgd_step: gradient length mismatch");
  if (!all_finite(grad)) throw std::runtime_error("sgd_step: non-finite gradient");
  for (std::size_t i = 0; i < grad.size(); ++i) ckpt.theta[i] -= eta * grad[i];
  ++ckpt.meta.step_count;
}

Checkpoint adam_step(AdamState& state, const Checkpoint& ckpt,
                     std::span<const double> grad) {
  Checkpoint next = ckpt;
  adam_step_inplace(state, next, grad);
  return next;
}

void adam_step_inplace(AdamState& state, Checkpoint& ckpt,
                       std::span<const double> grad) {
  if (grad.size() != ckpt.theta.size() || state.m.size() != grad.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!all_finite(grad)) throw std::runtime_error("adam_step: non-finite gradient");
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    ckpt.theta[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  ++ckpt.meta.step_count;
}

Matrix hessian_exact(const Checkpoint& ckpt, const Dataset& data, LossKind loss,
                     std::size_t param_cap) {
  const std::size_t p = ckpt.theta.size();
  if (p > param_cap)
    throw std::invalid_argument("hessian_exact: parameter count exceeds cap");
  Matrix h(p, p);
  Checkpoint work = ckpt;
  for (std::size_t i = 0; i < p; ++i) {
    const double step = 1e-4 * (1.0 + std::abs(ckpt.theta[i]));
    work.theta[i] = ckpt.theta[i] + step;
    const LossGrad plus = loss_and_grad(work, data, loss);
    work.theta[i] = ckpt.theta[i] - step;
    const LossGrad minus = loss_and_grad(work, data, loss);
    work.theta[i] = ckpt.theta[i];
    const double inv = 1.0 / (2.0 * step);
    for (std::size_t j = 0; j < p; ++j)
      h(i, j) = (plus.grad[j] - minus.grad[j]) * inv;
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double s = 0.5 * (h(i, j) + h(j, i));
      h(i, j) = s;
      h(j, i) = s;
    }
  return h;
}

}  // namespace plast
