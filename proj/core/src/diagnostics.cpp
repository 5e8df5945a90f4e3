#include "plast/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plast {

namespace {

constexpr double kZeroCutoff = 1e-12;  // relative to the leading value

std::vector<double> nonzero_spectrum(const SpectralSummary& spectrum) {
  std::vector<double> vals;
  if (spectrum.values.empty()) return vals;
  const double top = std::abs(spectrum.values.front());
  if (top == 0.0) return vals;
  for (double v : spectrum.values)
    if (std::abs(v) > kZeroCutoff * top) vals.push_back(std::abs(v));
  return vals;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double effective_rank(const SpectralSummary& spectrum) {
  if (spectrum.kind != SpectrumKind::SingularValues)
    throw std::invalid_argument("effective_rank: expects singular values");
  const std::vector<double> sv = nonzero_spectrum(spectrum);
  if (sv.empty()) return 0.0;
  double total = 0.0;
  for (double v : sv) total += v;
  double entropy = 0.0;
  for (double v : sv) {
    const double p = v / total;
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

std::size_t energy_rank(const SpectralSummary& spectrum, double tau) {
  if (tau <= 0.0 || tau >= 1.0)
    throw std::invalid_argument("energy_rank: tau must lie in (0, 1)");
  const std::vector<double> sv = nonzero_spectrum(spectrum);
  if (sv.empty()) return 0;
  double total = 0.0;
  for (double v : sv) total += v * v;
  double cum = 0.0;
  for (std::size_t k = 0; k < sv.size(); ++k) {
    cum += sv[k] * sv[k];
    if (cum / total >= tau) return k + 1;
  }
  return sv.size();
}

Matrix representation_matrix(const Checkpoint& ckpt, const Matrix& X) {
  if (X.rows < 1)
    throw std::invalid_argument("representation_matrix: need at least one row");
  return forward(ckpt, X).penultimate;
}

Matrix output_jacobian(const Checkpoint& ckpt, const Matrix& X) {
  const std::size_t p = ckpt.theta.size();
  Matrix j(X.rows, p);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const std::vector<double> g =
        per_sample_output_grad(ckpt, {&X.data[i * X.cols], X.cols});
    std::copy(g.begin(), g.end(), &j.data[i * p]);
  }
  return j;
}

Matrix entk_matrix(const Checkpoint& ckpt, const Matrix& X) {
  return gram_aat(output_jacobian(ckpt, X));
}

SpectralSummary entk_spectrum(const Checkpoint& ckpt, const Matrix& X) {
  SpectralSummary sv = singular_values(output_jacobian(ckpt, X));
  for (double& v : sv.values) v = v * v;
  return sv;
}

std::size_t hessian_energy_rank_exact(const Checkpoint& ckpt,
                                      const Dataset& valset, LossKind loss,
                                      double tau, std::size_t param_cap) {
  const Matrix h = hessian_exact(ckpt, valset, loss, param_cap);
  SpectralSummary eig = sym_eigvals(h);
  // Singular values of a symmetric matrix are |eigenvalues|.
  SpectralSummary sv;
  sv.kind = SpectrumKind::SingularValues;
  sv.values = eig.values;
  for (double& v : sv.values) v = std::abs(v);
  std::sort(sv.values.begin(), sv.values.end(), std::greater<>());
  return energy_rank(sv, tau);
}

std::size_t hessian_gram_energy_rank(const Checkpoint& ckpt,
                                     const Dataset& valset, LossKind loss,
                                     std::size_t b, Rng& rng, double tau) {
  if (valset.size() == 0)
    throw std::invalid_argument("hessian_gram_energy_rank: empty validation set");
  const std::size_t p = ckpt.theta.size();
  Matrix g(b, p);  // row per sampled gradient; Gram below is G^T G up to layout
  std::size_t idx[1];
  for (std::size_t i = 0; i < b; ++i) {
    idx[0] = rng.next_below(valset.size());
    const LossGrad lg = loss_and_grad(ckpt, valset, loss, {idx, 1});
    std::copy(lg.grad.begin(), lg.grad.end(), &g.data[i * p]);
  }
  // Spectrum of G^T G (p x p) and G G^T (b x b) share nonzero eigenvalues.
  SpectralSummary eig = sym_eigvals(b <= p ? gram_aat(g) : gram_ata(g));
  SpectralSummary sv;
  sv.kind = SpectrumKind::SingularValues;
  for (double v : eig.values) sv.values.push_back(v > 0.0 ? v : 0.0);
  return energy_rank(sv, tau);
}

double active_neuron_fraction(const Checkpoint& ckpt, const Matrix& X,
                              double tau_act, double eps) {
  if (ckpt.spec.hidden_widths.empty())
    throw std::invalid_argument("active_neuron_fraction: no hidden layers");
  const ForwardTrace tr = forward(ckpt, X);
  std::size_t active = 0;
  std::size_t total = 0;
  const double inv_m = 1.0 / static_cast<double>(X.rows);
  for (const Matrix& a : tr.activations) {
    const std::size_t w = a.cols;
    std::vector<double> neuron_mean(w, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r)
      for (std::size_t j = 0; j < w; ++j) neuron_mean[j] += std::abs(a(r, j));
    double layer_mean = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      neuron_mean[j] *= inv_m;
      layer_mean += neuron_mean[j];
    }
    layer_mean /= static_cast<double>(w);
    for (std::size_t j = 0; j < w; ++j)
      if (neuron_mean[j] / (layer_mean + eps) >= tau_act) ++active;
    total += w;
  }
  return static_cast<double>(active) / static_cast<double>(total);
}

double gradient_strength(const Checkpoint& ckpt, const Dataset& valset,
                         LossKind loss) {
  const LossGrad lg = loss_and_grad(ckpt, valset, loss);
  if (lg.loss <= 0.0)
    throw std::invalid_argument("gradient_strength: loss is zero");
  return squared_norm(lg.grad) / lg.loss;
}

ReliabilityEstimate gradient_reliability(const Checkpoint& ckpt,
                                         const Dataset& valset, LossKind loss,
                                         std::size_t m, std::size_t batches,
                                         Rng& rng) {
  if (m < 1) throw std::invalid_argument("gradient_reliability: m must be >= 1");
  const LossGrad full = loss_and_grad(ckpt, valset, loss);
  ReliabilityEstimate est;
  est.full_sqnorm = squared_norm(full.grad);

  std::vector<std::size_t> idx(m);
  double acc = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < m; ++i) idx[i] = rng.next_below(valset.size());
    const LossGrad lg = loss_and_grad(ckpt, valset, loss, idx);
    acc += squared_norm(lg.grad);
  }
  est.mean_batch_sqnorm = acc / static_cast<double>(batches);
  if (est.mean_batch_sqnorm <= 0.0) {
    est.degenerate = true;
    est.value = 0.0;
    return est;
  }
  const double r = est.full_sqnorm / est.mean_batch_sqnorm;
  est.clamped = r > 1.0;
  est.value = std::clamp(r, 0.0, 1.0);
  return est;
}

ReliabilityEstimate gradient_reliability_exhaustive(const Checkpoint& ckpt,
                                                    const Dataset& valset,
                                                    LossKind loss,
                                                    std::size_t m) {
  const std::size_t n = valset.size();
  if (n == 0)
    throw std::invalid_argument("gradient_reliability_exhaustive: empty support");
  double tuples = std::pow(static_cast<double>(n), static_cast<double>(m));
  if (tuples > 1e7)
    throw std::invalid_argument(
        "gradient_reliability_exhaustive: support too large to enumerate");

  const std::size_t p = ckpt.theta.size();
  // Per-sample gradients once, then walk every ordered tuple.
  std::vector<std::vector<double>> per_sample(n);
  std::vector<double> full(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx[1] = {i};
    per_sample[i] = loss_and_grad(ckpt, valset, loss, {idx, 1}).grad;
    for (std::size_t j = 0; j < p; ++j) full[j] += per_sample[i][j];
  }
  for (double& v : full) v /= static_cast<double>(n);

  ReliabilityEstimate est;
  est.full_sqnorm = squared_norm(full);

  std::vector<std::size_t> tuple(m, 0);
  std::vector<double> batch_grad(p);
  const auto count = static_cast<std::size_t>(tuples);
  double acc = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
    for (std::size_t s : tuple)
      for (std::size_t j = 0; j < p; ++j) batch_grad[j] += per_sample[s][j];
    const double inv_m = 1.0 / static_cast<double>(m);
    for (double& v : batch_grad) v *= inv_m;
    acc += squared_norm(batch_grad);
    for (std::size_t d = 0; d < m; ++d) {
      if (++tuple[d] < n) break;
      tuple[d] = 0;
    }
  }
  est.mean_batch_sqnorm = acc / tuples;
  if (est.mean_batch_sqnorm <= 0.0) {
    est.degenerate = true;
    return est;
  }
  est.value = std::clamp(est.full_sqnorm / est.mean_batch_sqnorm, 0.0, 1.0);
  return est;
}

OrEstimate optimization_readiness(const Checkpoint& ckpt, const Dataset& valset,
                                  LossKind loss, const DiagnosticConfig& cfg,
                                  Rng& rng) {
  OrEstimate est;
  const LossGrad full = loss_and_grad(ckpt, valset, loss);
  est.loss = full.loss;
  if (est.loss <= 0.0) {
    est.zero_branch = true;
    return est;
  }
  const ReliabilityEstimate rel =
      cfg.exhaustive_reliability
          ? gradient_reliability_exhaustive(ckpt, valset, loss,
                                            cfg.reliability_batch_size)
          : gradient_reliability(ckpt, valset, loss, cfg.reliability_batch_size,
                                 cfg.reliability_batches, rng);
  if (rel.degenerate) {
    est.zero_branch = true;
    return est;
  }
  est.strength = rel.full_sqnorm / est.loss;
  est.reliability = rel.value;
  est.reliability_clamped = rel.clamped;
  est.or_value = est.strength * est.reliability;
  return est;
}

DiagnosticReport diagnostic_report(const Checkpoint& ckpt, const Dataset& valset,
                                   LossKind loss, const DiagnosticConfig& cfg,
                                   std::uint64_t seed) {
  if (valset.size() == 0)
    throw std::invalid_argument("diagnostic_report: empty validation set");
  DiagnosticReport rep;
  rep.seed = seed;

  Rng rng(derive_seed(seed, "diagnostic-or"));
  const OrEstimate orr = optimization_readiness(ckpt, valset, loss, cfg, rng);
  rep.or_value = orr.or_value;
  rep.strength = orr.strength;
  rep.reliability = orr.reliability;
  rep.loss_at_checkpoint = orr.loss;
  rep.or_zero_branch = orr.zero_branch;
  rep.reliability_clamped = orr.reliability_clamped;

  const SpectralSummary repr_sv =
      singular_values(representation_matrix(ckpt, valset.X));
  rep.eff_rank = effective_rank(repr_sv);
  rep.enrank_repr = energy_rank(repr_sv, cfg.tau_energy);

  if (ckpt.spec.output_dim == 1)
    rep.enrank_entk = energy_rank(entk_spectrum(ckpt, valset.X), cfg.tau_energy);

  if (ckpt.theta.size() <= cfg.hessian_param_cap) {
    rep.enrank_hessian = hessian_energy_rank_exact(ckpt, valset, loss,
                                                   cfg.tau_energy,
                                                   cfg.hessian_param_cap);
    rep.hessian_exact_used = true;
  } else {
    Rng hrng(derive_seed(seed, "diagnostic-hessian-gram"));
    rep.enrank_hessian = hessian_gram_energy_rank(
        ckpt, valset, loss, cfg.hessian_gram_b, hrng, cfg.tau_energy);
  }

  if (!ckpt.spec.hidden_widths.empty())
    rep.active_fraction =
        active_neuron_fraction(ckpt, valset.X, cfg.tau_act, cfg.eps_act);
  return rep;
}

}  // namespace plast
