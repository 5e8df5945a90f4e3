#include "plast/counterexamples.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "plast/diagnostics.hpp"
#include "plast/gain.hpp"

namespace plast {

namespace {

constexpr double kAlpha = 0.5;

MlpSpec two_layer_spec(std::size_t n, std::size_t width) {
  MlpSpec spec;
  spec.input_dim = n;
  spec.hidden_widths = {width};
  spec.output_dim = 1;
  spec.use_bias = false;
  return spec;
}

void check_dims(std::size_t n, std::size_t width, bool even) {
  if (n < 4) throw std::invalid_argument("counterexample: n must be >= 4");
  if (even && n % 2 != 0)
    throw std::invalid_argument("counterexample: n must be even");
  if (width < n) throw std::invalid_argument("counterexample: width must be >= n");
}

double sq(double x) { return x * x; }

}  // namespace

Task regression_task(std::size_t n) {
  Task task;
  task.loss = LossKind::MseHalf;
  task.input_dim = n;
  task.label_dim = 1;
  Dataset sup;
  sup.X = Matrix::identity(n);
  sup.Y = Matrix(n, 1);
  sup.Y(n - 2, 0) = 1.0;   // e_{n-1} - e_n, one-based
  sup.Y(n - 1, 0) = -1.0;
  task.support = std::move(sup);
  return task;
}

Task classification_task(std::size_t n) {
  Task task;
  task.loss = LossKind::Logistic01;
  task.input_dim = n;
  task.label_dim = 1;
  Dataset sup;
  sup.X = Matrix::identity(n);
  sup.Y = Matrix(n, 1);
  for (std::size_t i = 0; i < n / 2; ++i) sup.Y(i, 0) = 1.0;
  task.support = std::move(sup);
  return task;
}

CounterexamplePair theta_pre_regression(std::size_t n, std::size_t width) {
  check_dims(n, width, false);
  CounterexamplePair pair;
  pair.checkpoint.spec = two_layer_spec(n, width);
  pair.checkpoint.theta.assign(pair.checkpoint.spec.param_count(), 0.0);
  // W_{j,i} = alpha on the first n-2 diagonal entries, -1 elsewhere;
  // v = 0. ReLU rectifies the -1 entries to zero, so Phi = alpha [B_reg 0].
  double* w = pair.checkpoint.theta.data();  // width x n, row-major
  for (std::size_t j = 0; j < width; ++j)
    for (std::size_t i = 0; i < n; ++i)
      w[j * n + i] = (j == i && i < n - 2) ? kAlpha : -1.0;
  pair.task = regression_task(n);
  return pair;
}

CounterexamplePair theta_pre_classification(std::size_t n, std::size_t width) {
  check_dims(n, width, true);
  CounterexamplePair pair;
  pair.checkpoint.spec = two_layer_spec(n, width);
  pair.checkpoint.theta.assign(pair.checkpoint.spec.param_count(), 0.0);

  // B_cls: 1 on the diagonal, 2/n across the label split, 0 within it.
  const auto b_entry = [n](std::size_t i, std::size_t j) -> double {
    if (i == j) return 1.0;
    const bool yi = i < n / 2;
    const bool yj = j < n / 2;
    return yi == yj ? 0.0 : 2.0 / static_cast<double>(n);
  };
  double* w = pair.checkpoint.theta.data();  // width x n
  for (std::size_t j = 0; j < width; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      if (j >= n) {
        w[j * n + i] = -1.0;
        continue;
      }
      const double b = b_entry(i, j);
      w[j * n + i] = b > 0.0 ? kAlpha * b : -1.0;
    }
  pair.task = classification_task(n);
  return pair;
}

Checkpoint theta_rand(std::size_t n, std::size_t width, std::uint64_t seed) {
  check_dims(n, width, false);
  Checkpoint ckpt;
  ckpt.spec = two_layer_spec(n, width);
  ckpt.theta.assign(ckpt.spec.param_count(), 0.0);
  ckpt.meta.seed = seed;
  const double a = std::sqrt(2.0 / static_cast<double>(n));
  Rng rng(derive_seed(seed, "theta-rand"));
  double* w = ckpt.theta.data();
  for (std::size_t i = 0; i < width * n; ++i) w[i] = rng.coin() ? a : -a;
  return ckpt;
}

ClosedFormMetrics closed_form_metrics(CounterexampleKind kind, std::size_t n) {
  ClosedFormMetrics m;
  const double nd = static_cast<double>(n);
  if (kind == CounterexampleKind::Regression) {
    m.enrank_repr = static_cast<std::size_t>(std::ceil(0.99 * (nd - 2.0)));
    m.eff_rank = nd - 2.0;
    m.enrank_entk = m.enrank_repr;
    m.loss_at_pre = 1.0 / nd;
  } else {
    m.enrank_repr = static_cast<std::size_t>(std::ceil(0.99 * (nd + 2.0) - 3.0));
    m.eff_rank = nd / std::pow(2.0, 2.0 / nd);
    m.enrank_entk = static_cast<std::size_t>(std::ceil(0.99 * (nd + 14.0) - 15.0));
    m.loss_at_pre = std::log(2.0);
  }
  return m;
}

double escape_eta(CounterexampleKind kind, std::size_t n, std::size_t width,
                  double m_gap) {
  const double n2 = sq(static_cast<double>(n));
  const double M = static_cast<double>(width);
  if (kind == CounterexampleKind::Regression) return 2.0 * n2 / M;
  const double gamma = std::log(2.0 * m_gap / std::log(2.0));
  return 4.0 * gamma * n2 / M;
}

CertificationReport certify(const CounterexampleConfig& cfg,
                            CounterexampleKind kind) {
  CertificationReport rep;
  rep.kind = kind;
  const std::size_t n = cfg.n;
  const CounterexamplePair pair = kind == CounterexampleKind::Regression
                                      ? theta_pre_regression(n, cfg.width)
                                      : theta_pre_classification(n, cfg.width);
  const ClosedFormMetrics cf = closed_form_metrics(kind, n);

  const auto add = [&rep](std::string name, double predicted, double measured,
                          double tol) {
    ClauseCheck c;
    c.name = std::move(name);
    c.predicted = predicted;
    c.measured = measured;
    c.tolerance = tol;
    c.pass = std::abs(measured - predicted) <= tol;
    rep.deterministic.push_back(c);
  };

  // Clause (i): rank metrics against the closed forms.
  const Matrix phi = representation_matrix(pair.checkpoint, pair.task.support->X);
  const SpectralSummary sv = singular_values(phi);
  add("effrank_repr", cf.eff_rank, effective_rank(sv), 1e-6);
  add("enrank_repr", double(cf.enrank_repr), double(energy_rank(sv, 0.99)), 0.0);
  add("enrank_entk", double(cf.enrank_entk),
      double(energy_rank(entk_spectrum(pair.checkpoint, pair.task.support->X),
                         0.99)),
      0.0);

  // Clause (ii): stuck checkpoint.
  const LossGrad lg =
      loss_and_grad(pair.checkpoint, *pair.task.support, pair.task.loss);
  add("loss_at_pre", cf.loss_at_pre, lg.loss, 1e-12);
  double gnorm = 0.0;
  for (double g : lg.grad) gnorm += g * g;
  add("grad_norm_at_pre", 0.0, std::sqrt(gnorm), 1e-12);
  for (std::size_t k : {std::size_t{1}, std::size_t{10}, std::size_t{100}})
    for (double eta : {0.1, 1.0, 10.0}) {
      std::ostringstream name;
      name << "full_gain_k" << k << "_eta" << eta;
      add(name.str(), 0.0, full_support_gain(pair.checkpoint, pair.task, k, eta),
          1e-12);
    }

  rep.deterministic_pass = true;
  for (const ClauseCheck& c : rep.deterministic)
    rep.deterministic_pass = rep.deterministic_pass && c.pass;

  // Clause (iii): per-seed one-step escape of the random initialization.
  rep.required_gain = 1.0 - 1.0 / cfg.m_gap;
  const double eta = escape_eta(kind, n, cfg.width, cfg.m_gap);
  std::size_t successes = 0;
  for (std::size_t s = 0; s < cfg.trial_seeds; ++s) {
    const Checkpoint rand_ckpt =
        theta_rand(n, cfg.width, derive_seed(cfg.seed, "escape-seed", s));
    const double gain = full_support_gain(rand_ckpt, pair.task, 1, eta);
    rep.escape_gains.push_back(gain);
    if (gain >= rep.required_gain) ++successes;
  }
  rep.success_fraction = cfg.trial_seeds == 0
                             ? 0.0
                             : double(successes) / double(cfg.trial_seeds);
  rep.escape_pass = rep.success_fraction >= rep.required_fraction;
  return rep;
}

std::string format_report(const CertificationReport& rep) {
  std::ostringstream os;
  os << "counterexample kind: "
     << (rep.kind == CounterexampleKind::Regression ? "regression"
                                                    : "classification")
     << "\n";
  for (const ClauseCheck& c : rep.deterministic)
    os << (c.pass ? "  [pass] " : "  [FAIL] ") << c.name
       << " predicted=" << c.predicted << " measured=" << c.measured
       << " tol=" << c.tolerance << "\n";
  if (!rep.escape_gains.empty()) {
    os << "  escape: success fraction " << rep.success_fraction << " (need >= "
       << rep.required_fraction << ", gain threshold " << rep.required_gain
       << "): " << (rep.escape_pass ? "pass" : "FAIL") << "\n";
  }
  return os.str();
}

}  // namespace plast
