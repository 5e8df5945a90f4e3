#ifndef PLAST_DIAGNOSTICS_HPP
#define PLAST_DIAGNOSTICS_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "plast/linalg.hpp"
#include "plast/net.hpp"
#include "plast/rng.hpp"

namespace plast {

struct DiagnosticConfig {
  double tau_energy = 0.99;
  double tau_act = 0.1;
  double eps_act = 1e-8;
  std::size_t reliability_batches = 128;  // R
  std::size_t reliability_batch_size = 4; // m
  std::size_t hessian_gram_b = 128;
  std::size_t hessian_param_cap = 2000;
  bool exhaustive_reliability = false;
};

struct DiagnosticReport {
  double or_value = 0.0;
  double strength = 0.0;
  double reliability = 0.0;
  double eff_rank = 0.0;
  std::size_t enrank_repr = 0;
  std::optional<std::size_t> enrank_entk;  // absent for vector-output nets
  std::size_t enrank_hessian = 0;
  double active_fraction = 0.0;
  double loss_at_checkpoint = 0.0;
  bool or_zero_branch = false;        // Def-4 "0, otherwise" taken
  bool reliability_clamped = false;   // Monte Carlo ratio exceeded 1
  bool hessian_exact_used = false;
  std::uint64_t seed = 0;
};

// exp of the Shannon entropy of normalized singular values; 0 for the zero
// matrix. Values below 1e-12 * sigma_1 are treated as exactly zero.
double effective_rank(const SpectralSummary& spectrum);

// Smallest k capturing fraction tau of squared spectral energy over the
// numerically nonzero spectrum; 0 for the zero matrix.
std::size_t energy_rank(const SpectralSummary& spectrum, double tau);

// m x d matrix of penultimate activations, row per input.
Matrix representation_matrix(const Checkpoint& ckpt, const Matrix& X);

// m x P matrix of per-sample scalar-output gradients.
Matrix output_jacobian(const Checkpoint& ckpt, const Matrix& X);

// Gram matrix of per-sample output gradients; PSD. Scalar-output nets only.
Matrix entk_matrix(const Checkpoint& ckpt, const Matrix& X);

// Singular values of the eNTK without forming the m x m kernel: they equal
// the squared singular values of the output Jacobian.
SpectralSummary entk_spectrum(const Checkpoint& ckpt, const Matrix& X);

std::size_t hessian_energy_rank_exact(const Checkpoint& ckpt,
                                      const Dataset& valset, LossKind loss,
                                      double tau, std::size_t param_cap = 2000);

// Gram-matrix approximation: b per-sample loss gradients as columns of G,
// energy rank of the spectrum of G^T G.
std::size_t hessian_gram_energy_rank(const Checkpoint& ckpt,
                                     const Dataset& valset, LossKind loss,
                                     std::size_t b, Rng& rng, double tau);

double active_neuron_fraction(const Checkpoint& ckpt, const Matrix& X,
                              double tau_act, double eps);

// ||g||^2 / L on the full validation set. Caller handles L = 0.
double gradient_strength(const Checkpoint& ckpt, const Dataset& valset,
                         LossKind loss);

struct ReliabilityEstimate {
  double value = 0.0;          // clamped to [0, 1]
  double mean_batch_sqnorm = 0.0;
  double full_sqnorm = 0.0;
  bool clamped = false;
  bool degenerate = false;     // E||g_B||^2 == 0
};

ReliabilityEstimate gradient_reliability(const Checkpoint& ckpt,
                                         const Dataset& valset, LossKind loss,
                                         std::size_t m, std::size_t batches,
                                         Rng& rng);

// Exact expectation over all N^m ordered with-replacement mini-batches.
// Feasible only for small supports; throws past ~10^7 tuples.
ReliabilityEstimate gradient_reliability_exhaustive(const Checkpoint& ckpt,
                                                    const Dataset& valset,
                                                    LossKind loss,
                                                    std::size_t m);

struct OrEstimate {
  double or_value = 0.0;
  double strength = 0.0;
  double reliability = 0.0;
  double loss = 0.0;
  bool zero_branch = false;
  bool reliability_clamped = false;
};

OrEstimate optimization_readiness(const Checkpoint& ckpt, const Dataset& valset,
                                  LossKind loss, const DiagnosticConfig& cfg,
                                  Rng& rng);

// Every applicable metric for one (checkpoint, validation set) pair. eNTK is
// skipped for vector outputs; the exact Hessian is replaced by the Gram
// estimator above the parameter cap.
DiagnosticReport diagnostic_report(const Checkpoint& ckpt, const Dataset& valset,
                                   LossKind loss, const DiagnosticConfig& cfg,
                                   std::uint64_t seed);

}  // namespace plast

#endif  // PLAST_DIAGNOSTICS_HPP
