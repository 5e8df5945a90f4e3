#ifndef PLAST_COUNTEREXAMPLES_HPP
#define PLAST_COUNTEREXAMPLES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "plast/net.hpp"
#include "plast/tasks.hpp"

namespace plast {

enum class CounterexampleKind { Regression, Classification };

struct CounterexampleConfig {
  std::size_t n = 8;          // support size; even for classification
  std::size_t width = 8;      // hidden width M >= n
  double m_gap = 10.0;        // > 1
  double delta = 0.1;
  std::size_t trial_seeds = 20;
  std::uint64_t seed = 0;
};

// The "stuck" checkpoint of the regression construction together with its
// full-support task (inputs e_i, labels e_{n-1} - e_n, half squared loss).
struct CounterexamplePair {
  Checkpoint checkpoint;
  Task task;
};

CounterexamplePair theta_pre_regression(std::size_t n, std::size_t width);
CounterexamplePair theta_pre_classification(std::size_t n, std::size_t width);

// Rademacher hidden layer scaled by sqrt(2/n), zero output layer.
Checkpoint theta_rand(std::size_t n, std::size_t width, std::uint64_t seed);

// The full-support tasks alone (also used with theta_rand).
Task regression_task(std::size_t n);
Task classification_task(std::size_t n);

struct ClosedFormMetrics {
  std::size_t enrank_repr = 0;
  double eff_rank = 0.0;
  std::size_t enrank_entk = 0;
  double loss_at_pre = 0.0;
};

ClosedFormMetrics closed_form_metrics(CounterexampleKind kind, std::size_t n);

// Learning rate of the random-escape clause: 2n^2/M for regression,
// 4 log(2 m_gap / log 2) n^2 / M for classification.
double escape_eta(CounterexampleKind kind, std::size_t n, std::size_t width,
                  double m_gap);

struct ClauseCheck {
  std::string name;
  double predicted = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CertificationReport {
  CounterexampleKind kind = CounterexampleKind::Regression;
  std::vector<ClauseCheck> deterministic;  // clauses (i) and (ii)
  std::vector<double> escape_gains;        // clause (iii), one per seed
  double success_fraction = 0.0;
  double required_gain = 0.0;              // 1 - 1/m_gap
  double required_fraction = 0.9;
  bool escape_pass = false;
  bool deterministic_pass = false;
};

// Measures every clause of the counterexample theorems numerically:
// (i) rank metrics against the closed forms, (ii) zero gradient and zero
// full-support gain at theta_pre, (iii) per-seed one-step escape of the
// random initialization.
CertificationReport certify(const CounterexampleConfig& cfg,
                            CounterexampleKind kind);

std::string format_report(const CertificationReport& rep);

}  // namespace plast

#endif  // PLAST_COUNTEREXAMPLES_HPP
