#ifndef PLAST_TASKS_HPP
#define PLAST_TASKS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "plast/net.hpp"
#include "plast/rng.hpp"

namespace plast {

// A labeled-data source. Finite-support tasks hold their support with
// uniform weights; streaming tasks provide a sampler that fills one (x, y)
// pair from the given rng.
struct Task {
  LossKind loss = LossKind::MseHalf;
  std::size_t input_dim = 0;
  std::size_t label_dim = 1;
  std::optional<Dataset> support;
  std::function<void(Rng&, double* x, double* y)> draw;
};

// Hard-threshold target network for Slowly-Changing Regression. Weight
// entries are exactly +1 or -1 and stay fixed across a whole sequence.
struct LtuTarget {
  std::size_t input_dim = 0;
  std::size_t hidden_units = 0;
  std::vector<double> weights;         // hidden_units x input_dim, entries +-1
  std::vector<double> output_weights;  // hidden_units
  std::vector<double> thresholds;      // hidden_units

  static LtuTarget make(std::size_t input_dim, std::size_t hidden_units,
                        double beta_star, std::uint64_t seed);
};

double ltu_output(const LtuTarget& t, std::span<const double> x);

struct ScrConfig {
  std::size_t u = 4;               // slowly-changing bits
  std::size_t v = 12;              // per-sample random bits
  std::size_t samples_per_task = 1000;
  std::size_t ltu_hidden = 20;
  double ltu_beta_star = 0.7;
  std::uint64_t seed = 0;
};

// Slowly-Changing Regression stream: the u-bit prefix is held fixed within
// a task and exactly one uniformly chosen bit flips between tasks.
class ScrStream {
 public:
  explicit ScrStream(const ScrConfig& cfg);

  // Task index t, deterministic in (cfg.seed, t).
  Task task(std::size_t t) const;
  const LtuTarget& target() const { return ltu_; }
  // The u-bit prefix of task t.
  std::vector<int> pattern(std::size_t t) const;

 private:
  ScrConfig cfg_;
  LtuTarget ltu_;
  std::vector<int> initial_pattern_;
};

struct MnistDataset {
  Matrix images;             // N x 784, values in [0, 1]
  std::vector<int> labels;   // N, values 0..9
};

// Big-endian IDX parser; magic numbers 0x803 (images) / 0x801 (labels).
MnistDataset load_mnist_idx(const std::string& images_path,
                            const std::string& labels_path);

void save_mnist_idx(const MnistDataset& data, const std::string& images_path,
                    const std::string& labels_path);

// Applies one pixel permutation (drawn from task_seed) to every image.
// task_seed 0 is reserved for the identity permutation.
Task permuted_task(const MnistDataset& base, std::uint64_t task_seed);
std::vector<std::size_t> pixel_permutation(std::size_t n, std::uint64_t task_seed);

// m i.i.d. draws; with replacement for finite-support tasks.
Dataset sample_batch(const Task& task, std::size_t m, Rng& rng);

// Materializes n draws into a finite dataset (e.g. a validation set).
Dataset materialize(const Task& task, std::size_t n, Rng& rng);

}  // namespace plast

#endif  // PLAST_TASKS_HPP
