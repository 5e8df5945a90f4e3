#ifndef PLAST_EXPERIMENTS_HPP
#define PLAST_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "plast/eval.hpp"
#include "plast/tasks.hpp"

namespace plast {

// End-to-end continual-training experiment on the Slowly-Changing Regression
// stream: several independent sequences, shared validation tasks drawn from
// the same generator with fresh seeds.
struct ScrExperimentConfig {
  ScrConfig scr;
  std::vector<std::size_t> hidden = {5, 5};
  std::size_t runs = 3;
  std::size_t n_tasks = 200;
  std::size_t checkpoint_every = 5;
  double adam_lr = 0.01;
  std::size_t batch_size = 1;
  std::size_t val_task_count = 5;
  std::size_t n_val = 10000;
  std::uint64_t seed = 0;
};

std::vector<CheckpointStore> run_scr_training(const ScrExperimentConfig& cfg);
std::vector<ValidationTask> scr_validation_tasks(const ScrExperimentConfig& cfg);

struct PmnistExperimentConfig {
  std::string images_path;  // empty: synthesize a stand-in corpus
  std::string labels_path;
  std::size_t synthetic_samples = 12000;
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t runs = 1;
  std::size_t n_tasks = 20;
  std::size_t train_subset = 10000;
  std::size_t checkpoint_every = 5;
  double adam_lr = 0.01;
  std::size_t batch_size = 1;
  std::size_t val_task_count = 5;
  std::size_t n_val = 2000;
  std::uint64_t seed = 0;
};

// Ten-class image corpus in the MNIST layout, used when the real files are
// not on disk. Class prototypes plus per-sample noise, byte-quantized.
MnistDataset synthetic_mnist(std::size_t n, std::uint64_t seed);

MnistDataset load_or_synthesize_mnist(const PmnistExperimentConfig& cfg);

std::vector<CheckpointStore> run_pmnist_training(
    const PmnistExperimentConfig& cfg, const MnistDataset& base);
std::vector<ValidationTask> pmnist_validation_tasks(
    const PmnistExperimentConfig& cfg, const MnistDataset& base);

// Estimation protocol defaults: eta 1e-3, m=4, R=128 rollouts/batches,
// Hessian-Gram with b=128 (the exact Hessian is disabled).
EvalConfig default_eval_config(std::uint64_t seed);

}  // namespace plast

#endif  // PLAST_EXPERIMENTS_HPP
