#include "plast/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace plast {

std::vector<CheckpointStore> run_scr_training(const ScrExperimentConfig& cfg) {
  std::vector<CheckpointStore> stores;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    ScrConfig scr = cfg.scr;
    scr.seed = derive_seed(cfg.seed, "scr-stream", r);
    auto stream = std::make_shared<ScrStream>(scr);

    TrainRunConfig tc;
    tc.run_id = "scr" + std::to_string(r);
    tc.net.input_dim = scr.u + scr.v;
    tc.net.hidden_widths = cfg.hidden;
    tc.net.output_dim = 1;
    tc.adam_lr = cfg.adam_lr;
    tc.batch_size = cfg.batch_size;
    tc.n_tasks = cfg.n_tasks;
    tc.samples_per_task = scr.samples_per_task;
    tc.checkpoint_every = cfg.checkpoint_every;
    tc.seed = derive_seed(cfg.seed, "scr-run", r);
    stores.push_back(train_sequence(
        tc, [stream](std::size_t t) { return stream->task(t); }));
  }
  return stores;
}

std::vector<ValidationTask> scr_validation_tasks(const ScrExperimentConfig& cfg) {
  std::vector<ValidationTask> tasks;
  for (std::size_t i = 0; i < cfg.val_task_count; ++i) {
    ScrConfig scr = cfg.scr;
    scr.seed = derive_seed(cfg.seed, "scr-val-stream", i);
    const ScrStream stream(scr);
    ValidationTask vt;
    vt.task_id = "val" + std::to_string(i);
    vt.loss = LossKind::MseHalf;
    Rng rng(derive_seed(cfg.seed, "scr-val-data", i));
    vt.data = materialize(stream.task(0), cfg.n_val, rng);
    tasks.push_back(std::move(vt));
  }
  return tasks;
}

MnistDataset synthetic_mnist(std::size_t n, std::uint64_t seed) {
  constexpr std::size_t kPixels = 784;
  constexpr std::size_t kClasses = 10;
  MnistDataset data;
  data.images = Matrix(n, kPixels);
  data.labels.resize(n);

  // Smooth class prototypes: a few random bumps per class.
  Rng proto_rng(derive_seed(seed, "synthetic-prototypes"));
  std::vector<double> proto(kClasses * kPixels, 0.0);
  for (std::size_t c = 0; c < kClasses; ++c)
    for (std::size_t b = 0; b < 6; ++b) {
      const double cx = proto_rng.uniform(4.0, 24.0);
      const double cy = proto_rng.uniform(4.0, 24.0);
      const double amp = proto_rng.uniform(0.5, 1.0);
      const double s2 = 2.0 * proto_rng.uniform(2.0, 8.0);
      for (std::size_t y = 0; y < 28; ++y)
        for (std::size_t x = 0; x < 28; ++x) {
          const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          proto[c * kPixels + y * 28 + x] += amp * std::exp(-d2 / s2);
        }
    }

  Rng rng(derive_seed(seed, "synthetic-samples"));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = rng.next_below(kClasses);
    data.labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < kPixels; ++j) {
      double v = proto[c * kPixels + j] + rng.uniform(-0.25, 0.25);
      v = std::clamp(v, 0.0, 1.0);
      // Byte quantization, matching what an IDX round trip would keep.
      data.images(i, j) =
          static_cast<double>(static_cast<int>(v * 255.0 + 0.5)) / 255.0;
    }
  }
  return data;
}

MnistDataset load_or_synthesize_mnist(const PmnistExperimentConfig& cfg) {
  if (!cfg.images_path.empty() || !cfg.labels_path.empty())
    return load_mnist_idx(cfg.images_path, cfg.labels_path);
  return synthetic_mnist(cfg.synthetic_samples, derive_seed(cfg.seed, "mnist"));
}

namespace {

MnistDataset subset(const MnistDataset& base, std::size_t n, Rng& rng) {
  if (n > base.images.rows)
    throw std::invalid_argument("pmnist: train_subset larger than the corpus");
  std::vector<std::size_t> perm(base.images.rows);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i-- > 1;)
    std::swap(perm[i], perm[rng.next_below(i + 1)]);
  MnistDataset out;
  out.images = Matrix(n, base.images.cols);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(&base.images.data[perm[i] * base.images.cols], base.images.cols,
                &out.images.data[i * out.images.cols]);
    out.labels[i] = base.labels[perm[i]];
  }
  return out;
}

}  // namespace

std::vector<CheckpointStore> run_pmnist_training(
    const PmnistExperimentConfig& cfg, const MnistDataset& base) {
  std::vector<CheckpointStore> stores;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    Rng srng(derive_seed(cfg.seed, "pmnist-subset", r));
    auto train_base =
        std::make_shared<MnistDataset>(subset(base, cfg.train_subset, srng));

    TrainRunConfig tc;
    tc.run_id = "pmnist" + std::to_string(r);
    tc.net.input_dim = base.images.cols;
    tc.net.hidden_widths = cfg.hidden;
    tc.net.output_dim = 10;
    tc.adam_lr = cfg.adam_lr;
    tc.batch_size = cfg.batch_size;
    tc.n_tasks = cfg.n_tasks;
    tc.samples_per_task = cfg.train_subset;
    tc.checkpoint_every = cfg.checkpoint_every;
    tc.seed = derive_seed(cfg.seed, "pmnist-run", r);
    const std::uint64_t perm_root = derive_seed(cfg.seed, "pmnist-perm", r);
    stores.push_back(train_sequence(tc, [train_base, perm_root](std::size_t t) {
      // Task 0 keeps the identity permutation by convention.
      return permuted_task(*train_base,
                           t == 0 ? 0 : derive_seed(perm_root, "task", t));
    }));
  }
  return stores;
}

std::vector<ValidationTask> pmnist_validation_tasks(
    const PmnistExperimentConfig& cfg, const MnistDataset& base) {
  std::vector<ValidationTask> tasks;
  for (std::size_t i = 0; i < cfg.val_task_count; ++i) {
    const Task task =
        permuted_task(base, derive_seed(cfg.seed, "pmnist-val-perm", i));
    ValidationTask vt;
    vt.task_id = "val" + std::to_string(i);
    vt.loss = LossKind::CrossEntropy;
    Rng rng(derive_seed(cfg.seed, "pmnist-val-data", i));
    vt.data = materialize(task, cfg.n_val, rng);
    tasks.push_back(std::move(vt));
  }
  return tasks;
}

EvalConfig default_eval_config(std::uint64_t seed) {
  EvalConfig cfg;
  cfg.k_list = {1, 10, 100};
  cfg.gain.eta = 1e-3;
  cfg.gain.m = 4;
  cfg.gain.rollouts = 128;
  cfg.diag.reliability_batches = 128;
  cfg.diag.reliability_batch_size = 4;
  cfg.diag.hessian_gram_b = 128;
  cfg.diag.hessian_param_cap = 0;  // Gram estimator throughout the pipeline
  cfg.seed = seed;
  return cfg;
}

}  // namespace plast
