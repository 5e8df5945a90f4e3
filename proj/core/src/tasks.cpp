#include "plast/tasks.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace plast {

LtuTarget LtuTarget::make(std::size_t input_dim, std::size_t hidden_units,
                          double beta_star, std::uint64_t seed) {
  LtuTarget t;
  t.input_dim = input_dim;
  t.hidden_units = hidden_units;
  t.weights.resize(hidden_units * input_dim);
  t.output_weights.resize(hidden_units);
  t.thresholds.resize(hidden_units);
  Rng rng(derive_seed(seed, "ltu-target"));
  for (std::size_t k = 0; k < hidden_units; ++k) {
    std::size_t neg = 0;
    for (std::size_t i = 0; i < input_dim; ++i) {
      const double w = rng.coin() ? 1.0 : -1.0;
      t.weights[k * input_dim + i] = w;
      if (w < 0.0) ++neg;
    }
    t.output_weights[k] = rng.uniform(-1.0, 1.0);
    t.thresholds[k] = static_cast<double>(input_dim) * beta_star -
                      2.0 * static_cast<double>(neg);
  }
  return t;
}

double ltu_output(const LtuTarget& t, std::span<const double> x) {
  if (x.size() != t.input_dim)
    throw std::invalid_argument("ltu_output: input dimension mismatch");
  for (double b : x)
    if (b != 0.0 && b != 1.0)
      throw std::invalid_argument("ltu_output: input must be binary");
  double y = 0.0;
  for (std::size_t k = 0; k < t.hidden_units; ++k) {
    double s = 0.0;
    const double* w = &t.weights[k * t.input_dim];
    for (std::size_t i = 0; i < t.input_dim; ++i) s += w[i] * x[i];
    if (s > t.thresholds[k]) y += t.output_weights[k];
  }
  return y;
}

ScrStream::ScrStream(const ScrConfig& cfg) : cfg_(cfg) {
  if (cfg.u < 1) throw std::invalid_argument("ScrStream: u must be >= 1");
  ltu_ = LtuTarget::make(cfg.u + cfg.v, cfg.ltu_hidden, cfg.ltu_beta_star,
                         derive_seed(cfg.seed, "scr-ltu"));
  initial_pattern_.resize(cfg.u);
  Rng rng(derive_seed(cfg.seed, "scr-initial-pattern"));
  for (std::size_t i = 0; i < cfg.u; ++i) initial_pattern_[i] = rng.coin() ? 1 : 0;
}

std::vector<int> ScrStream::pattern(std::size_t t) const {
  std::vector<int> p = initial_pattern_;
  for (std::size_t j = 0; j < t; ++j) {
    Rng rng(derive_seed(cfg_.seed, "scr-flip", j));
    const std::size_t bit = rng.next_below(cfg_.u);
    p[bit] = 1 - p[bit];
  }
  return p;
}

Task ScrStream::task(std::size_t t) const {
  Task task;
  task.loss = LossKind::MseHalf;
  task.input_dim = cfg_.u + cfg_.v;
  task.label_dim = 1;
  const std::vector<int> p = pattern(t);
  const std::size_t u = cfg_.u;
  const std::size_t v = cfg_.v;
  // Capture the target by value so the task stays valid past the stream.
  task.draw = [p, u, v, target = ltu_, dim = task.input_dim](Rng& rng, double* x,
                                                             double* y) {
    for (std::size_t i = 0; i < u; ++i) x[i] = static_cast<double>(p[i]);
    for (std::size_t i = 0; i < v; ++i) x[u + i] = rng.coin() ? 1.0 : 0.0;
    y[0] = ltu_output(target, {x, dim});
  };
  return task;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("load_mnist_idx: truncated file: " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

MnistDataset load_mnist_idx(const std::string& images_path,
                            const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_mnist_idx: cannot open " + images_path);
  if (read_be32(img, images_path) != 0x00000803u)
    throw std::runtime_error("load_mnist_idx: bad image magic in " + images_path);
  const std::uint32_t n = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_mnist_idx: cannot open " + labels_path);
  if (read_be32(lab, labels_path) != 0x00000801u)
    throw std::runtime_error("load_mnist_idx: bad label magic in " + labels_path);
  const std::uint32_t nl = read_be32(lab, labels_path);
  if (n != nl)
    throw std::runtime_error("load_mnist_idx: image/label count mismatch");

  const std::size_t pixels = std::size_t(rows) * cols;
  MnistDataset data;
  data.images = Matrix(n, pixels);
  data.labels.resize(n);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()),
                  static_cast<std::streamsize>(pixels)))
      throw std::runtime_error("load_mnist_idx: truncated file: " + images_path);
    double* row = &data.images.data[std::size_t(i) * pixels];
    for (std::size_t j = 0; j < pixels; ++j)
      row[j] = static_cast<double>(buf[j]) / 255.0;
  }
  std::vector<unsigned char> lbuf(n);
  if (!lab.read(reinterpret_cast<char*>(lbuf.data()), n))
    throw std::runtime_error("load_mnist_idx: truncated file: " + labels_path);
  for (std::uint32_t i = 0; i < n; ++i) data.labels[i] = lbuf[i];
  return data;
}

void save_mnist_idx(const MnistDataset& data, const std::string& images_path,
                    const std::string& labels_path) {
  const std::size_t n = data.images.rows;
  const std::size_t pixels = data.images.cols;
  // Square image shape; MNIST-style files are 28x28 but any square works.
  const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(double(pixels))));
  if (std::size_t(side) * side != pixels)
    throw std::invalid_argument("save_mnist_idx: pixel count must be square");

  std::ofstream img(images_path, std::ios::binary);
  write_be32(img, 0x00000803u);
  write_be32(img, static_cast<std::uint32_t>(n));
  write_be32(img, side);
  write_be32(img, side);
  std::vector<unsigned char> buf(pixels);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &data.images.data[i * pixels];
    for (std::size_t j = 0; j < pixels; ++j)
      buf[j] = static_cast<unsigned char>(
          std::lround(std::clamp(row[j], 0.0, 1.0) * 255.0));
    img.write(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(pixels));
  }

  std::ofstream lab(labels_path, std::ios::binary);
  write_be32(lab, 0x00000801u);
  write_be32(lab, static_cast<std::uint32_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<unsigned char>(data.labels[i]);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
}

std::vector<std::size_t> pixel_permutation(std::size_t n, std::uint64_t task_seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (task_seed == 0) return perm;  // reserved: identity
  Rng rng(derive_seed(task_seed, "pixel-permutation"));
  for (std::size_t i = n; i-- > 1;)
    std::swap(perm[i], perm[rng.next_below(i + 1)]);
  return perm;
}

Task permuted_task(const MnistDataset& base, std::uint64_t task_seed) {
  if (base.images.rows == 0) throw std::invalid_argument("permuted_task: empty base");
  const std::size_t pixels = base.images.cols;
  const std::vector<std::size_t> perm = pixel_permutation(pixels, task_seed);

  Task task;
  task.loss = LossKind::CrossEntropy;
  task.input_dim = pixels;
  task.label_dim = 1;
  Dataset sup;
  sup.X = Matrix(base.images.rows, pixels);
  sup.Y = Matrix(base.images.rows, 1);
  for (std::size_t i = 0; i < base.images.rows; ++i) {
    const double* src = &base.images.data[i * pixels];
    double* dst = &sup.X.data[i * pixels];
    for (std::size_t j = 0; j < pixels; ++j) dst[j] = src[perm[j]];
    sup.Y(i, 0) = static_cast<double>(base.labels[i]);
  }
  task.support = std::move(sup);
  return task;
}

Dataset sample_batch(const Task& task, std::size_t m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("sample_batch: m must be >= 1");
  Dataset out;
  out.X = Matrix(m, task.input_dim);
  out.Y = Matrix(m, task.label_dim);
  if (task.support) {
    const Dataset& sup = *task.support;
    if (sup.size() == 0) throw std::invalid_argument("sample_batch: empty support");
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = rng.next_below(sup.size());
      std::copy_n(&sup.X.data[r * sup.X.cols], sup.X.cols,
                  &out.X.data[i * out.X.cols]);
      std::copy_n(&sup.Y.data[r * sup.Y.cols], sup.Y.cols,
                  &out.Y.data[i * out.Y.cols]);
    }
  } else {
    if (!task.draw) throw std::invalid_argument("sample_batch: task has no sampler");
    for (std::size_t i = 0; i < m; ++i)
      task.draw(rng, &out.X.data[i * out.X.cols], &out.Y.data[i * out.Y.cols]);
  }
  return out;
}

Dataset materialize(const Task& task, std::size_t n, Rng& rng) {
  return sample_batch(task, n, rng);
}

}  // namespace plast
