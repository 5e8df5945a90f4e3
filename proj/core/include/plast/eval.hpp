#ifndef PLAST_EVAL_HPP
#define PLAST_EVAL_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "plast/diagnostics.hpp"
#include "plast/gain.hpp"
#include "plast/net.hpp"
#include "plast/tasks.hpp"

namespace plast {

struct TrainRunConfig {
  std::string run_id = "run0";
  MlpSpec net;
  double adam_lr = 0.01;
  std::size_t batch_size = 1;
  std::size_t n_tasks = 100;
  std::size_t samples_per_task = 1000;
  std::size_t checkpoint_every = 5;
  std::uint64_t seed = 0;
};

// Ordered checkpoints from one continual-training run, plus the per-task
// mean online loss curve.
struct CheckpointStore {
  std::string run_id;
  std::vector<Checkpoint> checkpoints;
  std::vector<double> task_mean_loss;
  bool aborted = false;  // non-finite loss hit; store is partial
};

// Online continual training: one Adam step per sample. The initial model
// and every checkpoint_every-th task boundary are checkpointed.
CheckpointStore train_sequence(const TrainRunConfig& cfg,
                               const std::function<Task(std::size_t)>& task_at);

// Bit-exact checkpoint persistence (hex-float payload).
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
void save_store(const CheckpointStore& store, const std::string& dir);
CheckpointStore load_store(const std::string& dir);

struct RankingResult {
  std::string metric;
  std::size_t k = 0;
  double accuracy = 0.0;   // mean across cells
  double std_error = 0.0;  // across cells
  std::size_t counted_pairs = 0;
  std::size_t tied_pairs_excluded = 0;
  std::vector<double> per_cell_accuracy;
  bool defined = true;     // false when every gain pair is tied
};

// Accuracy of one metric against one gain vector over unordered checkpoint
// pairs; gain ties are excluded, metric ties on counted pairs score as
// incorrect.
RankingResult pairwise_ranking_accuracy(const std::vector<double>& metric_values,
                                        const std::vector<double>& gains);

struct ValidationTask {
  std::string task_id;
  Dataset data;
  LossKind loss = LossKind::MseHalf;
};

struct EvalConfig {
  std::vector<std::size_t> k_list = {1, 10, 100};
  GainConfig gain;          // k is taken from k_list
  DiagnosticConfig diag;
  std::uint64_t seed = 0;
};

struct MetricCell {
  std::string run_id;
  std::size_t checkpoint_index = 0;
  std::string task_id;
  DiagnosticReport report;
};

struct GainCell {
  std::string run_id;
  std::size_t checkpoint_index = 0;
  std::string task_id;
  std::size_t k = 0;
  GainEstimate estimate;
};

struct EvalTables {
  std::vector<MetricCell> metrics;
  std::vector<GainCell> gains;
  std::vector<RankingResult> rankings;  // one per (metric, k)
};

// Names of the metric columns, in report/CSV order. enrank_entk is present
// only for scalar-output networks.
std::vector<std::string> metric_names(bool with_entk);
double metric_value(const DiagnosticReport& rep, const std::string& name);

// Full protocol: DiagnosticReport and per-k GainEstimate for every
// (checkpoint, validation task) cell, then ranking accuracy per (metric, k)
// aggregated across (run, task) cells.
EvalTables evaluate_checkpoints(const std::vector<CheckpointStore>& stores,
                                const std::vector<ValidationTask>& val_tasks,
                                const EvalConfig& cfg);

struct AblationRow {
  double fraction = 0.0;
  std::string metric = "or";
  std::size_t k = 0;
  double accuracy = 0.0;
  double std_error = 0.0;
};

// OR re-estimated on subsampled validation sets (reliability with R=16,
// m=1), ranked against the full-data gains already in `tables`.
std::vector<AblationRow> subsample_ablation(
    const std::vector<CheckpointStore>& stores,
    const std::vector<ValidationTask>& val_tasks,
    const std::vector<double>& fractions, const EvalTables& tables,
    const EvalConfig& cfg);

// CSV emission. Every file starts with a comment header recording the tool
// version, resolved config hash, and root seed.
struct CsvProvenance {
  std::string version = "0.1.0";
  std::string config_hash = "0";
  std::uint64_t root_seed = 0;
};

void write_learning_curve_csv(const std::vector<CheckpointStore>& stores,
                              const std::string& path, const CsvProvenance& prov);
void write_metrics_csv(const EvalTables& tables, const std::string& path,
                       const CsvProvenance& prov);
void write_gains_csv(const EvalTables& tables, const std::string& path,
                     const CsvProvenance& prov);
void write_ranking_csv(const std::vector<RankingResult>& rankings,
                       const std::string& path, const CsvProvenance& prov);
void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path, const CsvProvenance& prov);

}  // namespace plast

#endif  // PLAST_EVAL_HPP
