#include "plast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace plast {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double var = 0.0;
    for (double x : v) var += (x - r.mean) * (x - r.mean);
    var /= static_cast<double>(v.size() - 1);
    r.se = std::sqrt(var / static_cast<double>(v.size()));
  }
  return r;
}

void write_provenance(std::ofstream& out, const CsvProvenance& prov) {
  out << "# version=" << prov.version << " config_hash=" << prov.config_hash
      << " root_seed=" << prov.root_seed << "\n";
}

}  // namespace

CheckpointStore train_sequence(const TrainRunConfig& cfg,
                               const std::function<Task(std::size_t)>& task_at) {
  if (cfg.checkpoint_every < 1)
    throw std::invalid_argument("train_sequence: checkpoint_every must be >= 1");
  CheckpointStore store;
  store.run_id = cfg.run_id;

  Checkpoint ckpt = init_mlp(cfg.net, derive_seed(cfg.seed, "train-init"));
  ckpt.meta.run_id = cfg.run_id;
  ckpt.meta.seed = cfg.seed;
  AdamState adam = AdamState::init(ckpt.theta.size(), cfg.adam_lr);

  store.checkpoints.push_back(ckpt);  // untrained initial model
  for (std::size_t t = 0; t < cfg.n_tasks; ++t) {
    const Task task = task_at(t);
    Rng rng(derive_seed(cfg.seed, "train-task", t));
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < cfg.samples_per_task; ++s) {
      const Dataset batch = sample_batch(task, cfg.batch_size, rng);
      const LossGrad lg = loss_and_grad(ckpt, batch, task.loss);
      if (!std::isfinite(lg.loss)) {
        store.aborted = true;
        return store;
      }
      loss_sum += lg.loss;
      adam_step_inplace(adam, ckpt, lg.grad);
    }
    store.task_mean_loss.push_back(loss_sum /
                                   static_cast<double>(cfg.samples_per_task));
    if ((t + 1) % cfg.checkpoint_every == 0) {
      ckpt.meta.task_index = static_cast<std::int64_t>(t + 1);
      store.checkpoints.push_back(ckpt);
    }
  }
  return store;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "plast-checkpoint v1\n";
  out << "input_dim " << ckpt.spec.input_dim << "\n";
  out << "hidden";
  for (std::size_t w : ckpt.spec.hidden_widths) out << " " << w;
  out << "\n";
  out << "output_dim " << ckpt.spec.output_dim << "\n";
  out << "use_bias " << (ckpt.spec.use_bias ? 1 : 0) << "\n";
  out << "run_id " << ckpt.meta.run_id << "\n";
  out << "task_index " << ckpt.meta.task_index << "\n";
  out << "step_count " << ckpt.meta.step_count << "\n";
  out << "seed " << ckpt.meta.seed << "\n";
  out << "theta " << ckpt.theta.size() << "\n";
  for (double v : ckpt.theta) out << fmt_hex(v) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "plast-checkpoint v1")
    throw std::runtime_error("load_checkpoint: version mismatch in " + path);

  Checkpoint ckpt;
  std::string key;
  in >> key >> ckpt.spec.input_dim;
  if (key != "input_dim") throw std::runtime_error("load_checkpoint: corrupt header");
  in >> key;
  if (key != "hidden") throw std::runtime_error("load_checkpoint: corrupt header");
  std::getline(in, line);
  {
    std::istringstream hs(line);
    std::size_t w;
    while (hs >> w) ckpt.spec.hidden_widths.push_back(w);
  }
  int bias = 0;
  in >> key >> ckpt.spec.output_dim;
  in >> key >> bias;
  ckpt.spec.use_bias = bias != 0;
  in >> key >> ckpt.meta.run_id;
  in >> key >> ckpt.meta.task_index;
  in >> key >> ckpt.meta.step_count;
  in >> key >> ckpt.meta.seed;
  std::size_t count = 0;
  in >> key >> count;
  if (key != "theta") throw std::runtime_error("load_checkpoint: corrupt header");
  if (count != ckpt.spec.param_count())
    throw std::runtime_error(
        "load_checkpoint: parameter count does not match architecture");
  ckpt.theta.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string tok;
    if (!(in >> tok))
      throw std::runtime_error("load_checkpoint: corrupt payload in " + path);
    ckpt.theta[i] = std::strtod(tok.c_str(), nullptr);
  }
  return ckpt;
}

void save_store(const CheckpointStore& store, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream meta(dir + "/store.txt");
  meta << "plast-store v1\n";
  meta << "run_id " << store.run_id << "\n";
  meta << "checkpoints " << store.checkpoints.size() << "\n";
  meta << "aborted " << (store.aborted ? 1 : 0) << "\n";
  meta << "curve " << store.task_mean_loss.size() << "\n";
  for (double v : store.task_mean_loss) meta << fmt_hex(v) << "\n";
  for (std::size_t i = 0; i < store.checkpoints.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "/checkpoint_%05zu.txt", i);
    save_checkpoint(store.checkpoints[i], dir + name);
  }
}

CheckpointStore load_store(const std::string& dir) {
  std::ifstream meta(dir + "/store.txt");
  if (!meta) throw std::runtime_error("load_store: cannot open " + dir);
  std::string line;
  if (!std::getline(meta, line) || line != "plast-store v1")
    throw std::runtime_error("load_store: version mismatch");
  CheckpointStore store;
  std::string key;
  std::size_t n_ckpt = 0, n_curve = 0;
  int aborted = 0;
  meta >> key >> store.run_id;
  meta >> key >> n_ckpt;
  meta >> key >> aborted;
  store.aborted = aborted != 0;
  meta >> key >> n_curve;
  store.task_mean_loss.resize(n_curve);
  for (std::size_t i = 0; i < n_curve; ++i) {
    std::string tok;
    meta >> tok;
    store.task_mean_loss[i] = std::strtod(tok.c_str(), nullptr);
  }
  for (std::size_t i = 0; i < n_ckpt; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "/checkpoint_%05zu.txt", i);
    store.checkpoints.push_back(load_checkpoint(dir + name));
  }
  return store;
}

RankingResult pairwise_ranking_accuracy(const std::vector<double>& metric_values,
                                        const std::vector<double>& gains) {
  if (metric_values.size() != gains.size() || gains.size() < 2)
    throw std::invalid_argument(
        "pairwise_ranking_accuracy: need equal-length inputs of size >= 2");
  RankingResult r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gains.size(); ++i)
    for (std::size_t j = i + 1; j < gains.size(); ++j) {
      const double dg = gains[i] - gains[j];
      if (dg == 0.0) {
        ++r.tied_pairs_excluded;
        continue;
      }
      ++r.counted_pairs;
      // Strict inequality: metric ties on a counted pair are incorrect.
      if ((metric_values[i] - metric_values[j]) * dg > 0.0) ++correct;
    }
  if (r.counted_pairs == 0) {
    r.defined = false;
    return r;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.counted_pairs);
  r.per_cell_accuracy = {r.accuracy};
  return r;
}

std::vector<std::string> metric_names(bool with_entk) {
  std::vector<std::string> names = {"or", "eff_rank", "enrank_repr"};
  if (with_entk) names.push_back("enrank_entk");
  names.push_back("enrank_hessian");
  names.push_back("active_fraction");
  return names;
}

double metric_value(const DiagnosticReport& rep, const std::string& name) {
  if (name == "or") return rep.or_value;
  if (name == "eff_rank") return rep.eff_rank;
  if (name == "enrank_repr") return static_cast<double>(rep.enrank_repr);
  if (name == "enrank_entk")
    return rep.enrank_entk ? static_cast<double>(*rep.enrank_entk) : 0.0;
  if (name == "enrank_hessian") return static_cast<double>(rep.enrank_hessian);
  if (name == "active_fraction") return rep.active_fraction;
  throw std::invalid_argument("metric_value: unknown metric " + name);
}

EvalTables evaluate_checkpoints(const std::vector<CheckpointStore>& stores,
                                const std::vector<ValidationTask>& val_tasks,
                                const EvalConfig& cfg) {
  if (stores.empty() || val_tasks.empty())
    throw std::invalid_argument("evaluate_checkpoints: empty stores or tasks");
  for (const CheckpointStore& s : stores)
    if (s.checkpoints.empty())
      throw std::invalid_argument("evaluate_checkpoints: empty store");

  EvalTables tables;
  bool with_entk = true;
  for (const CheckpointStore& store : stores) {
    for (const ValidationTask& vt : val_tasks) {
      const std::string cell = store.run_id + ":" + vt.task_id;
      for (std::size_t ci = 0; ci < store.checkpoints.size(); ++ci) {
        const Checkpoint& ckpt = store.checkpoints[ci];
        MetricCell mc;
        mc.run_id = store.run_id;
        mc.checkpoint_index = ci;
        mc.task_id = vt.task_id;
        mc.report = diagnostic_report(ckpt, vt.data, vt.loss, cfg.diag,
                                      derive_seed(cfg.seed, "diag:" + cell, ci));
        with_entk = with_entk && mc.report.enrank_entk.has_value();
        tables.metrics.push_back(std::move(mc));

        for (std::size_t k : cfg.k_list) {
          GainConfig gc = cfg.gain;
          gc.k = k;
          gc.seed = derive_seed(cfg.seed,
                                "gain:" + cell + ":k" + std::to_string(k), ci);
          GainCell gcell;
          gcell.run_id = store.run_id;
          gcell.checkpoint_index = ci;
          gcell.task_id = vt.task_id;
          gcell.k = k;
          gcell.estimate = k_step_gain(ckpt, vt.data, vt.loss, gc);
          tables.gains.push_back(std::move(gcell));
        }
      }
    }
  }

  // Ranking accuracy per (metric, k), aggregated over (run, task) cells.
  for (const std::string& name : metric_names(with_entk)) {
    for (std::size_t k : cfg.k_list) {
      RankingResult agg;
      agg.metric = name;
      agg.k = k;
      for (const CheckpointStore& store : stores) {
        for (const ValidationTask& vt : val_tasks) {
          std::vector<double> mv;
          std::vector<double> gv;
          for (const MetricCell& mc : tables.metrics)
            if (mc.run_id == store.run_id && mc.task_id == vt.task_id)
              mv.push_back(metric_value(mc.report, name));
          for (const GainCell& gc : tables.gains)
            if (gc.run_id == store.run_id && gc.task_id == vt.task_id &&
                gc.k == k)
              gv.push_back(gc.estimate.gain);
          if (mv.size() < 2) continue;
          const RankingResult cell = pairwise_ranking_accuracy(mv, gv);
          agg.counted_pairs += cell.counted_pairs;
          agg.tied_pairs_excluded += cell.tied_pairs_excluded;
          if (cell.defined) agg.per_cell_accuracy.push_back(cell.accuracy);
        }
      }
      if (agg.per_cell_accuracy.empty()) {
        agg.defined = false;
      } else {
        const MeanStderr ms = mean_stderr(agg.per_cell_accuracy);
        agg.accuracy = ms.mean;
        agg.std_error = ms.se;
      }
      tables.rankings.push_back(std::move(agg));
    }
  }
  return tables;
}

std::vector<AblationRow> subsample_ablation(
    const std::vector<CheckpointStore>& stores,
    const std::vector<ValidationTask>& val_tasks,
    const std::vector<double>& fractions, const EvalTables& tables,
    const EvalConfig& cfg) {
  std::vector<AblationRow> rows;
  DiagnosticConfig sub_diag = cfg.diag;
  sub_diag.reliability_batches = 16;  // subsampling protocol: R=16, m=1
  sub_diag.reliability_batch_size = 1;
  sub_diag.exhaustive_reliability = false;

  for (double f : fractions) {
    if (f <= 0.0 || f > 1.0)
      throw std::invalid_argument("subsample_ablation: fraction out of (0, 1]");
    // Per (run, task, k) cell accuracies of subsampled OR vs full-data gains.
    std::map<std::size_t, std::vector<double>> per_k_cells;
    for (const ValidationTask& vt : val_tasks) {
      const std::size_t n_sub = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::llround(f * static_cast<double>(vt.data.size()))));
      // Uniform subset (prefix of a seeded shuffle).
      std::vector<std::size_t> perm(vt.data.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Rng srng(derive_seed(cfg.seed, "ablate-subset:" + vt.task_id,
                           static_cast<std::uint64_t>(f * 1e6)));
      for (std::size_t i = perm.size(); i-- > 1;)
        std::swap(perm[i], perm[srng.next_below(i + 1)]);
      ValidationTask sub;
      sub.task_id = vt.task_id;
      sub.loss = vt.loss;
      sub.data.X = Matrix(n_sub, vt.data.X.cols);
      sub.data.Y = Matrix(n_sub, vt.data.Y.cols);
      for (std::size_t i = 0; i < n_sub; ++i) {
        std::copy_n(&vt.data.X.data[perm[i] * vt.data.X.cols], vt.data.X.cols,
                    &sub.data.X.data[i * sub.data.X.cols]);
        std::copy_n(&vt.data.Y.data[perm[i] * vt.data.Y.cols], vt.data.Y.cols,
                    &sub.data.Y.data[i * sub.data.Y.cols]);
      }

      for (const CheckpointStore& store : stores) {
        std::vector<double> or_values;
        for (std::size_t ci = 0; ci < store.checkpoints.size(); ++ci) {
          Rng rng(derive_seed(cfg.seed,
                              "ablate-or:" + store.run_id + ":" + vt.task_id,
                              ci));
          or_values.push_back(optimization_readiness(store.checkpoints[ci],
                                                     sub.data, sub.loss,
                                                     sub_diag, rng)
                                  .or_value);
        }
        for (std::size_t k : cfg.k_list) {
          std::vector<double> gv;
          for (const GainCell& gc : tables.gains)
            if (gc.run_id == store.run_id && gc.task_id == vt.task_id &&
                gc.k == k)
              gv.push_back(gc.estimate.gain);
          if (gv.size() != or_values.size() || gv.size() < 2) continue;
          const RankingResult cell = pairwise_ranking_accuracy(or_values, gv);
          if (cell.defined) per_k_cells[k].push_back(cell.accuracy);
        }
      }
    }
    for (const auto& [k, cells] : per_k_cells) {
      const MeanStderr ms = mean_stderr(cells);
      AblationRow row;
      row.fraction = f;
      row.k = k;
      row.accuracy = ms.mean;
      row.std_error = ms.se;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_learning_curve_csv(const std::vector<CheckpointStore>& stores,
                              const std::string& path,
                              const CsvProvenance& prov) {
  std::ofstream out(path);
  write_provenance(out, prov);
  out << "run,task_index,mean_loss\n";
  for (const CheckpointStore& store : stores)
    for (std::size_t t = 0; t < store.task_mean_loss.size(); ++t)
      out << store.run_id << "," << t << "," << fmt_double(store.task_mean_loss[t])
          << "\n";
}

void write_metrics_csv(const EvalTables& tables, const std::string& path,
                       const CsvProvenance& prov) {
  std::ofstream out(path);
  write_provenance(out, prov);
  out << "run,checkpoint,task,loss,or,strength,reliability,eff_rank,"
         "enrank_repr,enrank_entk,enrank_hessian,active_fraction\n";
  for (const MetricCell& mc : tables.metrics) {
    const DiagnosticReport& r = mc.report;
    out << mc.run_id << "," << mc.checkpoint_index << "," << mc.task_id << ","
        << fmt_double(r.loss_at_checkpoint) << "," << fmt_double(r.or_value)
        << "," << fmt_double(r.strength) << "," << fmt_double(r.reliability)
        << "," << fmt_double(r.eff_rank) << "," << r.enrank_repr << ",";
    if (r.enrank_entk)
      out << *r.enrank_entk;
    out << "," << r.enrank_hessian << "," << fmt_double(r.active_fraction)
        << "\n";
  }
}

void write_gains_csv(const EvalTables& tables, const std::string& path,
                     const CsvProvenance& prov) {
  std::ofstream out(path);
  write_provenance(out, prov);
  out << "run,checkpoint,task,k,gain,stderr,excluded_rollouts\n";
  for (const GainCell& gc : tables.gains)
    out << gc.run_id << "," << gc.checkpoint_index << "," << gc.task_id << ","
        << gc.k << "," << fmt_double(gc.estimate.gain) << ","
        << fmt_double(gc.estimate.std_error) << ","
        << gc.estimate.excluded_rollouts << "\n";
}

void write_ranking_csv(const std::vector<RankingResult>& rankings,
                       const std::string& path, const CsvProvenance& prov) {
  std::ofstream out(path);
  write_provenance(out, prov);
  out << "metric,k,accuracy,stderr,counted_pairs,tied_pairs_excluded,defined\n";
  for (const RankingResult& r : rankings)
    out << r.metric << "," << r.k << "," << fmt_double(r.accuracy) << ","
        << fmt_double(r.std_error) << "," << r.counted_pairs << ","
        << r.tied_pairs_excluded << "," << (r.defined ? 1 : 0) << "\n";
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path, const CsvProvenance& prov) {
  std::ofstream out(path);
  write_provenance(out, prov);
  out << "fraction,metric,k,accuracy,stderr\n";
  for (const AblationRow& r : rows)
    out << fmt_double(r.fraction) << "," << r.metric << "," << r.k << ","
        << fmt_double(r.accuracy) << "," << fmt_double(r.std_error) << "\n";
}

}  // namespace plast
