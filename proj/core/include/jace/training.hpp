#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "jace/corpus.hpp"
#include "jace/models.hpp"

namespace jace {

struct TrainConfig {
  double base_lr = 0.1;
  std::size_t batch_size = 32;          // sentences
  double anneal_factor = 0.5;           // lr multiplier at each plateau
  std::size_t patience = 3;             // epochs without improvement before halving
  std::size_t max_epochs = 100;
  std::size_t pretrain_anon_epochs = 3; // joint models only
  double ce_branch_lr = 0.2;            // CE group lr when it activates
  double dev_fraction = 0.10;
  double lr_floor = 1e-4;               // stop once every active lr is below this
  double clip_norm = 0.0;               // 0 = no gradient clipping
  double stop_metric = 0.0;             // > 0: stop once the watched dev F1 reaches it
  std::string watch_task;               // empty: second task for joint models, else the sole task
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::map<std::string, double> dev_f1;
  std::map<std::string, double> lr;  // per task group; 0 while a group is inactive
  double wall_seconds = 0.0;   // informational; excluded from serialized history
  bool best = false;           // new best watched metric at this epoch
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::string watched_task;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch was snapshotted
  double best_metric = 0.0;

  // One JSON object per line; wall time omitted so identical runs serialize
  // byte-identically.
  std::string to_jsonl() const;
};

// Document-granularity split: |dev| = round(fraction * |docs|), at least 1.
// Requires >= 10 documents. Deterministic in (corpus order, seed).
std::pair<Corpus, Corpus> make_dev_split(const Corpus& corpus, double dev_fraction,
                                         std::uint64_t seed);

using DevEvaluator = std::function<std::map<std::string, double>(ModelGraph&, const Corpus&)>;

// Exact-match micro F1 per task over the dev set (the default evaluator).
std::map<std::string, double> evaluate_dev(ModelGraph& graph, const Corpus& dev);

// Trains in place and restores the best-dev parameters before returning.
//
// Single-task models follow: SGD, shuffled batches, batch-mean loss, plateau
// halving after `patience` epochs without strict dev improvement, stop at
// max_epochs or when the lr falls below lr_floor.
//
// Joint models (Multitask, Stacked) additionally follow the pretraining
// regimen: the first `pretrain_anon_epochs` epochs train only the first
// task's group (the CE loss is switched off), then the CE group joins at
// ce_branch_lr; each group's plateau schedule is driven by its own task's
// dev F1. `dev_eval` overrides the dev metric (used by schedule tests);
// `save_dir`, when non-empty, receives a checkpoint at every new best epoch.
TrainHistory train_model(ModelGraph& graph, const Corpus& train_set, const Corpus& dev_set,
                         const TrainConfig& config, DevEvaluator dev_eval = nullptr,
                         const std::string& save_dir = "");

}  // namespace jace
