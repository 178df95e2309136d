#include "jace/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "jace/errors.hpp"
#include "jace/evaluation.hpp"
#include "jace/rng.hpp"

namespace jace {

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw UserError("base_lr must be > 0");
  if (batch_size == 0) throw UserError("batch_size must be >= 1");
  if (!(anneal_factor > 0.0) || anneal_factor >= 1.0) {
    throw UserError("anneal_factor must be in (0, 1)");
  }
  if (patience == 0) throw UserError("patience must be >= 1");
  if (max_epochs == 0) throw UserError("max_epochs must be >= 1");
  if (!(ce_branch_lr > 0.0)) throw UserError("ce_branch_lr must be > 0");
  if (!(dev_fraction > 0.0) || dev_fraction >= 1.0) {
    throw UserError("dev_fraction must be in (0, 1)");
  }
  if (!(lr_floor > 0.0)) throw UserError("lr_floor must be > 0");
  if (clip_norm < 0.0) throw UserError("clip_norm must be >= 0");
  if (stop_metric < 0.0 || stop_metric > 1.0) {
    throw UserError("stop_metric must be in [0, 1]");
  }
}

std::pair<Corpus, Corpus> make_dev_split(const Corpus& corpus, double dev_fraction,
                                         std::uint64_t seed) {
  if (!(dev_fraction > 0.0) || dev_fraction >= 1.0) {
    throw UserError("dev_fraction must be in (0, 1)");
  }
  if (corpus.size() < 10) {
    throw UserError("dev split needs at least 10 documents, got " +
                    std::to_string(corpus.size()));
  }
  std::size_t n_dev = static_cast<std::size_t>(
      std::lround(dev_fraction * static_cast<double>(corpus.size())));
  n_dev = std::max<std::size_t>(n_dev, 1);
  n_dev = std::min(n_dev, corpus.size() - 1);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<bool> in_dev(corpus.size(), false);
  for (std::size_t i = 0; i < n_dev; ++i) in_dev[order[i]] = true;

  std::pair<Corpus, Corpus> split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (in_dev[i] ? split.second : split.first).push_back(corpus[i]);
  }
  return split;
}

std::map<std::string, double> evaluate_dev(ModelGraph& graph, const Corpus& dev) {
  const std::vector<const Sentence*> sentences = all_sentences(dev);
  const PredictOutput out = graph.predict(sentences);
  std::map<std::string, double> f1s;
  for (const LabelScheme& scheme : graph.schemes()) {
    f1s[scheme.task_name()] =
        exact_f1_tags(sentences, out.tags.at(scheme.task_name()), scheme.task_name())
            .micro.f1();
  }
  return f1s;
}

std::string TrainHistory::to_jsonl() const {
  std::string out;
  for (const EpochRecord& rec : epochs) {
    nlohmann::json j;
    j["epoch"] = rec.epoch;
    j["train_loss"] = rec.train_loss;
    j["dev"] = rec.dev_f1;
    j["lr"] = rec.lr;
    j["best"] = rec.best;
    out += j.dump();
    out += "\n";
  }
  return out;
}

namespace {

struct GroupState {
  std::string task;
  std::vector<Parameter*> params;
  double lr = 0.0;
  bool active = false;
  double best = 0.0;  // strict improvement resets the plateau counter
  std::size_t plateau = 0;
};

double metric_for(const std::map<std::string, double>& dev, const std::string& task) {
  const auto it = dev.find(task);
  if (it == dev.end()) {
    throw UserError("dev evaluation produced no metric for task '" + task + "'");
  }
  return it->second;
}

}  // namespace

TrainHistory train_model(ModelGraph& graph, const Corpus& train_set, const Corpus& dev_set,
                         const TrainConfig& config, DevEvaluator dev_eval,
                         const std::string& save_dir) {
  config.validate();
  if (train_set.empty()) throw UserError("training set is empty");
  if (dev_set.empty()) throw UserError("development set is empty");
  const bool joint =
      graph.kind() == ModelKind::Multitask || graph.kind() == ModelKind::Stacked;

  const std::string watch =
      config.watch_task.empty()
          ? graph.schemes()[joint ? 1 : 0].task_name()
          : config.watch_task;
  graph.scheme_for(watch);

  std::vector<GroupState> groups;
  {
    GroupState g;
    g.task = graph.schemes()[0].task_name();
    g.params = graph.group_for_task(g.task);
    g.lr = config.base_lr;
    g.active = true;
    groups.push_back(std::move(g));
  }
  if (joint) {
    GroupState g;
    g.task = graph.schemes()[1].task_name();
    g.params = graph.group_for_task(g.task);
    g.lr = 0.0;  // set to ce_branch_lr on activation
    g.active = false;
    groups.push_back(std::move(g));
  }
  const std::vector<Parameter*> all_params = graph.parameters();

  if (!dev_eval) dev_eval = evaluate_dev;

  const Rng base(config.seed);
  Rng shuffle_rng = base.split(1);
  Rng noise_rng = base.split(2);

  std::vector<const Sentence*> sentences = all_sentences(train_set);
  if (sentences.empty()) throw UserError("training set has no sentences");

  TrainHistory history;
  history.watched_task = watch;
  double best_metric = -1.0;
  std::size_t best_epoch = 0;
  std::vector<Tensor> best_values;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const bool pretraining = joint && epoch <= config.pretrain_anon_epochs;
    if (joint && !pretraining && !groups[1].active) {
      groups[1].active = true;
      groups[1].lr = config.ce_branch_lr;
    }
    const double tau = graph.options().gumbel.tau_for_epoch(epoch - 1);

    // The rates in force during this epoch; the plateau update below only
    // affects later epochs.
    std::map<std::string, double> epoch_lr;
    for (const GroupState& g : groups) epoch_lr[g.task] = g.active ? g.lr : 0.0;

    shuffle_rng.shuffle(sentences);
    double loss_sum = 0.0;
    const std::size_t n_batches = (sentences.size() + config.batch_size - 1) / config.batch_size;
    for (std::size_t batch = 0; batch < n_batches; ++batch) {
      const std::size_t lo = batch * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, sentences.size());
      ForwardOptions fo;
      fo.scale = 1.0 / static_cast<double>(hi - lo);
      fo.training = true;
      fo.rng = &noise_rng;
      fo.ce_weight = pretraining ? 0.0 : 1.0;
      fo.tau = tau;
      for (std::size_t i = lo; i < hi; ++i) {
        const double loss = graph.forward_loss(*sentences[i], fo);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch + 1));
        }
        loss_sum += loss;
      }
      try {
        if (config.clip_norm > 0.0) clip_grad_norm(all_params, config.clip_norm);
        for (GroupState& g : groups) {
          if (g.active) sgd_step(g.params, g.lr);
        }
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch + 1) + ")");
      }
    }

    const std::map<std::string, double> dev = dev_eval(graph, dev_set);
    for (GroupState& g : groups) {
      if (!g.active) continue;
      const double metric = metric_for(dev, g.task);
      if (metric > g.best) {
        g.best = metric;
        g.plateau = 0;
      } else if (++g.plateau >= config.patience) {
        g.lr *= config.anneal_factor;
        g.plateau = 0;
      }
    }

    const double watched = metric_for(dev, watch);
    const bool is_best = watched > best_metric;
    if (is_best) {
      best_metric = watched;
      best_epoch = epoch;
      best_values.clear();
      for (Parameter* p : all_params) best_values.push_back(p->value);
      if (!save_dir.empty()) save_model(save_dir, graph);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(sentences.size());
    rec.dev_f1 = dev;
    rec.lr = epoch_lr;
    rec.best = is_best;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    history.epochs.push_back(std::move(rec));

    if (config.stop_metric > 0.0 && watched >= config.stop_metric) break;
    bool all_below = true;
    for (const GroupState& g : groups) {
      if (g.active && g.lr >= config.lr_floor) all_below = false;
      if (!g.active) all_below = false;  // a dormant group still has to train
    }
    if (all_below) break;
  }

  if (best_epoch > 0) {
    for (std::size_t i = 0; i < all_params.size(); ++i) {
      all_params[i]->value = best_values[i];
      all_params[i]->zero_grad();
    }
  }
  history.best_epoch = best_epoch;
  history.best_metric = best_metric < 0.0 ? 0.0 : best_metric;
  return history;
}

}  // namespace jace
