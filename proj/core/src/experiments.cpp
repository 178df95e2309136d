#include "jace/experiments.hpp"

#include <iomanip>
#include <sstream>

#include "jace/anonymize.hpp"
#include "jace/errors.hpp"

namespace jace {

std::string variant_name(CorpusVariant variant) {
  switch (variant) {
    case CorpusVariant::NonAnon: return "non-anon.";
    case CorpusVariant::AnonPredicted: return "anon-predicted";
    case CorpusVariant::AnonGold: return "anon-gold";
  }
  throw UserError("unreachable corpus variant");
}

CorpusVariant variant_from(const std::string& name) {
  if (name == "non-anon." || name == "non-anon") return CorpusVariant::NonAnon;
  if (name == "anon-predicted") return CorpusVariant::AnonPredicted;
  if (name == "anon-gold") return CorpusVariant::AnonGold;
  throw UserError("unknown corpus variant '" + name +
                  "' (expected non-anon., anon-predicted, or anon-gold)");
}

Corpus anonymize_with_model(const ModelGraph& anon_model, const Corpus& docs) {
  if (anon_model.schemes().size() != 1) {
    throw UserError("anonymization requires a single-task de-identification model");
  }
  const std::string& task = anon_model.schemes()[0].task_name();
  Corpus out;
  out.reserve(docs.size());
  for (const Document& doc : docs) {
    std::vector<std::vector<std::string>> labels;
    labels.reserve(doc.sentences.size());
    for (const Sentence& sentence : doc.sentences) {
      labels.push_back(anon_model.predict_sentence(sentence).at(task));
    }
    out.push_back(substitute_placeholders(doc, labels, task));
  }
  return out;
}

std::pair<ModelGraph, TrainHistory> train_best_of(
    const GraphFactory& factory, const Corpus& train_set, const Corpus& dev_set,
    const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
    std::vector<TrainHistory>* all_histories) {
  if (seeds.empty()) throw UserError("at least one seed is required");
  ModelGraph best_graph;
  TrainHistory best_history;
  bool have_best = false;
  for (std::uint64_t seed : seeds) {
    TrainConfig run_config = config;
    run_config.seed = seed;
    ModelGraph graph = factory(seed);
    TrainHistory history = train_model(graph, train_set, dev_set, run_config);
    if (all_histories != nullptr) all_histories->push_back(history);
    if (!have_best || history.best_metric > best_history.best_metric) {
      best_graph = std::move(graph);
      best_history = std::move(history);
      have_best = true;
    }
  }
  return {std::move(best_graph), std::move(best_history)};
}

PipelineResult train_pipeline(const Corpus& train_set, const Corpus& dev_set,
                              const LabelScheme& anon_scheme, const LabelScheme& ce_scheme,
                              const ModelOptions& options, const TrainConfig& config) {
  PipelineResult result;

  // Each stage is single-task; it watches its own task regardless of any
  // joint-model watch setting.
  TrainConfig stage_config = config;
  stage_config.watch_task.clear();

  Rng anon_rng = Rng(config.seed).split(1000);
  const Vocab anon_vocab =
      Vocab::build(train_set, anon_scheme.classes(), options.lowercase);
  result.anon = ModelGraph::build(ModelKind::SingleTask, {anon_scheme}, anon_vocab,
                                  options, anon_rng);
  result.anon_history = train_model(result.anon, train_set, dev_set, stage_config);

  const Corpus anon_train = anonymize_with_model(result.anon, train_set);
  const Corpus anon_dev = anonymize_with_model(result.anon, dev_set);

  Rng ce_rng = Rng(config.seed).split(1001);
  const Vocab ce_vocab = Vocab::build(anon_train, anon_scheme.classes(), options.lowercase);
  result.ce = ModelGraph::build(ModelKind::SingleTask, {ce_scheme}, ce_vocab,
                                options, ce_rng);
  result.ce_history = train_model(result.ce, anon_train, anon_dev, stage_config);
  return result;
}

Corpus pipeline_predict(const ModelGraph& anon_model, const ModelGraph& ce_model,
                        const Corpus& input) {
  if (ce_model.schemes().size() != 1) {
    throw UserError("pipeline concept extractor must be a single-task model");
  }
  const std::string& ce_task = ce_model.schemes()[0].task_name();
  Corpus anonymized = anonymize_with_model(anon_model, input);
  for (Document& doc : anonymized) {
    for (Sentence& sentence : doc.sentences) {
      auto tags = ce_model.predict_sentence(sentence);
      std::map<std::string, std::vector<std::string>> labels = sentence.labels();
      labels[ce_task] = std::move(tags.at(ce_task));
      sentence = Sentence(sentence.tokens(), std::move(labels));
    }
  }
  return anonymized;
}

namespace {

Corpus make_variant(const Corpus& docs, CorpusVariant variant,
                    const ModelGraph& anon_model, const std::string& anon_task) {
  switch (variant) {
    case CorpusVariant::NonAnon: return docs;
    case CorpusVariant::AnonPredicted: return anonymize_with_model(anon_model, docs);
    case CorpusVariant::AnonGold: return substitute_placeholders_gold(docs, anon_task);
  }
  throw UserError("unreachable corpus variant");
}

}  // namespace

MatrixResult run_matrix(const Corpus& train_set, const Corpus& test_set,
                        const std::vector<LabelScheme>& schemes,
                        const MatrixConfig& config) {
  const LabelScheme* anon_scheme = nullptr;
  const LabelScheme* ce_scheme = nullptr;
  for (const LabelScheme& scheme : schemes) {
    if (scheme.task_name() == config.anon_task) anon_scheme = &scheme;
    if (scheme.task_name() == config.ce_task) ce_scheme = &scheme;
  }
  if (anon_scheme == nullptr || ce_scheme == nullptr) {
    throw UserError("matrix experiment needs schemes for tasks '" + config.anon_task +
                    "' and '" + config.ce_task + "'");
  }

  const auto [tr, dev] =
      make_dev_split(train_set, config.train.dev_fraction, config.train.seed);

  Rng anon_rng = Rng(config.train.seed).split(2000);
  const Vocab anon_vocab = Vocab::build(tr, anon_scheme->classes(), config.model.lowercase);
  ModelGraph anon_model = ModelGraph::build(ModelKind::SingleTask, {*anon_scheme},
                                            anon_vocab, config.model, anon_rng);
  TrainConfig anon_config = config.train;
  anon_config.watch_task = config.anon_task;
  train_model(anon_model, tr, dev, anon_config);

  // Variant corpora share the same document membership everywhere.
  Corpus tr_variant[3];
  Corpus dev_variant[3];
  Corpus test_variant[3];
  const CorpusVariant variants[3] = {CorpusVariant::NonAnon, CorpusVariant::AnonPredicted,
                                     CorpusVariant::AnonGold};
  for (int v = 0; v < 3; ++v) {
    tr_variant[v] = make_variant(tr, variants[v], anon_model, config.anon_task);
    dev_variant[v] = make_variant(dev, variants[v], anon_model, config.anon_task);
    test_variant[v] = make_variant(test_set, variants[v], anon_model, config.anon_task);
  }

  const std::pair<CorpusVariant, CorpusVariant> grid[6] = {
      {CorpusVariant::NonAnon, CorpusVariant::NonAnon},
      {CorpusVariant::NonAnon, CorpusVariant::AnonPredicted},
      {CorpusVariant::AnonPredicted, CorpusVariant::NonAnon},
      {CorpusVariant::AnonPredicted, CorpusVariant::AnonPredicted},
      {CorpusVariant::AnonGold, CorpusVariant::AnonPredicted},
      {CorpusVariant::AnonGold, CorpusVariant::AnonGold},
  };

  MatrixResult result;
  TrainConfig ce_config = config.train;
  ce_config.watch_task = config.ce_task;
  for (int row = 0; row < 6; ++row) {
    const int tv = static_cast<int>(grid[row].first);
    const int ev = static_cast<int>(grid[row].second);

    Rng ce_rng = Rng(config.train.seed).split(2001 + static_cast<std::uint64_t>(row));
    const Vocab ce_vocab =
        Vocab::build(tr_variant[tv], anon_scheme->classes(), config.model.lowercase);
    ModelGraph ce_model = ModelGraph::build(ModelKind::SingleTask, {*ce_scheme}, ce_vocab,
                                            config.model, ce_rng);
    const TrainHistory history =
        train_model(ce_model, tr_variant[tv], dev_variant[tv], ce_config);

    const std::vector<const Sentence*> sentences = all_sentences(test_variant[ev]);
    const PredictOutput preds = ce_model.predict(sentences);

    MatrixRow out_row;
    out_row.train_variant = grid[row].first;
    out_row.test_variant = grid[row].second;
    out_row.dev_f1 = history.best_metric;
    out_row.test = exact_f1_tags(sentences, preds.tags.at(config.ce_task), config.ce_task);
    result.rows.push_back(std::move(out_row));
  }
  return result;
}

std::string MatrixResult::to_report() const {
  std::ostringstream out;
  out << "row\ttrain_on\ttest_on\tdev_f1\ttest_f1\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << "(" << (i + 1) << ")\t" << variant_name(rows[i].train_variant) << "\t"
        << variant_name(rows[i].test_variant) << "\t" << rows[i].dev_f1 << "\t"
        << rows[i].test.micro.f1() << "\n";
  }
  return out.str();
}

}  // namespace jace
