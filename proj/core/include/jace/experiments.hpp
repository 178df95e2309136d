#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "jace/corpus.hpp"
#include "jace/evaluation.hpp"
#include "jace/models.hpp"
#include "jace/training.hpp"

namespace jace {

enum class CorpusVariant { NonAnon, AnonPredicted, AnonGold };

std::string variant_name(CorpusVariant variant);  // "non-anon." etc.
CorpusVariant variant_from(const std::string& name);

// Predicts the anonymization task on every sentence and substitutes
// placeholders for the predicted spans; other task columns are realigned
// gold labels.
Corpus anonymize_with_model(const ModelGraph& anon_model, const Corpus& docs);

// Trains one model per seed (same data and config apart from the seed) and
// returns the one with the best watched dev metric; ties keep the earliest
// seed. `factory` must build a freshly initialized graph for a given seed.
using GraphFactory = std::function<ModelGraph(std::uint64_t seed)>;
std::pair<ModelGraph, TrainHistory> train_best_of(
    const GraphFactory& factory, const Corpus& train_set, const Corpus& dev_set,
    const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
    std::vector<TrainHistory>* all_histories = nullptr);

// Sequential architecture: a de-identification tagger plus a concept
// extractor trained on the tagger's anonymized output.
struct PipelineResult {
  ModelGraph anon;
  TrainHistory anon_history;
  ModelGraph ce;
  TrainHistory ce_history;
};

PipelineResult train_pipeline(const Corpus& train_set, const Corpus& dev_set,
                              const LabelScheme& anon_scheme, const LabelScheme& ce_scheme,
                              const ModelOptions& options, const TrainConfig& config);

// Anonymizes with the tagger, then replaces the CE column with the
// extractor's predictions on the anonymized text.
Corpus pipeline_predict(const ModelGraph& anon_model, const ModelGraph& ce_model,
                        const Corpus& input);

// The six train-on/test-on combinations over {non-anon., anon-predicted,
// anon-gold}, in the fixed row order (1)..(6).
struct MatrixRow {
  CorpusVariant train_variant = CorpusVariant::NonAnon;
  CorpusVariant test_variant = CorpusVariant::NonAnon;
  double dev_f1 = 0.0;
  EvalResult test;
};

struct MatrixResult {
  std::vector<MatrixRow> rows;
  std::string to_report() const;  // one line per row, 4 decimal places
};

struct MatrixConfig {
  ModelOptions model;
  TrainConfig train;
  std::string anon_task = "anon";
  std::string ce_task = "ce";
};

// Trains one ANON tagger on the training corpus, derives the three variants
// of train/dev/test, then trains and evaluates one CE extractor per row.
// Document membership of the internal dev split is shared across variants.
MatrixResult run_matrix(const Corpus& train_set, const Corpus& test_set,
                        const std::vector<LabelScheme>& schemes, const MatrixConfig& config);

}  // namespace jace
