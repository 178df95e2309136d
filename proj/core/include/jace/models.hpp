#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jace/anonymize.hpp"
#include "jace/corpus.hpp"
#include "jace/crf.hpp"
#include "jace/embeddings.hpp"
#include "jace/layers.hpp"
#include "jace/lstm.hpp"
#include "jace/rng.hpp"
#include "jace/tensor.hpp"

namespace jace {

enum class ModelKind { SingleTask, Pipeline, Multitask, Stacked };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from(const std::string& name);

struct ModelDims {
  std::size_t emb_dim = 32;      // trainable embedding width
  std::size_t hidden = 32;       // BiLSTM units per direction
  std::size_t task_hidden = 32;  // multitask task-specific hidden layer
};

struct ModelOptions {
  ModelDims dims;
  bool lowercase = false;
  double dropout = 0.0;   // inverted dropout on encoder inputs; off by default
  double unk_prob = 0.1;  // singleton -> UNK substitution rate during training
  bool constrained_decode = true;
  bool multitask_allow_partial = false;  // skip heads whose labels are absent
  bool mask_from_marginals = false;      // feed CRF log-marginals to the gate
  GumbelConfig gumbel;
};

// Per-call knobs for forward_loss. Task weights gate the two losses of the
// joint models (pretraining runs with ce_weight = 0); `scale` multiplies all
// gradients (the trainer passes 1/batch for batch means).
struct ForwardOptions {
  double scale = 1.0;
  bool training = true;
  Rng* rng = nullptr;  // required when training (unk, dropout, Gumbel noise)
  double anon_weight = 1.0;
  double ce_weight = 1.0;
  double tau = 0.0;  // > 0 overrides the configured Gumbel temperature
  // Testing hook: drive the stacked mask with gold one-hots instead of
  // Gumbel samples (the "perfect de-identifier" stub).
  bool stub_gold_mask = false;
  struct StackedTrace* trace = nullptr;
};

// Intermediate stacked-pass values captured for inspection.
struct StackedTrace {
  Tensor embeddings;                     // original per-token vectors
  Tensor ce_input;                       // after the masked embedding layer
  std::vector<std::vector<double>> mask; // per-token distributions as consumed
};

struct PredictOutput {
  // task -> per-sentence BIO tag sequences, parallel to the input order.
  std::map<std::string, std::vector<std::vector<std::string>>> tags;
  // task -> per-sentence emission score matrices; filled when requested.
  std::map<std::string, std::vector<Tensor>> scores;
};

// One architecture instance: embedding stack, encoder(s), per-task heads.
// Parameter registration order (= checkpoint order): embeddings, encoders,
// heads in scheme order (hidden, emission, CRF), PHI table last.
//
// Scheme order is significant for the joint kinds: the first scheme is the
// de-identification task (it drives the stacked mask and is the pretrained
// group), the second is concept extraction.
class ModelGraph {
 public:
  ModelGraph() = default;

  static ModelGraph build(ModelKind kind, const std::vector<LabelScheme>& schemes,
                          const Vocab& vocab, const ModelOptions& options, Rng& rng,
                          std::optional<PretrainedTable> pretrained = std::nullopt);

  // Runs forward and backward for one sentence; gradients accumulate into
  // the parameters. Returns the (weighted) loss.
  double forward_loss(const Sentence& sentence, const ForwardOptions& opts);

  // Deterministic per-sentence decode; no noise, no dropout. For Stacked the
  // mask is driven by the ANON head's constrained Viterbi labels.
  std::map<std::string, std::vector<std::string>> predict_sentence(
      const Sentence& sentence, std::map<std::string, Tensor>* scores = nullptr) const;
  PredictOutput predict(const std::vector<const Sentence*>& sentences,
                        bool want_scores = false) const;

  // Declaration order, each parameter exactly once.
  std::vector<Parameter*> parameters();
  // Scheduling groups for the joint regimen. The first scheme's group holds
  // the shared parameters (embeddings, shared or ANON encoder); the second's
  // holds everything trained only by the CE loss. Groups are disjoint and
  // cover all parameters.
  std::vector<Parameter*> group_for_task(const std::string& task);

  ModelKind kind() const { return kind_; }
  const ModelOptions& options() const { return options_; }
  const std::vector<LabelScheme>& schemes() const { return schemes_; }
  const LabelScheme& scheme_for(const std::string& task) const;
  const Vocab& vocab() const { return vocab_; }

  EmbeddingStack embed;
  std::vector<BiLstmEncoder> encoders;  // 1, or 2 for Stacked (ANON, CE)
  struct TaskHead {
    bool has_hidden = false;
    LinearLayer hidden;
    LinearLayer emit;
    CrfLayer crf;
  };
  std::vector<TaskHead> heads;  // parallel to schemes()
  PhiEmbeddingTable phi;        // Stacked only

 private:
  double loss_single(const Sentence& sentence, const ForwardOptions& opts);
  double loss_multitask(const Sentence& sentence, const ForwardOptions& opts);
  double loss_stacked(const Sentence& sentence, const ForwardOptions& opts);

  ModelKind kind_ = ModelKind::SingleTask;
  ModelOptions options_;
  std::vector<LabelScheme> schemes_;
  Vocab vocab_;
};

// Model directory layout: manifest.json + params.bin + vocab.tsv
// (+ frozen_words.txt when a pretrained table is attached).
void save_model(const std::string& dir, ModelGraph& graph);
ModelGraph load_model(const std::string& dir);

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kCheckpointFile = "params.bin";
inline constexpr const char* kVocabFile = "vocab.tsv";
inline constexpr const char* kFrozenWordsFile = "frozen_words.txt";

}  // namespace jace
