#include "jace/models.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "jace/checkpoint.hpp"
#include "jace/errors.hpp"

namespace jace {

namespace {

using nlohmann::json;

std::vector<std::size_t> gold_indices(const Sentence& sentence, const LabelScheme& scheme) {
  if (!sentence.has_task(scheme.task_name())) {
    throw UserError("sentence has no labels for task '" + scheme.task_name() + "'");
  }
  const std::vector<std::string>& labels = sentence.task_labels(scheme.task_name());
  std::vector<std::size_t> indices;
  indices.reserve(labels.size());
  for (const std::string& label : labels) indices.push_back(scheme.tag_index(label));
  return indices;
}

void add_into(Tensor* a, const Tensor& b) {
  for (std::size_t i = 0; i < a->size(); ++i) a->values()[i] += b.values()[i];
}

// Inverted dropout around one encoder input; inactive outside training.
struct Dropped {
  Tensor out;
  Tensor mask;
  bool active = false;

  Tensor backward(const Tensor& grad) const {
    return active ? apply_mask(grad, mask) : grad;
  }
};

Dropped apply_dropout(const Tensor& x, double rate, bool training, Rng* rng) {
  Dropped d;
  if (rate > 0.0 && training) {
    if (rng == nullptr) throw UserError("dropout requires an rng stream");
    d.active = true;
    d.mask = dropout_mask(x.rows(), x.cols(), rate, *rng);
    d.out = apply_mask(x, d.mask);
  } else {
    d.out = x;
  }
  return d;
}

std::vector<std::string> tags_from_indices(const std::vector<std::size_t>& indices,
                                           const LabelScheme& scheme) {
  std::vector<std::string> tags;
  tags.reserve(indices.size());
  for (std::size_t index : indices) tags.push_back(scheme.tag_name(index));
  return tags;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::SingleTask: return "single";
    case ModelKind::Pipeline: return "pipeline";
    case ModelKind::Multitask: return "multitask";
    case ModelKind::Stacked: return "stacked";
  }
  throw UserError("unreachable model kind");
}

ModelKind model_kind_from(const std::string& name) {
  if (name == "single") return ModelKind::SingleTask;
  if (name == "pipeline") return ModelKind::Pipeline;
  if (name == "multitask") return ModelKind::Multitask;
  if (name == "stacked") return ModelKind::Stacked;
  throw UserError("unknown model kind '" + name +
                  "' (expected single, pipeline, multitask, or stacked)");
}

ModelGraph ModelGraph::build(ModelKind kind, const std::vector<LabelScheme>& schemes,
                             const Vocab& vocab, const ModelOptions& options, Rng& rng,
                             std::optional<PretrainedTable> pretrained) {
  if (kind == ModelKind::Pipeline) {
    throw UserError("a pipeline is two single-task models; build each separately");
  }
  const std::size_t expected = kind == ModelKind::SingleTask ? 1 : 2;
  if (schemes.size() != expected) {
    throw UserError(model_kind_name(kind) + " model needs exactly " +
                    std::to_string(expected) + " task scheme(s), got " +
                    std::to_string(schemes.size()));
  }
  if (expected == 2 && schemes[0].task_name() == schemes[1].task_name()) {
    throw UserError("joint model tasks must have distinct names");
  }
  if (options.dims.emb_dim == 0 || options.dims.hidden == 0 ||
      options.dims.task_hidden == 0) {
    throw UserError("model dimensions must be positive");
  }
  if (options.dropout < 0.0 || options.dropout >= 1.0) {
    throw UserError("dropout must be in [0, 1)");
  }
  if (options.unk_prob < 0.0 || options.unk_prob > 1.0) {
    throw UserError("unk_prob must be in [0, 1]");
  }
  options.gumbel.validate();

  ModelGraph g;
  g.kind_ = kind;
  g.options_ = options;
  g.schemes_ = schemes;
  g.vocab_ = vocab;

  g.embed = EmbeddingStack(vocab.size(), options.dims.emb_dim, rng, std::move(pretrained));
  const std::size_t input_dim = g.embed.total_dim();
  const std::size_t enc_out = 2 * options.dims.hidden;

  if (kind == ModelKind::Stacked) {
    g.encoders.emplace_back("enc." + schemes[0].task_name(), input_dim,
                            options.dims.hidden, rng);
    g.encoders.emplace_back("enc." + schemes[1].task_name(), input_dim,
                            options.dims.hidden, rng);
  } else {
    g.encoders.emplace_back("enc", input_dim, options.dims.hidden, rng);
  }

  for (const LabelScheme& scheme : schemes) {
    TaskHead head;
    std::size_t emit_in = enc_out;
    if (kind == ModelKind::Multitask) {
      head.has_hidden = true;
      head.hidden = LinearLayer("head." + scheme.task_name() + ".hidden", enc_out,
                                options.dims.task_hidden, rng);
      emit_in = options.dims.task_hidden;
    }
    head.emit = LinearLayer("head." + scheme.task_name() + ".emit", emit_in,
                            scheme.num_tags(), rng);
    head.crf = CrfLayer("crf." + scheme.task_name(), scheme, rng);
    g.heads.push_back(std::move(head));
  }

  if (kind == ModelKind::Stacked) {
    g.phi = PhiEmbeddingTable(schemes[0], input_dim, rng);
  }
  return g;
}

const LabelScheme& ModelGraph::scheme_for(const std::string& task) const {
  for (const LabelScheme& scheme : schemes_) {
    if (scheme.task_name() == task) return scheme;
  }
  throw UserError("model has no task '" + task + "'");
}

double ModelGraph::forward_loss(const Sentence& sentence, const ForwardOptions& opts) {
  if (sentence.size() == 0) throw UserError("cannot score an empty sentence");
  if (opts.training && opts.rng == nullptr &&
      (options_.unk_prob > 0.0 || options_.dropout > 0.0 || kind_ == ModelKind::Stacked)) {
    throw UserError("training forward pass requires an rng stream");
  }
  switch (kind_) {
    case ModelKind::SingleTask: return loss_single(sentence, opts);
    case ModelKind::Multitask: return loss_multitask(sentence, opts);
    case ModelKind::Stacked: return loss_stacked(sentence, opts);
    case ModelKind::Pipeline: break;
  }
  throw UserError("pipeline graphs are not trained directly");
}

double ModelGraph::loss_single(const Sentence& sentence, const ForwardOptions& opts) {
  const LabelScheme& scheme = schemes_[0];
  const std::vector<std::size_t> gold = gold_indices(sentence, scheme);

  EmbeddingStack::Cache ecache;
  const Tensor e = embed.forward(vocab_, sentence.tokens(), &ecache, opts.training,
                                 opts.training ? options_.unk_prob : 0.0, opts.rng);
  const Dropped drop = apply_dropout(e, options_.dropout, opts.training, opts.rng);

  BiLstmEncoder::Cache enc_cache;
  const Tensor h = encoders[0].forward(drop.out, &enc_cache);
  const Tensor em = heads[0].emit.forward(h);

  Tensor d_em(em.rows(), em.cols());
  const double loss = heads[0].crf.nll(em, gold, &d_em, opts.scale);

  const Tensor d_h = heads[0].emit.backward(h, d_em);
  const Tensor d_x = encoders[0].backward(enc_cache, d_h);
  embed.backward(ecache, drop.backward(d_x));
  return loss;
}

double ModelGraph::loss_multitask(const Sentence& sentence, const ForwardOptions& opts) {
  EmbeddingStack::Cache ecache;
  const Tensor e = embed.forward(vocab_, sentence.tokens(), &ecache, opts.training,
                                 opts.training ? options_.unk_prob : 0.0, opts.rng);
  const Dropped drop = apply_dropout(e, options_.dropout, opts.training, opts.rng);

  BiLstmEncoder::Cache enc_cache;
  const Tensor h = encoders[0].forward(drop.out, &enc_cache);

  Tensor d_h(h.rows(), h.cols());
  double loss = 0.0;
  bool any = false;
  const double weights[2] = {opts.anon_weight, opts.ce_weight};
  for (std::size_t ti = 0; ti < schemes_.size(); ++ti) {
    const double weight = weights[ti];
    if (weight == 0.0) continue;
    if (!sentence.has_task(schemes_[ti].task_name())) {
      if (options_.multitask_allow_partial) continue;
      throw UserError("sentence has no labels for task '" + schemes_[ti].task_name() + "'");
    }
    const std::vector<std::size_t> gold = gold_indices(sentence, schemes_[ti]);
    TaskHead& head = heads[ti];
    const Tensor pre = head.hidden.forward(h);
    const Tensor act = relu_forward(pre);
    const Tensor em = head.emit.forward(act);

    Tensor d_em(em.rows(), em.cols());
    loss += weight * head.crf.nll(em, gold, &d_em, opts.scale * weight);
    const Tensor d_act = head.emit.backward(act, d_em);
    const Tensor d_pre = relu_backward(pre, d_act);
    add_into(&d_h, head.hidden.backward(h, d_pre));
    any = true;
  }
  if (!any) {
    throw UserError("sentence carries labels for none of the model's tasks");
  }
  const Tensor d_x = encoders[0].backward(enc_cache, d_h);
  embed.backward(ecache, drop.backward(d_x));
  return loss;
}

double ModelGraph::loss_stacked(const Sentence& sentence, const ForwardOptions& opts) {
  const LabelScheme& anon = schemes_[0];
  const LabelScheme& ce = schemes_[1];
  const std::size_t t_len = sentence.size();
  const std::size_t k_anon = anon.num_tags();

  EmbeddingStack::Cache ecache;
  const Tensor e = embed.forward(vocab_, sentence.tokens(), &ecache, opts.training,
                                 opts.training ? options_.unk_prob : 0.0, opts.rng);

  const Dropped drop_a = apply_dropout(e, options_.dropout, opts.training, opts.rng);
  BiLstmEncoder::Cache cache_a;
  const Tensor h_a = encoders[0].forward(drop_a.out, &cache_a);
  const Tensor em_a = heads[0].emit.forward(h_a);

  Tensor d_em_a(em_a.rows(), em_a.cols());
  double loss = 0.0;
  if (opts.anon_weight != 0.0) {
    const std::vector<std::size_t> gold_a = gold_indices(sentence, anon);
    loss += opts.anon_weight *
            heads[0].crf.nll(em_a, gold_a, &d_em_a, opts.scale * opts.anon_weight);
  }

  Tensor d_e(e.rows(), e.cols());
  if (opts.ce_weight != 0.0) {
    // Mask scores: per-token gate distributions over the full ANON tagset.
    const Tensor scores =
        options_.mask_from_marginals ? heads[0].crf.log_marginals(em_a) : em_a;
    const double tau = opts.tau > 0.0 ? opts.tau : options_.gumbel.tau;

    std::vector<std::size_t> stub_gold;
    if (opts.stub_gold_mask) stub_gold = gold_indices(sentence, anon);

    std::vector<std::vector<double>> soft(t_len);
    std::vector<std::vector<double>> used(t_len);
    Tensor ce_in(t_len, e.cols());
    for (std::size_t t = 0; t < t_len; ++t) {
      if (opts.stub_gold_mask) {
        std::vector<double> one_hot(k_anon, 0.0);
        one_hot[stub_gold[t]] = 1.0;
        soft[t] = one_hot;
        used[t] = std::move(one_hot);
      } else {
        std::vector<double> logits(scores.row(t), scores.row(t) + k_anon);
        std::vector<double> noise(k_anon, 0.0);
        if (opts.training && opts.rng != nullptr) {
          noise = sample_gumbel_noise(k_anon, *opts.rng);
        }
        soft[t] = gumbel_softmax(logits, noise, tau);
        used[t] = options_.gumbel.hard ? hard_sample(soft[t]) : soft[t];
      }
      masked_embed(e.row(t), used[t], anon, phi.table.value, ce_in.row(t));
    }

    const Dropped drop_c = apply_dropout(ce_in, options_.dropout, opts.training, opts.rng);
    BiLstmEncoder::Cache cache_c;
    const Tensor h_c = encoders[1].forward(drop_c.out, &cache_c);
    const Tensor em_c = heads[1].emit.forward(h_c);

    const std::vector<std::size_t> gold_c = gold_indices(sentence, ce);
    Tensor d_em_c(em_c.rows(), em_c.cols());
    loss += opts.ce_weight *
            heads[1].crf.nll(em_c, gold_c, &d_em_c, opts.scale * opts.ce_weight);

    const Tensor d_h_c = heads[1].emit.backward(h_c, d_em_c);
    const Tensor d_ce_in = drop_c.backward(encoders[1].backward(cache_c, d_h_c));

    const double tau_grad = opts.tau > 0.0 ? opts.tau : options_.gumbel.tau;
    for (std::size_t t = 0; t < t_len; ++t) {
      std::vector<double> d_y(k_anon, 0.0);
      masked_embed_backward(e.row(t), used[t], anon, phi.table.value, d_ce_in.row(t),
                            d_e.row(t), &d_y, &phi.table.grad);
      // Straight-through: gradient at the hard one-hot is taken as the
      // gradient at the soft sample, then through the softmax to the logits.
      // Marginal-driven and stubbed gates are constants by design.
      if (!opts.stub_gold_mask && !options_.mask_from_marginals) {
        std::vector<double> d_logits(k_anon, 0.0);
        gumbel_softmax_backward(soft[t], d_y, tau_grad, &d_logits);
        for (std::size_t k = 0; k < k_anon; ++k) d_em_a(t, k) += d_logits[k];
      }
    }

    if (opts.trace != nullptr) {
      opts.trace->embeddings = e;
      opts.trace->ce_input = ce_in;
      opts.trace->mask = used;
    }
  }

  const Tensor d_h_a = heads[0].emit.backward(h_a, d_em_a);
  add_into(&d_e, drop_a.backward(encoders[0].backward(cache_a, d_h_a)));
  embed.backward(ecache, d_e);
  return loss;
}

std::map<std::string, std::vector<std::string>> ModelGraph::predict_sentence(
    const Sentence& sentence, std::map<std::string, Tensor>* scores) const {
  if (sentence.size() == 0) throw UserError("cannot decode an empty sentence");
  const bool constrained = options_.constrained_decode;
  std::map<std::string, std::vector<std::string>> out;

  EmbeddingStack::Cache ecache;
  const Tensor e = embed.forward(vocab_, sentence.tokens(), &ecache, false, 0.0, nullptr);

  if (kind_ == ModelKind::SingleTask || kind_ == ModelKind::Multitask) {
    BiLstmEncoder::Cache enc_cache;
    const Tensor h = encoders[0].forward(e, &enc_cache);
    for (std::size_t ti = 0; ti < schemes_.size(); ++ti) {
      const TaskHead& head = heads[ti];
      Tensor em;
      if (head.has_hidden) {
        em = head.emit.forward(relu_forward(head.hidden.forward(h)));
      } else {
        em = head.emit.forward(h);
      }
      const ViterbiResult vit = head.crf.decode(em, constrained);
      out[schemes_[ti].task_name()] = tags_from_indices(vit.labels, schemes_[ti]);
      if (scores != nullptr) (*scores)[schemes_[ti].task_name()] = std::move(em);
    }
    return out;
  }

  // Stacked: the ANON decode drives deterministic one-hot masking.
  const LabelScheme& anon = schemes_[0];
  BiLstmEncoder::Cache cache_a;
  const Tensor h_a = encoders[0].forward(e, &cache_a);
  const Tensor em_a = heads[0].emit.forward(h_a);
  const ViterbiResult vit_a = heads[0].crf.decode(em_a, constrained);
  out[anon.task_name()] = tags_from_indices(vit_a.labels, anon);
  if (scores != nullptr) (*scores)[anon.task_name()] = em_a;

  Tensor ce_in(sentence.size(), e.cols());
  std::vector<double> one_hot(anon.num_tags(), 0.0);
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    one_hot.assign(anon.num_tags(), 0.0);
    one_hot[vit_a.labels[t]] = 1.0;
    masked_embed(e.row(t), one_hot, anon, phi.table.value, ce_in.row(t));
  }
  BiLstmEncoder::Cache cache_c;
  const Tensor h_c = encoders[1].forward(ce_in, &cache_c);
  const Tensor em_c = heads[1].emit.forward(h_c);
  const ViterbiResult vit_c = heads[1].crf.decode(em_c, constrained);
  out[schemes_[1].task_name()] = tags_from_indices(vit_c.labels, schemes_[1]);
  if (scores != nullptr) (*scores)[schemes_[1].task_name()] = std::move(em_c);
  return out;
}

PredictOutput ModelGraph::predict(const std::vector<const Sentence*>& sentences,
                                  bool want_scores) const {
  PredictOutput out;
  for (const LabelScheme& scheme : schemes_) {
    out.tags[scheme.task_name()] = {};
    if (want_scores) out.scores[scheme.task_name()] = {};
  }
  for (const Sentence* sentence : sentences) {
    std::map<std::string, Tensor> scores;
    auto tags = predict_sentence(*sentence, want_scores ? &scores : nullptr);
    for (auto& [task, seq] : tags) out.tags[task].push_back(std::move(seq));
    if (want_scores) {
      for (auto& [task, em] : scores) out.scores[task].push_back(std::move(em));
    }
  }
  return out;
}

std::vector<Parameter*> ModelGraph::parameters() {
  std::vector<Parameter*> params = embed.parameters();
  for (BiLstmEncoder& enc : encoders) {
    for (Parameter* p : enc.parameters()) params.push_back(p);
  }
  for (TaskHead& head : heads) {
    if (head.has_hidden) {
      for (Parameter* p : head.hidden.parameters()) params.push_back(p);
    }
    for (Parameter* p : head.emit.parameters()) params.push_back(p);
    for (Parameter* p : head.crf.parameters()) params.push_back(p);
  }
  if (kind_ == ModelKind::Stacked) params.push_back(&phi.table);
  return params;
}

std::vector<Parameter*> ModelGraph::group_for_task(const std::string& task) {
  const LabelScheme& scheme = scheme_for(task);  // validates the name
  const bool is_first = scheme.task_name() == schemes_[0].task_name();

  std::vector<Parameter*> params;
  auto head_params = [&](TaskHead& head) {
    if (head.has_hidden) {
      for (Parameter* p : head.hidden.parameters()) params.push_back(p);
    }
    for (Parameter* p : head.emit.parameters()) params.push_back(p);
    for (Parameter* p : head.crf.parameters()) params.push_back(p);
  };

  if (kind_ == ModelKind::SingleTask) {
    return parameters();
  }
  if (is_first) {
    // Shared parameters schedule with the de-identification group.
    for (Parameter* p : embed.parameters()) params.push_back(p);
    for (Parameter* p : encoders[0].parameters()) params.push_back(p);
    head_params(heads[0]);
    return params;
  }
  if (kind_ == ModelKind::Stacked) {
    for (Parameter* p : encoders[1].parameters()) params.push_back(p);
  }
  head_params(heads[1]);
  if (kind_ == ModelKind::Stacked) params.push_back(&phi.table);
  return params;
}

namespace {

json options_to_json(const ModelOptions& o) {
  json j;
  j["dims"] = {{"emb_dim", o.dims.emb_dim},
               {"hidden", o.dims.hidden},
               {"task_hidden", o.dims.task_hidden}};
  j["lowercase"] = o.lowercase;
  j["dropout"] = o.dropout;
  j["unk_prob"] = o.unk_prob;
  j["constrained_decode"] = o.constrained_decode;
  j["multitask_allow_partial"] = o.multitask_allow_partial;
  j["mask_from_marginals"] = o.mask_from_marginals;
  j["gumbel"] = {{"tau", o.gumbel.tau},
                 {"hard", o.gumbel.hard},
                 {"anneal", o.gumbel.anneal},
                 {"tau_min", o.gumbel.tau_min},
                 {"anneal_rate", o.gumbel.anneal_rate}};
  return j;
}

ModelOptions options_from_json(const json& j) {
  ModelOptions o;
  o.dims.emb_dim = j.at("dims").at("emb_dim").get<std::size_t>();
  o.dims.hidden = j.at("dims").at("hidden").get<std::size_t>();
  o.dims.task_hidden = j.at("dims").at("task_hidden").get<std::size_t>();
  o.lowercase = j.at("lowercase").get<bool>();
  o.dropout = j.at("dropout").get<double>();
  o.unk_prob = j.at("unk_prob").get<double>();
  o.constrained_decode = j.at("constrained_decode").get<bool>();
  o.multitask_allow_partial = j.at("multitask_allow_partial").get<bool>();
  o.mask_from_marginals = j.at("mask_from_marginals").get<bool>();
  o.gumbel.tau = j.at("gumbel").at("tau").get<double>();
  o.gumbel.hard = j.at("gumbel").at("hard").get<bool>();
  o.gumbel.anneal = j.at("gumbel").at("anneal").get<bool>();
  o.gumbel.tau_min = j.at("gumbel").at("tau_min").get<double>();
  o.gumbel.anneal_rate = j.at("gumbel").at("anneal_rate").get<double>();
  return o;
}

}  // namespace

void save_model(const std::string& dir, ModelGraph& graph) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);

  json manifest;
  manifest["format"] = 1;
  manifest["kind"] = model_kind_name(graph.kind());
  json schemes = json::array();
  for (const LabelScheme& scheme : graph.schemes()) {
    schemes.push_back({{"task", scheme.task_name()}, {"classes", scheme.classes()}});
  }
  manifest["schemes"] = schemes;
  manifest["options"] = options_to_json(graph.options());
  manifest["frozen_dim"] = graph.embed.frozen_dim();
  manifest["checkpoint"] = kCheckpointFile;
  manifest["vocab"] = kVocabFile;

  std::ofstream mf(base / kManifestFile, std::ios::binary | std::ios::trunc);
  if (!mf) throw IoError("cannot write manifest in '" + dir + "'");
  mf << manifest.dump(2) << "\n";
  if (!mf) throw IoError("manifest write failed in '" + dir + "'");

  graph.vocab().save((base / kVocabFile).string());
  if (graph.embed.has_frozen()) {
    std::ofstream wf(base / kFrozenWordsFile, std::ios::binary | std::ios::trunc);
    if (!wf) throw IoError("cannot write frozen word list in '" + dir + "'");
    for (const std::string& word : graph.embed.frozen_words) wf << word << "\n";
  }
  save_checkpoint((base / kCheckpointFile).string(), graph.parameters());
}

ModelGraph load_model(const std::string& dir) {
  const std::filesystem::path base(dir);
  std::ifstream mf(base / kManifestFile, std::ios::binary);
  if (!mf) throw IoError("cannot open manifest in '" + dir + "'");
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw IoError("manifest in '" + dir + "' is not valid JSON: " + e.what());
  }

  try {
    const ModelKind kind = model_kind_from(manifest.at("kind").get<std::string>());
    if (kind == ModelKind::Pipeline) {
      throw UserError("pipeline directories hold two sub-models; load those instead");
    }
    std::vector<LabelScheme> schemes;
    for (const json& js : manifest.at("schemes")) {
      schemes.emplace_back(js.at("task").get<std::string>(),
                           js.at("classes").get<std::vector<std::string>>());
    }
    const ModelOptions options = options_from_json(manifest.at("options"));
    const Vocab vocab =
        Vocab::load((base / manifest.at("vocab").get<std::string>()).string());

    std::optional<PretrainedTable> pretrained;
    const std::size_t frozen_dim = manifest.at("frozen_dim").get<std::size_t>();
    if (frozen_dim > 0) {
      PretrainedTable table;
      table.dim = frozen_dim;
      std::ifstream wf(base / kFrozenWordsFile, std::ios::binary);
      if (!wf) throw IoError("cannot open frozen word list in '" + dir + "'");
      std::string word;
      while (std::getline(wf, word)) {
        if (word.empty()) continue;
        table.index[word] = table.words.size();
        table.words.push_back(word);
      }
      table.vectors = Tensor(table.words.size(), frozen_dim);
      pretrained = std::move(table);
    }

    Rng scratch(0);
    ModelGraph graph = ModelGraph::build(kind, schemes, vocab, options, scratch,
                                         std::move(pretrained));
    load_checkpoint((base / manifest.at("checkpoint").get<std::string>()).string(),
                    graph.parameters());
    return graph;
  } catch (const json::exception& e) {
    throw IoError("manifest in '" + dir + "' is malformed: " + e.what());
  }
}

}  // namespace jace
