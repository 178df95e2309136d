#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jace/config.hpp"
#include "jace/corpus.hpp"
#include "jace/errors.hpp"
#include "jace/evaluation.hpp"
#include "jace/experiments.hpp"
#include "jace/models.hpp"
#include "jace/synthgen.hpp"
#include "jace/training.hpp"

namespace {

using namespace jace;
using nlohmann::json;

// Every config-file key the toolkit understands; anything else is a typo.
const std::vector<std::string> kRunConfigKeys = {
    "train.base_lr",      "train.batch_size",     "train.anneal_factor",
    "train.patience",     "train.max_epochs",     "train.pretrain_anon_epochs",
    "train.ce_branch_lr", "train.dev_fraction",   "train.lr_floor",
    "train.clip_norm",    "train.stop_metric",    "train.watch_task",
    "train.seed",         "model.emb_dim",        "model.hidden",
    "model.task_hidden",  "model.lowercase",      "model.dropout",
    "model.unk_prob",     "model.constrained_decode",
    "model.multitask_allow_partial",              "model.mask_from_marginals",
    "gumbel.tau",         "gumbel.hard",          "gumbel.anneal",
    "gumbel.tau_min",     "gumbel.anneal_rate",   "matrix.test_fraction",
};

TemplateSpec load_spec(const std::string& spec_path) {
  if (spec_path.empty()) return TemplateSpec::default_spec();
  return TemplateSpec::from_config(Config::parse_file(spec_path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return text;
}

// Corpus files carry one label column per scheme, or a single column when
// the task is declared on the command line. Column count decides which.
Corpus read_corpus(const std::string& path, const std::vector<LabelScheme>& schemes,
                   const std::string& task_hint, std::vector<LabelScheme>* used) {
  const std::string text = read_file(path);
  std::size_t columns = 1 + schemes.size();
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty() || line.rfind("-DOCSTART-", 0) == 0) continue;
    columns = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t'));
    break;
  }
  std::vector<LabelScheme> parse_schemes;
  if (columns == 1 + schemes.size()) {
    parse_schemes = schemes;
  } else if (columns == 2 && !task_hint.empty()) {
    for (const LabelScheme& scheme : schemes) {
      if (scheme.task_name() == task_hint) parse_schemes.push_back(scheme);
    }
    if (parse_schemes.empty()) throw UserError("unknown task '" + task_hint + "'");
  } else {
    throw UserError("'" + path + "' has " + std::to_string(columns) +
                    " columns; expected " + std::to_string(1 + schemes.size()) +
                    (task_hint.empty() ? std::string()
                                       : " (or 2 with the task declared via --task)"));
  }
  try {
    Corpus corpus = parse_conll(text, parse_schemes);
    if (used != nullptr) *used = parse_schemes;
    return corpus;
  } catch (const UserError& e) {
    throw UserError(path + ": " + e.what());
  }
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig t;
  t.base_lr = cfg.get_double("train", "base_lr", t.base_lr);
  t.batch_size = static_cast<std::size_t>(
      cfg.get_int("train", "batch_size", static_cast<std::int64_t>(t.batch_size)));
  t.anneal_factor = cfg.get_double("train", "anneal_factor", t.anneal_factor);
  t.patience = static_cast<std::size_t>(
      cfg.get_int("train", "patience", static_cast<std::int64_t>(t.patience)));
  t.max_epochs = static_cast<std::size_t>(
      cfg.get_int("train", "max_epochs", static_cast<std::int64_t>(t.max_epochs)));
  t.pretrain_anon_epochs = static_cast<std::size_t>(cfg.get_int(
      "train", "pretrain_anon_epochs", static_cast<std::int64_t>(t.pretrain_anon_epochs)));
  t.ce_branch_lr = cfg.get_double("train", "ce_branch_lr", t.ce_branch_lr);
  t.dev_fraction = cfg.get_double("train", "dev_fraction", t.dev_fraction);
  t.lr_floor = cfg.get_double("train", "lr_floor", t.lr_floor);
  t.clip_norm = cfg.get_double("train", "clip_norm", t.clip_norm);
  t.stop_metric = cfg.get_double("train", "stop_metric", t.stop_metric);
  t.watch_task = cfg.get("train", "watch_task", t.watch_task);
  t.seed = static_cast<std::uint64_t>(
      cfg.get_int("train", "seed", static_cast<std::int64_t>(t.seed)));
  return t;
}

ModelOptions model_options_from(const Config& cfg) {
  ModelOptions o;
  o.dims.emb_dim = static_cast<std::size_t>(
      cfg.get_int("model", "emb_dim", static_cast<std::int64_t>(o.dims.emb_dim)));
  o.dims.hidden = static_cast<std::size_t>(
      cfg.get_int("model", "hidden", static_cast<std::int64_t>(o.dims.hidden)));
  o.dims.task_hidden = static_cast<std::size_t>(
      cfg.get_int("model", "task_hidden", static_cast<std::int64_t>(o.dims.task_hidden)));
  o.lowercase = cfg.get_bool("model", "lowercase", o.lowercase);
  o.dropout = cfg.get_double("model", "dropout", o.dropout);
  o.unk_prob = cfg.get_double("model", "unk_prob", o.unk_prob);
  o.constrained_decode = cfg.get_bool("model", "constrained_decode", o.constrained_decode);
  o.multitask_allow_partial =
      cfg.get_bool("model", "multitask_allow_partial", o.multitask_allow_partial);
  o.mask_from_marginals =
      cfg.get_bool("model", "mask_from_marginals", o.mask_from_marginals);
  o.gumbel.tau = cfg.get_double("gumbel", "tau", o.gumbel.tau);
  o.gumbel.hard = cfg.get_bool("gumbel", "hard", o.gumbel.hard);
  o.gumbel.anneal = cfg.get_bool("gumbel", "anneal", o.gumbel.anneal);
  o.gumbel.tau_min = cfg.get_double("gumbel", "tau_min", o.gumbel.tau_min);
  o.gumbel.anneal_rate = cfg.get_double("gumbel", "anneal_rate", o.gumbel.anneal_rate);
  return o;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split_csv(csv)) {
    try {
      std::size_t used = 0;
      const std::uint64_t seed = std::stoull(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      seeds.push_back(seed);
    } catch (const std::exception&) {
      throw UserError("invalid seed '" + part + "' in --seeds");
    }
  }
  if (seeds.empty()) throw UserError("--seeds needs at least one value");
  return seeds;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_history_file(const std::string& dir, const json& header,
                        const TrainHistory* history) {
  std::string text = header.dump() + "\n";
  if (history != nullptr) text += history->to_jsonl();
  write_text_file((std::filesystem::path(dir) / "history.jsonl").string(), text);
}

struct LoadedModel {
  bool is_pipeline = false;
  ModelGraph graph;  // when !is_pipeline
  ModelGraph anon;   // pipeline parts
  ModelGraph ce;
};

LoadedModel load_any_model(const std::string& dir) {
  std::ifstream mf(std::filesystem::path(dir) / kManifestFile, std::ios::binary);
  if (!mf) throw IoError("cannot open manifest in '" + dir + "'");
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw IoError("manifest in '" + dir + "' is not valid JSON: " + e.what());
  }
  LoadedModel lm;
  const std::string kind = manifest.value("kind", "");
  if (kind == "pipeline") {
    lm.is_pipeline = true;
    const std::string anon_sub = manifest.value("anon_model", "anon");
    const std::string ce_sub = manifest.value("ce_model", "ce");
    lm.anon = load_model((std::filesystem::path(dir) / anon_sub).string());
    lm.ce = load_model((std::filesystem::path(dir) / ce_sub).string());
  } else {
    lm.graph = load_model(dir);
  }
  return lm;
}

struct CommonArgs {
  std::string spec_path;
  std::string config_path;
};

Config load_run_config(const std::string& path) {
  if (path.empty()) return Config();
  Config cfg = Config::parse_file(path);
  cfg.require_known(kRunConfigKeys);
  return cfg;
}

void print_dev_metrics(const std::map<std::string, double>& metrics) {
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& [task, f1] : metrics) {
    std::cout << "dev " << task << " f1 " << f1 << "\n";
  }
}

// ---- synth ----

struct SynthArgs {
  std::string spec_path;
  std::string out_path;
  std::size_t sentences = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void cmd_synth(const SynthArgs& args) {
  TemplateSpec spec = load_spec(args.spec_path);
  if (args.seed_set) spec.set_seed(args.seed);
  const Corpus corpus = generate(spec, args.sentences);
  write_conll_file(args.out_path, corpus, spec.schemes());
}

// ---- train ----

struct TrainArgs {
  CommonArgs common;
  std::string model = "single";
  std::string task;
  std::string train_path;
  std::string dev_path;
  std::string pretrained_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string seeds_csv;
};

void cmd_train(const TrainArgs& args) {
  const Config cfg = load_run_config(args.common.config_path);
  TrainConfig tconf = train_config_from(cfg);
  const ModelOptions mopts = model_options_from(cfg);
  if (args.seed_set) tconf.seed = args.seed;
  const std::vector<std::uint64_t> seeds =
      args.seeds_csv.empty() ? std::vector<std::uint64_t>{tconf.seed}
                             : parse_seeds(args.seeds_csv);

  tconf.validate();
  const TemplateSpec spec = load_spec(args.common.spec_path);
  const std::vector<LabelScheme> file_schemes = spec.schemes();
  const ModelKind kind = model_kind_from(args.model);
  const std::string task_hint = kind == ModelKind::SingleTask ? args.task : "";

  const Corpus full = read_corpus(args.train_path, file_schemes, task_hint, nullptr);
  Corpus train_c;
  Corpus dev_c;
  bool fabricated = false;
  if (args.dev_path.empty()) {
    std::tie(train_c, dev_c) = make_dev_split(full, tconf.dev_fraction, tconf.seed);
    fabricated = true;
  } else {
    train_c = full;
    dev_c = read_corpus(args.dev_path, file_schemes, task_hint, nullptr);
  }

  std::optional<PretrainedTable> pretrained;
  if (!args.pretrained_path.empty()) pretrained = PretrainedTable::load(args.pretrained_path);

  json header;
  header["kind"] = args.model;
  header["train_docs"] = train_c.size();
  header["dev_docs"] = dev_c.size();
  header["fabricated_dev"] = fabricated;
  header["seeds"] = seeds;

  if (kind == ModelKind::Pipeline) {
    PipelineResult best;
    bool have_best = false;
    for (const std::uint64_t seed : seeds) {
      TrainConfig run = tconf;
      run.seed = seed;
      PipelineResult r = train_pipeline(train_c, dev_c, spec.anon_scheme(),
                                        spec.ce_scheme(), mopts, run);
      if (!have_best || r.ce_history.best_metric > best.ce_history.best_metric) {
        best = std::move(r);
        have_best = true;
      }
    }
    const std::string anon_dir = (std::filesystem::path(args.out_dir) / "anon").string();
    const std::string ce_dir = (std::filesystem::path(args.out_dir) / "ce").string();
    save_model(anon_dir, best.anon);
    save_model(ce_dir, best.ce);
    write_history_file(anon_dir, json{{"phase", "anon"}}, &best.anon_history);
    write_history_file(ce_dir, json{{"phase", "ce"}}, &best.ce_history);

    json manifest;
    manifest["format"] = 1;
    manifest["kind"] = "pipeline";
    manifest["anon_model"] = "anon";
    manifest["ce_model"] = "ce";
    write_text_file((std::filesystem::path(args.out_dir) / kManifestFile).string(),
                    manifest.dump(2) + "\n");
    write_history_file(args.out_dir, header, nullptr);

    print_dev_metrics({{spec.anon_scheme().task_name(), best.anon_history.best_metric},
                       {spec.ce_scheme().task_name(), best.ce_history.best_metric}});
    return;
  }

  std::vector<LabelScheme> model_schemes;
  if (kind == ModelKind::SingleTask) {
    if (args.task.empty()) {
      throw UserError("--task is required for --model single");
    }
    bool found = false;
    for (const LabelScheme& scheme : file_schemes) {
      if (scheme.task_name() == args.task) {
        model_schemes.push_back(scheme);
        found = true;
      }
    }
    if (!found) throw UserError("task '" + args.task + "' is not in the corpus schemes");
  } else {
    model_schemes = file_schemes;
  }

  const Vocab vocab = Vocab::build(train_c, spec.anon_classes(), mopts.lowercase);
  GraphFactory factory = [&](std::uint64_t seed) {
    Rng rng(seed);
    return ModelGraph::build(kind, model_schemes, vocab, mopts, rng, pretrained);
  };
  auto [graph, history] = train_best_of(factory, train_c, dev_c, tconf, seeds);
  save_model(args.out_dir, graph);
  write_history_file(args.out_dir, header, &history);
  print_dev_metrics(evaluate_dev(graph, dev_c));
}

// ---- predict / anonymize ----

struct IoArgs {
  std::string model_dir;
  std::string in_path;
  std::string out_path;
  std::string spec_path;
};

void cmd_predict(const IoArgs& args) {
  const LoadedModel lm = load_any_model(args.model_dir);
  const TemplateSpec spec = load_spec(args.spec_path);
  const std::string hint =
      !lm.is_pipeline && lm.graph.schemes().size() == 1 ? lm.graph.schemes()[0].task_name()
                                                        : "";
  std::vector<LabelScheme> used;
  const Corpus input = read_corpus(args.in_path, spec.schemes(), hint, &used);

  Corpus output;
  if (lm.is_pipeline) {
    output = pipeline_predict(lm.anon, lm.ce, input);
  } else {
    output = input;
    for (Document& doc : output) {
      for (Sentence& sentence : doc.sentences) {
        auto tags = lm.graph.predict_sentence(sentence);
        std::map<std::string, std::vector<std::string>> labels = sentence.labels();
        for (auto& [task, seq] : tags) labels[task] = std::move(seq);
        sentence = Sentence(sentence.tokens(), std::move(labels));
      }
    }
  }
  write_conll_file(args.out_path, output, used);
}

void cmd_anonymize(const IoArgs& args) {
  const LoadedModel lm = load_any_model(args.model_dir);
  const ModelGraph& tagger = lm.is_pipeline ? lm.anon : lm.graph;
  const TemplateSpec spec = load_spec(args.spec_path);
  const std::string hint =
      tagger.schemes().size() == 1 ? tagger.schemes()[0].task_name() : "";
  std::vector<LabelScheme> used;
  const Corpus input = read_corpus(args.in_path, spec.schemes(), hint, &used);
  const Corpus output = anonymize_with_model(tagger, input);
  write_conll_file(args.out_path, output, used);
}

// ---- eval / signif ----

struct EvalArgs {
  std::string gold_path;
  std::string pred_path;
  std::string task = "ce";
  std::string spec_path;
};

void cmd_eval(const EvalArgs& args) {
  const TemplateSpec spec = load_spec(args.spec_path);
  const std::vector<LabelScheme> schemes = spec.schemes();
  const Corpus gold = read_corpus(args.gold_path, schemes, args.task, nullptr);
  const Corpus pred = read_corpus(args.pred_path, schemes, args.task, nullptr);
  std::cout << format_eval_report(exact_f1_corpus(gold, pred, args.task));
}

struct SignifArgs {
  std::string gold_path;
  std::string pred_a_path;
  std::string pred_b_path;
  std::string task = "ce";
  std::string spec_path;
  std::string granularity = "document";
  std::size_t n = kDefaultPermutations;
  std::uint64_t seed = 1;
};

void cmd_signif(const SignifArgs& args) {
  const TemplateSpec spec = load_spec(args.spec_path);
  const std::vector<LabelScheme> schemes = spec.schemes();
  const Corpus gold = read_corpus(args.gold_path, schemes, args.task, nullptr);
  const Corpus pred_a = read_corpus(args.pred_a_path, schemes, args.task, nullptr);
  const Corpus pred_b = read_corpus(args.pred_b_path, schemes, args.task, nullptr);
  std::vector<EvalCounts> counts_a;
  std::vector<EvalCounts> counts_b;
  if (args.granularity == "document") {
    counts_a = per_document_counts(gold, pred_a, args.task);
    counts_b = per_document_counts(gold, pred_b, args.task);
  } else if (args.granularity == "sentence") {
    counts_a = per_sentence_counts(gold, pred_a, args.task);
    counts_b = per_sentence_counts(gold, pred_b, args.task);
  } else {
    throw UserError("--granularity must be 'document' or 'sentence'");
  }
  std::cout << format_significance(
      paired_permutation_test(counts_a, counts_b, args.n, args.seed));
}

// ---- matrix ----

struct MatrixArgs {
  CommonArgs common;
  std::string corpus_path;
  std::string test_path;
  std::string out_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
};

void cmd_matrix(const MatrixArgs& args) {
  const Config cfg = load_run_config(args.common.config_path);
  MatrixConfig mc;
  mc.train = train_config_from(cfg);
  mc.model = model_options_from(cfg);
  if (args.seed_set) mc.train.seed = args.seed;
  mc.train.validate();

  const TemplateSpec spec = load_spec(args.common.spec_path);
  const std::vector<LabelScheme> schemes = spec.schemes();
  mc.anon_task = spec.anon_scheme().task_name();
  mc.ce_task = spec.ce_scheme().task_name();

  const Corpus full = read_conll_file(args.corpus_path, schemes);
  Corpus train_c;
  Corpus test_c;
  if (args.test_path.empty()) {
    const double fraction = cfg.get_double("matrix", "test_fraction", 0.1);
    std::tie(train_c, test_c) = make_dev_split(full, fraction, mc.train.seed);
  } else {
    train_c = full;
    test_c = read_conll_file(args.test_path, schemes);
  }

  const MatrixResult result = run_matrix(train_c, test_c, schemes, mc);
  const std::string report = result.to_report();
  if (!args.out_path.empty()) write_text_file(args.out_path, report);
  std::cout << report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-labeling toolkit for joint clinical de-identification "
               "and concept extraction"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--spec", synth.spec_path,
                        "Generator spec config (default: built-in spec)");
  synth_cmd->add_option("--sentences", synth.sentences, "Number of sentences")->required();
  CLI::Option* synth_seed =
      synth_cmd->add_option("--seed", synth.seed, "Override the spec's seed");
  synth_cmd->add_option("--out", synth.out_path, "Output corpus TSV")->required();
  synth_cmd->callback([&] {
    synth.seed_set = synth_seed->count() > 0;
    cmd_synth(synth);
  });

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--model", train.model, "single | pipeline | multitask | stacked")
      ->required();
  train_cmd->add_option("--task", train.task, "Task for --model single");
  train_cmd->add_option("--train", train.train_path, "Training corpus TSV")->required();
  train_cmd->add_option("--dev", train.dev_path,
                        "Development corpus TSV (default: hold out 10% of --train)");
  train_cmd->add_option("--config", train.common.config_path, "Run config file");
  train_cmd->add_option("--spec", train.common.spec_path,
                        "Generator spec defining the corpus schemes");
  train_cmd->add_option("--pretrained", train.pretrained_path,
                        "Frozen pretrained embeddings (text format)");
  CLI::Option* train_seed = train_cmd->add_option("--seed", train.seed, "Training seed");
  train_cmd->add_option("--seeds", train.seeds_csv,
                        "Comma-separated seeds; trains all, keeps the best dev run");
  train_cmd->add_option("--out-dir", train.out_dir, "Model output directory")->required();
  train_cmd->callback([&] {
    train.seed_set = train_seed->count() > 0;
    cmd_train(train);
  });

  IoArgs predict;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Decode labels for a corpus");
  predict_cmd->add_option("--model-dir", predict.model_dir, "Trained model directory")
      ->required();
  predict_cmd->add_option("--in", predict.in_path, "Input corpus TSV")->required();
  predict_cmd->add_option("--out", predict.out_path, "Output corpus TSV")->required();
  predict_cmd->add_option("--spec", predict.spec_path,
                          "Generator spec defining the corpus schemes");
  predict_cmd->callback([&] { cmd_predict(predict); });

  IoArgs anonymize;
  CLI::App* anon_cmd =
      app.add_subcommand("anonymize", "Replace predicted PHI spans with placeholders");
  anon_cmd->add_option("--model-dir", anonymize.model_dir,
                       "De-identification model (or pipeline) directory")
      ->required();
  anon_cmd->add_option("--in", anonymize.in_path, "Input corpus TSV")->required();
  anon_cmd->add_option("--out", anonymize.out_path, "Output corpus TSV")->required();
  anon_cmd->add_option("--spec", anonymize.spec_path,
                       "Generator spec defining the corpus schemes");
  anon_cmd->callback([&] { cmd_anonymize(anonymize); });

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Exact-match span F1 report");
  eval_cmd->add_option("--gold", eval_args.gold_path, "Gold corpus TSV")->required();
  eval_cmd->add_option("--pred", eval_args.pred_path, "Prediction corpus TSV")->required();
  eval_cmd->add_option("--task", eval_args.task, "Task column to score (default ce)");
  eval_cmd->add_option("--spec", eval_args.spec_path,
                       "Generator spec defining the corpus schemes");
  eval_cmd->callback([&] { cmd_eval(eval_args); });

  SignifArgs signif;
  CLI::App* signif_cmd =
      app.add_subcommand("signif", "Paired permutation significance test");
  signif_cmd->add_option("--gold", signif.gold_path, "Gold corpus TSV")->required();
  signif_cmd->add_option("--pred-a", signif.pred_a_path, "System A predictions")->required();
  signif_cmd->add_option("--pred-b", signif.pred_b_path, "System B predictions")->required();
  signif_cmd->add_option("--task", signif.task, "Task column to score (default ce)");
  signif_cmd->add_option("--n", signif.n, "Permutation count (default 1048576)");
  signif_cmd->add_option("--seed", signif.seed, "Permutation seed");
  signif_cmd->add_option("--granularity", signif.granularity,
                         "Swap unit: document (default) or sentence");
  signif_cmd->add_option("--spec", signif.spec_path,
                         "Generator spec defining the corpus schemes");
  signif_cmd->callback([&] { cmd_signif(signif); });

  MatrixArgs matrix;
  CLI::App* matrix_cmd = app.add_subcommand(
      "matrix", "Train-on/test-on anonymization grid (6 rows)");
  matrix_cmd->add_option("--corpus", matrix.corpus_path, "Corpus TSV with both gold tasks")
      ->required();
  matrix_cmd->add_option("--test", matrix.test_path,
                         "Held-out test corpus (default: split from --corpus)");
  matrix_cmd->add_option("--config", matrix.common.config_path, "Run config file");
  matrix_cmd->add_option("--spec", matrix.common.spec_path,
                         "Generator spec defining the corpus schemes");
  CLI::Option* matrix_seed = matrix_cmd->add_option("--seed", matrix.seed, "Run seed");
  matrix_cmd->add_option("--out", matrix.out_path, "Report output path");
  matrix_cmd->callback([&] {
    matrix.seed_set = matrix_seed->count() > 0;
    cmd_matrix(matrix);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Successful --help exits 0; every parse failure is a usage error.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
