#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "doctest.h"
#include "jace/config.hpp"
#include "jace/corpus.hpp"
#include "jace/errors.hpp"
#include "jace/models.hpp"
#include "jace/rng.hpp"
#include "jace/synthgen.hpp"
#include "jace/training.hpp"
#include "test_util.hpp"

using namespace jace;

namespace {

TemplateSpec small_spec() {
  const std::string text =
      "seed = 5\n"
      "[schemes]\n"
      "anon = PAT, AGE\n"
      "ce = DRUG\n"
      "[templates]\n"
      "template = {PAT} aged {AGE} took {DRUG} .\n"
      "template = {PAT} felt fine after {DRUG} .\n"
      "template = the patient took {DRUG} again .\n"
      "[lexicon PAT]\n"
      "entry = Peter\n"
      "entry = Maria\n"
      "entry = Chen\n"
      "[lexicon AGE]\n"
      "entry = 61\n"
      "entry = 74\n"
      "[lexicon DRUG]\n"
      "entry = aspirin\n"
      "entry = ibuprofen\n";
  return TemplateSpec::from_config(Config::parse_string(text, "small-spec"));
}

ModelOptions small_options() {
  ModelOptions opts;
  opts.dims.emb_dim = 4;
  opts.dims.hidden = 3;
  opts.dims.task_hidden = 3;
  opts.unk_prob = 0.0;
  return opts;
}

ModelGraph small_model(ModelKind kind, const TemplateSpec& spec, const Corpus& corpus,
                       std::uint64_t seed) {
  const std::vector<LabelScheme> schemes =
      kind == ModelKind::SingleTask ? std::vector<LabelScheme>{spec.anon_scheme()}
                                    : spec.schemes();
  const Vocab vocab = Vocab::build(corpus, spec.anon_classes(), false);
  Rng rng(seed);
  return ModelGraph::build(kind, schemes, vocab, small_options(), rng);
}

std::vector<Tensor> copy_values(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

bool values_equal(const std::vector<Tensor>& a, const std::vector<Parameter*>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].same_shape(b[i]->value)) return false;
    if (std::memcmp(a[i].data(), b[i]->value.data(), a[i].size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("train config validation rejects each bad field") {
  TrainConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto expect_reject = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), UserError);
  };
  expect_reject([](TrainConfig& c) { c.base_lr = 0.0; });
  expect_reject([](TrainConfig& c) { c.batch_size = 0; });
  expect_reject([](TrainConfig& c) { c.anneal_factor = 1.0; });
  expect_reject([](TrainConfig& c) { c.anneal_factor = 0.0; });
  expect_reject([](TrainConfig& c) { c.patience = 0; });
  expect_reject([](TrainConfig& c) { c.max_epochs = 0; });
  expect_reject([](TrainConfig& c) { c.ce_branch_lr = -0.1; });
  expect_reject([](TrainConfig& c) { c.dev_fraction = 1.0; });
  expect_reject([](TrainConfig& c) { c.lr_floor = 0.0; });
  expect_reject([](TrainConfig& c) { c.clip_norm = -1.0; });
  expect_reject([](TrainConfig& c) { c.stop_metric = 1.5; });
}

TEST_CASE("dev split is deterministic, disjoint, and exhaustive") {
  const TemplateSpec spec = small_spec();

  SUBCASE("ten documents yield a single dev document") {
    const Corpus docs = generate(spec, 100);
    REQUIRE(docs.size() == 10);
    const auto [train, dev] = make_dev_split(docs, 0.1, 3);
    CHECK(train.size() == 9);
    CHECK(dev.size() == 1);
    const auto [train2, dev2] = make_dev_split(docs, 0.1, 3);
    CHECK(train2 == train);
    CHECK(dev2 == dev);
  }

  SUBCASE("half-fractions round away from zero") {
    const Corpus docs = generate(spec, 150);
    REQUIRE(docs.size() == 15);
    const auto [train, dev] = make_dev_split(docs, 0.1, 3);
    CHECK(dev.size() == 2);
    CHECK(train.size() == 13);
  }

  SUBCASE("every document lands on exactly one side") {
    Rng rng(8);
    for (int iter = 0; iter < 50; ++iter) {
      const std::size_t n_docs = 10 + rng.uniform_int(30);
      const Corpus docs = generate(spec, n_docs * 10);
      const double frac = rng.uniform(0.05, 0.5);
      const auto [train, dev] = make_dev_split(docs, frac, rng.next_u64());
      CHECK(train.size() + dev.size() == docs.size());
      std::set<std::string> ids;
      for (const Document& d : train) ids.insert(d.id);
      for (const Document& d : dev) CHECK(ids.insert(d.id).second);
      CHECK(ids.size() == docs.size());
      CHECK(!dev.empty());
      CHECK(!train.empty());
    }
  }

  SUBCASE("small corpora are rejected") {
    const Corpus docs = generate(spec, 90);
    CHECK_THROWS_AS(make_dev_split(docs, 0.1, 1), UserError);
  }
}

TEST_CASE("a never-improving dev metric walks the lr down the halving ladder") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 1);

  TrainConfig config;
  config.max_epochs = 9;
  DevEvaluator frozen = [](ModelGraph&, const Corpus&) {
    return std::map<std::string, double>{{"anon", 0.0}};
  };
  const TrainHistory history = train_model(graph, train, dev, config, frozen);

  REQUIRE(history.epochs.size() == 9);
  const std::vector<double> expect = {0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.025, 0.025, 0.025};
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(history.epochs[i].lr.at("anon") == expect[i]);
  }
  CHECK(history.watched_task == "anon");
  // The flat metric counts as the best exactly once, at epoch one.
  CHECK(history.best_epoch == 1);
  CHECK(history.epochs[0].best);
  CHECK_FALSE(history.epochs[1].best);
}

TEST_CASE("an always-improving dev metric never triggers the plateau") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 2);

  TrainConfig config;
  config.max_epochs = 8;
  std::size_t call = 0;
  DevEvaluator rising = [&call](ModelGraph&, const Corpus&) {
    ++call;
    return std::map<std::string, double>{{"anon", 0.1 * static_cast<double>(call)}};
  };
  const TrainHistory history = train_model(graph, train, dev, config, rising);
  for (const EpochRecord& rec : history.epochs) {
    CHECK(rec.lr.at("anon") == 0.1);
    CHECK(rec.best);
  }
  CHECK(history.best_epoch == 8);
  CHECK(history.best_metric == doctest::Approx(0.8));
}

TEST_CASE("joint training freezes the ce branch through the pretraining epochs") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 30);
  const Corpus dev = generate(spec, 10);

  for (ModelKind kind : {ModelKind::Multitask, ModelKind::Stacked}) {
    ModelGraph graph = small_model(kind, spec, train, 3);
    const std::vector<Tensor> ce_before = copy_values(graph.group_for_task("ce"));
    const std::vector<Tensor> anon_before = copy_values(graph.group_for_task("anon"));

    std::size_t call = 0;
    bool ce_frozen_through_pretraining = true;
    bool ce_moved_after_activation = false;
    bool anon_moved_in_pretraining = false;
    DevEvaluator probe = [&](ModelGraph& g, const Corpus&) {
      ++call;
      if (call <= 3) {
        ce_frozen_through_pretraining &= values_equal(ce_before, g.group_for_task("ce"));
        anon_moved_in_pretraining |= !values_equal(anon_before, g.group_for_task("anon"));
      } else {
        ce_moved_after_activation |= !values_equal(ce_before, g.group_for_task("ce"));
      }
      return std::map<std::string, double>{
          {"anon", 0.05 * static_cast<double>(call)}, {"ce", 0.0}};
    };

    TrainConfig config;
    config.max_epochs = 5;
    const TrainHistory history = train_model(graph, train, dev, config, probe);

    INFO("kind ", model_kind_name(kind));
    CHECK(ce_frozen_through_pretraining);
    CHECK(anon_moved_in_pretraining);
    CHECK(ce_moved_after_activation);
    REQUIRE(history.epochs.size() == 5);
    CHECK(history.epochs[0].lr.at("ce") == 0.0);
    CHECK(history.epochs[1].lr.at("ce") == 0.0);
    CHECK(history.epochs[2].lr.at("ce") == 0.0);
    CHECK(history.epochs[3].lr.at("ce") == 0.2);
    CHECK(history.epochs[4].lr.at("ce") == 0.2);
    CHECK(history.epochs[3].lr.at("anon") == 0.1);
    CHECK(history.watched_task == "ce");
  }
}

TEST_CASE("training restores the best epoch's parameters") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 4);

  const std::vector<double> metrics = {0.3, 0.7, 0.5, 0.2};
  std::size_t call = 0;
  std::vector<Tensor> at_best;
  DevEvaluator scripted = [&](ModelGraph& g, const Corpus&) {
    ++call;
    if (call == 2) at_best = copy_values(g.parameters());
    return std::map<std::string, double>{{"anon", metrics[call - 1]}};
  };

  TrainConfig config;
  config.max_epochs = 4;
  const TrainHistory history = train_model(graph, train, dev, config, scripted);

  CHECK(history.best_epoch == 2);
  CHECK(history.best_metric == 0.7);
  CHECK(values_equal(at_best, graph.parameters()));
  CHECK(history.epochs[1].best);
  CHECK_FALSE(history.epochs[2].best);
}

TEST_CASE("stop_metric ends training right after the epoch that reaches it") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 5);

  const std::vector<double> metrics = {0.5, 0.96, 0.99};
  std::size_t call = 0;
  DevEvaluator scripted = [&](ModelGraph&, const Corpus&) {
    ++call;
    return std::map<std::string, double>{{"anon", metrics[call - 1]}};
  };

  TrainConfig config;
  config.max_epochs = 3;
  config.stop_metric = 0.95;
  const TrainHistory history = train_model(graph, train, dev, config, scripted);
  CHECK(history.epochs.size() == 2);
  CHECK(history.best_metric == 0.96);
}

TEST_CASE("training stops once the lr sinks below the floor") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 6);

  TrainConfig config;
  config.max_epochs = 50;
  config.patience = 1;
  config.lr_floor = 0.05;
  DevEvaluator frozen = [](ModelGraph&, const Corpus&) {
    return std::map<std::string, double>{{"anon", 0.0}};
  };
  const TrainHistory history = train_model(graph, train, dev, config, frozen);
  // Epoch 1 halves to 0.05 (not yet below), epoch 2 halves to 0.025 and stops.
  CHECK(history.epochs.size() == 2);
  CHECK(history.epochs[0].lr.at("anon") == 0.1);
  CHECK(history.epochs[1].lr.at("anon") == 0.05);
}

TEST_CASE("identical configurations train to identical histories and weights") {
  const TemplateSpec spec = small_spec();
  const Corpus corpus = generate(spec, 40);
  const Corpus train(corpus.begin(), corpus.begin() + 3);
  const Corpus dev(corpus.begin() + 3, corpus.end());

  TrainConfig config;
  config.max_epochs = 3;
  config.batch_size = 8;
  config.seed = 9;

  ModelGraph a = small_model(ModelKind::Multitask, spec, train, 7);
  ModelGraph b = small_model(ModelKind::Multitask, spec, train, 7);
  const TrainHistory ha = train_model(a, train, dev, config);
  const TrainHistory hb = train_model(b, train, dev, config);

  CHECK(ha.to_jsonl() == hb.to_jsonl());
  CHECK(values_equal(copy_values(a.parameters()), b.parameters()));

  ModelGraph c = small_model(ModelKind::Multitask, spec, train, 7);
  TrainConfig other = config;
  other.seed = 10;
  const TrainHistory hc = train_model(c, train, dev, other);
  CHECK(ha.to_jsonl() != hc.to_jsonl());
}

TEST_CASE("history serializes one parseable json object per epoch") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::Multitask, spec, train, 8);

  TrainConfig config;
  config.max_epochs = 4;
  const TrainHistory history = train_model(graph, train, dev, config);

  const std::string jsonl = history.to_jsonl();
  std::size_t lines = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    const std::size_t end = jsonl.find('\n', start);
    REQUIRE(end != std::string::npos);
    const nlohmann::json j = nlohmann::json::parse(jsonl.substr(start, end - start));
    ++lines;
    CHECK(j.contains("epoch"));
    CHECK(j.contains("train_loss"));
    CHECK(j.contains("dev"));
    CHECK(j.contains("lr"));
    CHECK(j.contains("best"));
    CHECK_FALSE(j.contains("wall_seconds"));
    CHECK(j["epoch"].get<std::size_t>() == lines);
    CHECK(j["dev"].contains("anon"));
    CHECK(j["dev"].contains("ce"));
    start = end + 1;
  }
  CHECK(lines == history.epochs.size());
}

TEST_CASE("a best epoch writes a loadable model directory") {
  testutil::TempDir dir("jace-train-save");
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 9);

  TrainConfig config;
  config.max_epochs = 3;
  const std::string out = dir.file("model");
  train_model(graph, train, dev, config, nullptr, out);

  ModelGraph loaded = load_model(out);
  CHECK(loaded.kind() == ModelKind::SingleTask);
  CHECK(values_equal(copy_values(graph.parameters()), loaded.parameters()));
}

TEST_CASE("degenerate inputs are rejected") {
  const TemplateSpec spec = small_spec();
  const Corpus train = generate(spec, 20);
  const Corpus dev = generate(spec, 10);
  ModelGraph graph = small_model(ModelKind::SingleTask, spec, train, 10);
  TrainConfig config;
  CHECK_THROWS_AS(train_model(graph, {}, dev, config), UserError);
  CHECK_THROWS_AS(train_model(graph, train, {}, config), UserError);

  TrainConfig bad_watch;
  bad_watch.watch_task = "nope";
  CHECK_THROWS_AS(train_model(graph, train, dev, bad_watch), UserError);
}
