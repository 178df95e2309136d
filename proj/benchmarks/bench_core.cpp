#include <benchmark/benchmark.h>

#include "jace/crf.hpp"
#include "jace/lstm.hpp"
#include "jace/models.hpp"
#include "jace/rng.hpp"
#include "jace/synthgen.hpp"

namespace {

using namespace jace;

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_CrfNll(benchmark::State& state) {
  const std::size_t t_len = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 9;
  Rng rng(7);
  const Tensor emissions = random_tensor(t_len, k, rng);
  const Tensor transitions = random_tensor(k + 2, k + 2, rng);
  std::vector<std::size_t> labels(t_len);
  for (auto& l : labels) l = rng.uniform_int(k);
  Tensor d_em(t_len, k);
  Tensor d_tr(k + 2, k + 2);
  for (auto _ : state) {
    d_em.fill(0.0);
    d_tr.fill(0.0);
    benchmark::DoNotOptimize(crf_nll(emissions, transitions, labels, &d_em, &d_tr));
  }
}
BENCHMARK(BM_CrfNll)->Arg(10)->Arg(40);

void BM_CrfViterbi(benchmark::State& state) {
  const std::size_t t_len = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 49;
  Rng rng(7);
  const Tensor emissions = random_tensor(t_len, k, rng);
  const Tensor transitions = random_tensor(k + 2, k + 2, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(crf_viterbi(emissions, transitions));
  }
}
BENCHMARK(BM_CrfViterbi)->Arg(10)->Arg(40);

void BM_BiLstm(benchmark::State& state) {
  const std::size_t t_len = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  BiLstmEncoder enc("enc", 32, 32, rng);
  const Tensor input = random_tensor(t_len, 32, rng);
  const Tensor d_out = random_tensor(t_len, 64, rng);
  for (auto _ : state) {
    BiLstmEncoder::Cache cache;
    benchmark::DoNotOptimize(enc.forward(input, &cache));
    benchmark::DoNotOptimize(enc.backward(cache, d_out));
  }
}
BENCHMARK(BM_BiLstm)->Arg(10)->Arg(40);

void BM_StackedStep(benchmark::State& state) {
  const TemplateSpec spec = TemplateSpec::default_spec();
  const Corpus corpus = generate(spec, 32);
  Rng rng(7);
  const Vocab vocab = Vocab::build(corpus, spec.anon_classes(), true);
  ModelOptions options;
  ModelGraph graph = ModelGraph::build(ModelKind::Stacked, spec.schemes(), vocab,
                                       options, rng);
  const std::vector<const Sentence*> sentences = all_sentences(corpus);
  Rng noise(11);
  ForwardOptions fo;
  fo.rng = &noise;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(graph.forward_loss(*sentences[i % sentences.size()], fo));
    for (Parameter* p : graph.parameters()) p->zero_grad();
    ++i;
  }
}
BENCHMARK(BM_StackedStep);

}  // namespace

BENCHMARK_MAIN();
