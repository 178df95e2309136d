#include "jace/evaluation.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "jace/errors.hpp"
#include "jace/rng.hpp"

namespace jace {

EvalCounts span_counts(const std::vector<Span>& gold, const std::vector<Span>& pred) {
  std::map<Span, std::size_t> gold_left;
  for (const Span& s : gold) ++gold_left[s];
  EvalCounts c;
  for (const Span& s : pred) {
    auto it = gold_left.find(s);
    if (it != gold_left.end() && it->second > 0) {
      --it->second;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = gold.size() - c.tp;
  return c;
}

EvalResult exact_f1(const std::vector<std::vector<Span>>& gold,
                    const std::vector<std::vector<Span>>& pred) {
  if (gold.size() != pred.size()) {
    throw UserError("evaluation inputs have different sentence counts (" +
                    std::to_string(gold.size()) + " vs " + std::to_string(pred.size()) + ")");
  }
  EvalResult result;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    // Count per class so the micro row is the exact sum of the class rows.
    std::map<std::string, std::vector<Span>> gold_by_class;
    std::map<std::string, std::vector<Span>> pred_by_class;
    for (const Span& s : gold[i]) gold_by_class[s.class_name].push_back(s);
    for (const Span& s : pred[i]) pred_by_class[s.class_name].push_back(s);
    for (const auto& [cls, spans] : gold_by_class) {
      const auto it = pred_by_class.find(cls);
      const EvalCounts c =
          span_counts(spans, it == pred_by_class.end() ? std::vector<Span>{} : it->second);
      result.per_class[cls] += c;
      result.micro += c;
    }
    for (const auto& [cls, spans] : pred_by_class) {
      if (gold_by_class.count(cls)) continue;
      EvalCounts c;
      c.fp = spans.size();
      result.per_class[cls] += c;
      result.micro += c;
    }
  }
  return result;
}

EvalResult exact_f1_tags(const std::vector<const Sentence*>& gold,
                         const std::vector<std::vector<std::string>>& pred_tags,
                         const std::string& task) {
  if (gold.size() != pred_tags.size()) {
    throw UserError("prediction count does not match sentence count");
  }
  std::vector<std::vector<Span>> gold_spans;
  std::vector<std::vector<Span>> pred_spans;
  gold_spans.reserve(gold.size());
  pred_spans.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred_tags[i].size() != gold[i]->size()) {
      throw UserError("prediction length mismatch at sentence " + std::to_string(i));
    }
    gold_spans.push_back(gold[i]->task_spans(task));
    pred_spans.push_back(bio_to_spans(pred_tags[i]));
  }
  return exact_f1(gold_spans, pred_spans);
}

namespace {

void check_aligned(const Corpus& gold, const Corpus& pred) {
  if (gold.size() != pred.size()) {
    throw UserError("gold and prediction corpora have different document counts");
  }
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (gold[d].id != pred[d].id) {
      throw UserError("document id mismatch at position " + std::to_string(d) + ": '" +
                      gold[d].id + "' vs '" + pred[d].id + "'");
    }
    if (gold[d].sentences.size() != pred[d].sentences.size()) {
      throw UserError("sentence count mismatch in document '" + gold[d].id + "'");
    }
    for (std::size_t s = 0; s < gold[d].sentences.size(); ++s) {
      if (gold[d].sentences[s].size() != pred[d].sentences[s].size()) {
        throw UserError("token count mismatch in document '" + gold[d].id +
                        "', sentence " + std::to_string(s));
      }
    }
  }
}

EvalCounts document_counts(const Document& gold, const Document& pred,
                           const std::string& task) {
  EvalCounts c;
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    c += span_counts(gold.sentences[s].task_spans(task),
                     pred.sentences[s].task_spans(task));
  }
  return c;
}

}  // namespace

EvalResult exact_f1_corpus(const Corpus& gold, const Corpus& pred, const std::string& task) {
  check_aligned(gold, pred);
  std::vector<std::vector<Span>> gold_spans;
  std::vector<std::vector<Span>> pred_spans;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    for (std::size_t s = 0; s < gold[d].sentences.size(); ++s) {
      gold_spans.push_back(gold[d].sentences[s].task_spans(task));
      pred_spans.push_back(pred[d].sentences[s].task_spans(task));
    }
  }
  return exact_f1(gold_spans, pred_spans);
}

std::vector<EvalCounts> per_document_counts(const Corpus& gold, const Corpus& pred,
                                            const std::string& task) {
  check_aligned(gold, pred);
  std::vector<EvalCounts> counts;
  counts.reserve(gold.size());
  for (std::size_t d = 0; d < gold.size(); ++d) {
    counts.push_back(document_counts(gold[d], pred[d], task));
  }
  return counts;
}

std::vector<EvalCounts> per_sentence_counts(const Corpus& gold, const Corpus& pred,
                                            const std::string& task) {
  check_aligned(gold, pred);
  std::vector<EvalCounts> counts;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    for (std::size_t s = 0; s < gold[d].sentences.size(); ++s) {
      counts.push_back(span_counts(gold[d].sentences[s].task_spans(task),
                                   pred[d].sentences[s].task_spans(task)));
    }
  }
  return counts;
}

SignificanceResult paired_permutation_test(const std::vector<EvalCounts>& system_a,
                                           const std::vector<EvalCounts>& system_b,
                                           std::size_t n_permutations,
                                           std::uint64_t seed, double alpha) {
  if (system_a.size() != system_b.size()) {
    throw UserError("paired test requires counts over the identical unit set");
  }
  if (system_a.empty()) throw UserError("paired test requires at least one unit");
  if (n_permutations == 0) throw UserError("permutation count must be positive");

  auto micro_diff = [](const EvalCounts& a, const EvalCounts& b) {
    return a.f1() > b.f1() ? a.f1() - b.f1() : b.f1() - a.f1();
  };

  EvalCounts total_a;
  EvalCounts total_b;
  for (std::size_t i = 0; i < system_a.size(); ++i) {
    total_a += system_a[i];
    total_b += system_b[i];
  }
  const double observed = micro_diff(total_a, total_b);

  Rng rng(seed);
  std::size_t at_least = 0;
  for (std::size_t it = 0; it < n_permutations; ++it) {
    EvalCounts perm_a;
    EvalCounts perm_b;
    for (std::size_t i = 0; i < system_a.size(); ++i) {
      if (rng.bernoulli(0.5)) {
        perm_a += system_b[i];
        perm_b += system_a[i];
      } else {
        perm_a += system_a[i];
        perm_b += system_b[i];
      }
    }
    if (micro_diff(perm_a, perm_b) >= observed) ++at_least;
  }

  SignificanceResult result;
  result.observed_diff = observed;
  result.n_permutations = n_permutations;
  result.alpha = alpha;
  result.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + n_permutations);
  result.significant = result.p_value < alpha;
  return result;
}

namespace {

std::string fixed4(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

void counts_row(std::ostringstream* out, const std::string& label, const EvalCounts& c) {
  *out << label << "\t" << c.tp << "\t" << c.fp << "\t" << c.fn << "\t"
       << fixed4(c.precision()) << "\t" << fixed4(c.recall()) << "\t" << fixed4(c.f1())
       << "\n";
}

}  // namespace

std::string format_eval_report(const EvalResult& result) {
  std::ostringstream out;
  out << "class\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  counts_row(&out, "micro", result.micro);
  for (const auto& [cls, counts] : result.per_class) {
    counts_row(&out, cls, counts);
  }
  return out.str();
}

std::string format_significance(const SignificanceResult& result) {
  std::ostringstream out;
  out << "observed_diff\t" << fixed4(result.observed_diff) << "\n"
      << "n_permutations\t" << result.n_permutations << "\n"
      << "p_value\t" << std::fixed << std::setprecision(6) << result.p_value << "\n"
      << "alpha\t" << fixed4(result.alpha) << "\n"
      << "significant\t" << (result.significant ? "yes" : "no") << "\n";
  return out.str();
}

}  // namespace jace
