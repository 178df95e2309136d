#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jace/corpus.hpp"

namespace jace {

struct EvalCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }

  void operator+=(const EvalCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
  }
};

struct EvalResult {
  EvalCounts micro;  // = sum of per-class counts
  std::map<std::string, EvalCounts> per_class;
};

// Exact-match span counts for one sentence: a prediction is a true positive
// iff an identical (start, end, class) gold span exists; each gold span
// absorbs at most one prediction, duplicates beyond that count as fp.
EvalCounts span_counts(const std::vector<Span>& gold, const std::vector<Span>& pred);

// Sentence-aligned evaluation; outer vectors must have equal length.
EvalResult exact_f1(const std::vector<std::vector<Span>>& gold,
                    const std::vector<std::vector<Span>>& pred);

// Gold sentences vs. predicted tag sequences for one task.
EvalResult exact_f1_tags(const std::vector<const Sentence*>& gold,
                         const std::vector<std::vector<std::string>>& pred_tags,
                         const std::string& task);

// Prediction corpus aligned document-by-document with the gold corpus
// (same ids, sentence counts, and token counts).
EvalResult exact_f1_corpus(const Corpus& gold, const Corpus& pred, const std::string& task);

// Per-unit counts for the permutation test.
std::vector<EvalCounts> per_document_counts(const Corpus& gold, const Corpus& pred,
                                            const std::string& task);
std::vector<EvalCounts> per_sentence_counts(const Corpus& gold, const Corpus& pred,
                                            const std::string& task);

struct SignificanceResult {
  double observed_diff = 0.0;
  double p_value = 1.0;
  std::size_t n_permutations = 0;
  double alpha = 0.05;
  bool significant = false;
};

inline constexpr std::size_t kDefaultPermutations = 1u << 20;

// Paired permutation test on micro-F1. Each iteration swaps the two systems'
// counts per unit (document by default) with probability 1/2 and recomputes
// both F1 scores globally from the summed counts; two-sided with add-one
// smoothing: p = (1 + #{|diff| >= |observed|}) / (1 + n).
SignificanceResult paired_permutation_test(const std::vector<EvalCounts>& system_a,
                                           const std::vector<EvalCounts>& system_b,
                                           std::size_t n_permutations,
                                           std::uint64_t seed, double alpha = 0.05);

// Micro row plus per-class table, fixed column order, 4 decimal places.
std::string format_eval_report(const EvalResult& result);
std::string format_significance(const SignificanceResult& result);

}  // namespace jace
