#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jace/corpus.hpp"
#include "jace/rng.hpp"
#include "jace/tensor.hpp"

namespace jace {

// Linear-chain CRF primitives. Transitions are a (K+2) x (K+2) matrix
// trans[from][to] whose last two indices are the virtual START and STOP
// states; entries into START and out of STOP are never read.
//
// All score sums follow one fixed association order (start transition, then
// per step: transition then emission, then stop transition) so the Viterbi
// score and the brute-force maximum agree bit for bit.

inline std::size_t crf_start_state(std::size_t num_tags) { return num_tags; }
inline std::size_t crf_stop_state(std::size_t num_tags) { return num_tags + 1; }

double crf_sequence_score(const Tensor& emissions, const Tensor& transitions,
                          const std::vector<std::size_t>& labels);

// log sum over all K^T sequences of exp(sequence score); forward recursion
// in log space with max-shifted logsumexp.
double crf_log_partition(const Tensor& emissions, const Tensor& transitions);

// NLL = log_partition - sequence_score(gold). Gradients (scaled by `scale`)
// are marginal expectations minus gold indicator counts; d_emissions and
// d_transitions may be null, otherwise they are accumulated into.
double crf_nll(const Tensor& emissions, const Tensor& transitions,
               const std::vector<std::size_t>& labels, Tensor* d_emissions,
               Tensor* d_transitions, double scale = 1.0);

struct ViterbiResult {
  std::vector<std::size_t> labels;
  double score = 0.0;
};

// Highest-scoring sequence; ties resolve to the lowest tag index at each
// backtrack step. `additive_mask`, when given, is added to the transition
// scores (used for BIO-constrained decoding).
ViterbiResult crf_viterbi(const Tensor& emissions, const Tensor& transitions,
                          const Tensor* additive_mask = nullptr);

// Per-token log marginals log P(y_t = k), a T x K matrix. Forward-only;
// used by the experimental marginal-driven masking path, which treats these
// scores as constants (no gradient flows through them).
Tensor crf_log_marginals(const Tensor& emissions, const Tensor& transitions);

struct CrfOracleResult {
  double log_partition = 0.0;
  std::vector<std::size_t> best_labels;
  double best_score = 0.0;
};

// Exhaustive enumeration over all K^T sequences; rejects K^T > 10^6.
// Tie-break: the first maximizer in ascending lexicographic order.
CrfOracleResult crf_brute_force(const Tensor& emissions, const Tensor& transitions);

// CRF output layer bound to a tagset: owns the transition parameter and the
// BIO decode mask derived from the scheme.
class CrfLayer {
 public:
  CrfLayer() = default;
  CrfLayer(const std::string& name, const LabelScheme& scheme, Rng& rng);

  std::size_t num_tags() const { return num_tags_; }

  // Accumulates gradients into `transitions.grad` and `d_emissions`.
  double nll(const Tensor& emissions, const std::vector<std::size_t>& labels,
             Tensor* d_emissions, double scale = 1.0);

  // BIO-constrained by default: O -> I-x, B-y -> I-x (y != x) and
  // START -> I-x are forbidden at decode time.
  ViterbiResult decode(const Tensor& emissions, bool constrained = true) const;

  Tensor log_marginals(const Tensor& emissions) const;

  std::vector<Parameter*> parameters() { return {&transitions}; }

  Parameter transitions;

 private:
  std::size_t num_tags_ = 0;
  Tensor bio_mask_;  // additive, 0 or -inf surrogate
};

}  // namespace jace
