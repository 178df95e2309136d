#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jace/corpus.hpp"
#include "jace/rng.hpp"
#include "jace/tensor.hpp"

namespace jace {

// Temperature and sampling mode for the Gumbel-softmax gate. The raw
// de-identification scores are used as logits directly. tau is constant by
// default; with anneal on it decays exponentially per epoch toward tau_min.
struct GumbelConfig {
  double tau = 1.0;
  bool hard = true;  // straight-through one-hot forward
  bool anneal = false;
  double tau_min = 0.1;
  double anneal_rate = 0.9;

  double tau_for_epoch(std::size_t epoch) const;
  void validate() const;  // tau, tau_min, anneal_rate > 0
};

// One trainable embedding per ANON class (shared by B-x and I-x).
struct PhiEmbeddingTable {
  PhiEmbeddingTable() = default;
  PhiEmbeddingTable(const LabelScheme& scheme, std::size_t dim, Rng& rng);

  std::size_t dim() const { return table.value.cols(); }
  std::size_t num_classes() const { return table.value.rows(); }

  Parameter table;  // "phi.table", classes x dim
};

// y_k = exp((logits_k + noise_k) / tau) / sum_i exp(...), computed with a
// max shift. Noise is treated as a constant during backprop.
std::vector<double> gumbel_softmax(const std::vector<double>& logits,
                                   const std::vector<double>& noise, double tau);
std::vector<double> sample_gumbel_noise(std::size_t k, Rng& rng);
// d_logits accumulation for the soft sample: softmax Jacobian scaled by 1/tau.
void gumbel_softmax_backward(const std::vector<double>& y,
                             const std::vector<double>& d_y, double tau,
                             std::vector<double>* d_logits);

std::size_t argmax_index(const std::vector<double>& y);
// One-hot at argmax (ties to the lowest index). Straight-through: the
// backward pass treats this op as identity, so gradients for the soft y are
// exactly the gradients arriving at the hard output.
std::vector<double> hard_sample(const std::vector<double>& y);

// out = y_O * original + sum_{t != O} y_t * phi[class(t)] over the BIO
// tagset of `scheme`. Pointers address rows of width phi.cols().
void masked_embed(const double* original, const std::vector<double>& y,
                  const LabelScheme& scheme, const Tensor& phi_table, double* out);
// Accumulates into the non-null outputs.
void masked_embed_backward(const double* original, const std::vector<double>& y,
                           const LabelScheme& scheme, const Tensor& phi_table,
                           const double* d_out, double* d_original,
                           std::vector<double>* d_y, Tensor* d_phi_table);

inline std::string phi_placeholder(const std::string& class_name) {
  return "<PHI:" + class_name + ">";
}

// Replaces each maximal PHI span with a single "<PHI:class>" token. The
// output's `anon_task` column records the substitutions (B-class on each
// placeholder); every other task is realigned to the surviving tokens, with
// spans that lose tokens truncated and spans losing all tokens dropped.
Sentence substitute_placeholders(const Sentence& sentence,
                                 const std::vector<std::string>& anon_labels,
                                 const std::string& anon_task);

Document substitute_placeholders(
    const Document& doc,
    const std::vector<std::vector<std::string>>& anon_labels,
    const std::string& anon_task);

// Substitutes each sentence's own gold `anon_task` column.
Corpus substitute_placeholders_gold(const Corpus& docs, const std::string& anon_task);

}  // namespace jace
