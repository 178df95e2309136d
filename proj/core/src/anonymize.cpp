#include "jace/anonymize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jace/errors.hpp"

namespace jace {

void GumbelConfig::validate() const {
  if (!(tau > 0.0)) throw UserError("gumbel tau must be > 0");
  if (!(tau_min > 0.0)) throw UserError("gumbel tau_min must be > 0");
  if (!(anneal_rate > 0.0) || anneal_rate > 1.0) {
    throw UserError("gumbel anneal_rate must be in (0, 1]");
  }
}

double GumbelConfig::tau_for_epoch(std::size_t epoch) const {
  validate();
  if (!anneal) return tau;
  double t = tau * std::pow(anneal_rate, static_cast<double>(epoch));
  return std::max(t, tau_min);
}

PhiEmbeddingTable::PhiEmbeddingTable(const LabelScheme& scheme, std::size_t dim,
                                     Rng& rng) {
  if (scheme.num_classes() == 0) throw UserError("PHI table needs at least one class");
  if (dim == 0) throw UserError("PHI table dimension must be positive");
  table.name = "phi.table";
  table.value = Tensor(scheme.num_classes(), dim);
  table.grad = Tensor(scheme.num_classes(), dim);
  table.init_uniform_fan_in(dim, rng);
}

std::vector<double> gumbel_softmax(const std::vector<double>& logits,
                                   const std::vector<double>& noise, double tau) {
  if (!(tau > 0.0)) throw UserError("gumbel tau must be > 0");
  if (logits.empty() || logits.size() != noise.size()) {
    throw UserError("gumbel logits and noise must be equal-length and non-empty");
  }
  const std::size_t k = logits.size();
  std::vector<double> z(k);
  double max_z = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    z[i] = (logits[i] + noise[i]) / tau;
    max_z = std::max(max_z, z[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    z[i] = std::exp(z[i] - max_z);
    total += z[i];
  }
  for (std::size_t i = 0; i < k; ++i) z[i] /= total;
  return z;
}

std::vector<double> sample_gumbel_noise(std::size_t k, Rng& rng) {
  std::vector<double> noise(k);
  for (std::size_t i = 0; i < k; ++i) noise[i] = rng.gumbel();
  return noise;
}

void gumbel_softmax_backward(const std::vector<double>& y,
                             const std::vector<double>& d_y, double tau,
                             std::vector<double>* d_logits) {
  if (!(tau > 0.0)) throw UserError("gumbel tau must be > 0");
  if (y.size() != d_y.size() || d_logits == nullptr || d_logits->size() != y.size()) {
    throw UserError("gumbel backward size mismatch");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += d_y[i] * y[i];
  for (std::size_t i = 0; i < y.size(); ++i) {
    (*d_logits)[i] += y[i] * (d_y[i] - dot) / tau;
  }
}

std::size_t argmax_index(const std::vector<double>& y) {
  if (y.empty()) throw UserError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i] > y[best]) best = i;
  }
  return best;
}

std::vector<double> hard_sample(const std::vector<double>& y) {
  std::vector<double> out(y.size(), 0.0);
  out[argmax_index(y)] = 1.0;
  return out;
}

void masked_embed(const double* original, const std::vector<double>& y,
                  const LabelScheme& scheme, const Tensor& phi_table, double* out) {
  if (y.size() != scheme.num_tags()) {
    throw UserError("masked_embed distribution width does not match tagset");
  }
  if (phi_table.rows() != scheme.num_classes()) {
    throw UserError("phi table row count does not match class count");
  }
  const std::size_t d = phi_table.cols();
  for (std::size_t j = 0; j < d; ++j) out[j] = y[0] * original[j];
  for (std::size_t t = 1; t < y.size(); ++t) {
    if (y[t] == 0.0) continue;
    const int cls = scheme.tag_class(t);
    const double* row = phi_table.row(static_cast<std::size_t>(cls));
    for (std::size_t j = 0; j < d; ++j) out[j] += y[t] * row[j];
  }
}

void masked_embed_backward(const double* original, const std::vector<double>& y,
                           const LabelScheme& scheme, const Tensor& phi_table,
                           const double* d_out, double* d_original,
                           std::vector<double>* d_y, Tensor* d_phi_table) {
  if (y.size() != scheme.num_tags()) {
    throw UserError("masked_embed distribution width does not match tagset");
  }
  if (phi_table.rows() != scheme.num_classes()) {
    throw UserError("phi table row count does not match class count");
  }
  const std::size_t d = phi_table.cols();
  if (d_original != nullptr) {
    for (std::size_t j = 0; j < d; ++j) d_original[j] += y[0] * d_out[j];
  }
  if (d_y != nullptr) {
    if (d_y->size() != y.size()) throw UserError("masked_embed d_y size mismatch");
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += original[j] * d_out[j];
    (*d_y)[0] += dot;
    for (std::size_t t = 1; t < y.size(); ++t) {
      const int cls = scheme.tag_class(t);
      const double* row = phi_table.row(static_cast<std::size_t>(cls));
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * d_out[j];
      (*d_y)[t] += acc;
    }
  }
  if (d_phi_table != nullptr) {
    if (d_phi_table->rows() != phi_table.rows() ||
        d_phi_table->cols() != phi_table.cols()) {
      throw UserError("masked_embed d_phi_table shape mismatch");
    }
    for (std::size_t t = 1; t < y.size(); ++t) {
      if (y[t] == 0.0) continue;
      const int cls = scheme.tag_class(t);
      double* row = d_phi_table->row(static_cast<std::size_t>(cls));
      for (std::size_t j = 0; j < d; ++j) row[j] += y[t] * d_out[j];
    }
  }
}

Sentence substitute_placeholders(const Sentence& sentence,
                                 const std::vector<std::string>& anon_labels,
                                 const std::string& anon_task) {
  if (anon_labels.size() != sentence.size()) {
    throw UserError("anonymization labels do not match sentence length");
  }
  const std::vector<Span> phi_spans = bio_to_spans(anon_labels);

  // span_of[t] = index of the covering PHI span, or -1.
  std::vector<int> span_of(sentence.size(), -1);
  for (std::size_t s = 0; s < phi_spans.size(); ++s) {
    for (std::size_t t = phi_spans[s].start; t < phi_spans[s].end; ++t) {
      span_of[t] = static_cast<int>(s);
    }
  }

  std::vector<std::string> new_tokens;
  std::vector<std::string> new_anon;
  // For every surviving original token, its old position; placeholders get -1.
  std::vector<int> old_pos;
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    const int s = span_of[t];
    if (s < 0) {
      new_tokens.push_back(sentence.tokens()[t]);
      new_anon.push_back(LabelScheme::kNegativeLabel);
      old_pos.push_back(static_cast<int>(t));
    } else if (t == phi_spans[static_cast<std::size_t>(s)].start) {
      new_tokens.push_back(phi_placeholder(phi_spans[static_cast<std::size_t>(s)].class_name));
      new_anon.push_back("B-" + phi_spans[static_cast<std::size_t>(s)].class_name);
      old_pos.push_back(-1);
    }
  }

  std::map<std::string, std::vector<std::string>> new_labels;
  new_labels[anon_task] = new_anon;
  for (const auto& [task, labels] : sentence.labels()) {
    if (task == anon_task) continue;
    // Span identity decides B vs I so truncated and split spans stay valid.
    const std::vector<Span> spans = bio_to_spans(labels);
    std::vector<int> task_span_of(sentence.size(), -1);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      for (std::size_t t = spans[s].start; t < spans[s].end; ++t) {
        task_span_of[t] = static_cast<int>(s);
      }
    }
    std::vector<std::string> realigned(new_tokens.size(), LabelScheme::kNegativeLabel);
    int prev_span = -1;
    for (std::size_t n = 0; n < new_tokens.size(); ++n) {
      const int old_t = old_pos[n];
      const int s = old_t < 0 ? -1 : task_span_of[static_cast<std::size_t>(old_t)];
      if (s >= 0) {
        const std::string& cls = spans[static_cast<std::size_t>(s)].class_name;
        realigned[n] = (s == prev_span ? "I-" : "B-") + cls;
      }
      prev_span = s;
    }
    new_labels[task] = std::move(realigned);
  }
  return Sentence(std::move(new_tokens), std::move(new_labels));
}

Document substitute_placeholders(
    const Document& doc,
    const std::vector<std::vector<std::string>>& anon_labels,
    const std::string& anon_task) {
  if (anon_labels.size() != doc.sentences.size()) {
    throw UserError("anonymization labels do not match document '" + doc.id + "'");
  }
  Document out;
  out.id = doc.id;
  out.sentences.reserve(doc.sentences.size());
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    out.sentences.push_back(
        substitute_placeholders(doc.sentences[i], anon_labels[i], anon_task));
  }
  return out;
}

Corpus substitute_placeholders_gold(const Corpus& docs, const std::string& anon_task) {
  Corpus out;
  out.reserve(docs.size());
  for (const Document& doc : docs) {
    std::vector<std::vector<std::string>> labels;
    labels.reserve(doc.sentences.size());
    for (const Sentence& sentence : doc.sentences) {
      labels.push_back(sentence.task_labels(anon_task));
    }
    out.push_back(substitute_placeholders(doc, labels, anon_task));
  }
  return out;
}

}  // namespace jace
