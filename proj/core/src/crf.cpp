#include "jace/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jace/errors.hpp"

namespace jace {

namespace {

constexpr double kNegInf = -1.0e30;

void check_shapes(const Tensor& emissions, const Tensor& transitions) {
  if (transitions.rows() != transitions.cols() || transitions.rows() < 3) {
    throw UserError("transition matrix must be square with at least one tag");
  }
  const std::size_t k = transitions.rows() - 2;
  if (emissions.rows() == 0) {
    throw UserError("CRF requires at least one emission row");
  }
  if (emissions.cols() != k) {
    throw UserError("emission width " + std::to_string(emissions.cols()) +
                    " does not match tag count " + std::to_string(k));
  }
}

void check_labels(const std::vector<std::size_t>& labels, std::size_t t,
                  std::size_t k) {
  if (labels.size() != t) {
    throw UserError("label sequence length does not match emission rows");
  }
  for (std::size_t index : labels) {
    if (index >= k) {
      throw UserError("label index " + std::to_string(index) +
                      " out of range for " + std::to_string(k) + " tags");
    }
  }
}

double logsumexp(const std::vector<double>& values) {
  double max_value = -std::numeric_limits<double>::infinity();
  for (double v : values) max_value = std::max(max_value, v);
  if (!std::isfinite(max_value)) return max_value;
  double total = 0.0;
  for (double v : values) total += std::exp(v - max_value);
  return max_value + std::log(total);
}

// alpha(t, j) = log sum of scores of all prefixes ending in tag j at step t,
// emissions included.
Tensor forward_lattice(const Tensor& emissions, const Tensor& transitions) {
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const std::size_t start = crf_start_state(k);
  Tensor alpha(t_len, k);
  for (std::size_t j = 0; j < k; ++j) {
    alpha(0, j) = transitions(start, j) + emissions(0, j);
  }
  std::vector<double> terms(k);
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) {
        terms[i] = alpha(t - 1, i) + transitions(i, j);
      }
      alpha(t, j) = logsumexp(terms) + emissions(t, j);
    }
  }
  return alpha;
}

// beta(t, i) = log sum of scores of all suffixes given tag i at step t,
// including the stop transition, excluding emission at t.
Tensor backward_lattice(const Tensor& emissions, const Tensor& transitions) {
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const std::size_t stop = crf_stop_state(k);
  Tensor beta(t_len, k);
  for (std::size_t i = 0; i < k; ++i) {
    beta(t_len - 1, i) = transitions(i, stop);
  }
  std::vector<double> terms(k);
  for (std::size_t t = t_len - 1; t-- > 0;) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        terms[j] = transitions(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = logsumexp(terms);
    }
  }
  return beta;
}

}  // namespace

double crf_sequence_score(const Tensor& emissions, const Tensor& transitions,
                          const std::vector<std::size_t>& labels) {
  check_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  check_labels(labels, t_len, k);
  double score = transitions(crf_start_state(k), labels[0]) + emissions(0, labels[0]);
  for (std::size_t t = 1; t < t_len; ++t) {
    score += transitions(labels[t - 1], labels[t]);
    score += emissions(t, labels[t]);
  }
  score += transitions(labels[t_len - 1], crf_stop_state(k));
  return score;
}

double crf_log_partition(const Tensor& emissions, const Tensor& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const Tensor alpha = forward_lattice(emissions, transitions);
  std::vector<double> finals(k);
  for (std::size_t j = 0; j < k; ++j) {
    finals[j] = alpha(t_len - 1, j) + transitions(j, crf_stop_state(k));
  }
  return logsumexp(finals);
}

double crf_nll(const Tensor& emissions, const Tensor& transitions,
               const std::vector<std::size_t>& labels, Tensor* d_emissions,
               Tensor* d_transitions, double scale) {
  check_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  check_labels(labels, t_len, k);
  const std::size_t start = crf_start_state(k);
  const std::size_t stop = crf_stop_state(k);

  const Tensor alpha = forward_lattice(emissions, transitions);
  std::vector<double> finals(k);
  for (std::size_t j = 0; j < k; ++j) {
    finals[j] = alpha(t_len - 1, j) + transitions(j, stop);
  }
  const double log_z = logsumexp(finals);
  const double gold = crf_sequence_score(emissions, transitions, labels);
  const double loss = log_z - gold;

  if (d_emissions == nullptr && d_transitions == nullptr) return loss;
  if (d_emissions != nullptr &&
      (d_emissions->rows() != t_len || d_emissions->cols() != k)) {
    throw UserError("d_emissions shape mismatch");
  }
  if (d_transitions != nullptr &&
      (d_transitions->rows() != k + 2 || d_transitions->cols() != k + 2)) {
    throw UserError("d_transitions shape mismatch");
  }

  const Tensor beta = backward_lattice(emissions, transitions);

  // Unary marginals minus gold indicators.
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const double marginal = std::exp(alpha(t, j) + beta(t, j) - log_z);
      const double indicator = labels[t] == j ? 1.0 : 0.0;
      const double g = scale * (marginal - indicator);
      if (d_emissions != nullptr) (*d_emissions)(t, j) += g;
      if (d_transitions != nullptr) {
        if (t == 0) (*d_transitions)(start, j) += g;
        if (t == t_len - 1) (*d_transitions)(j, stop) += g;
      }
    }
  }

  if (d_transitions != nullptr && t_len > 1) {
    for (std::size_t t = 0; t + 1 < t_len; ++t) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double pair_log = alpha(t, i) + transitions(i, j) +
                                  emissions(t + 1, j) + beta(t + 1, j) - log_z;
          double g = std::exp(pair_log);
          if (labels[t] == i && labels[t + 1] == j) g -= 1.0;
          (*d_transitions)(i, j) += scale * g;
        }
      }
    }
  }
  return loss;
}

ViterbiResult crf_viterbi(const Tensor& emissions, const Tensor& transitions,
                          const Tensor* additive_mask) {
  check_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const std::size_t start = crf_start_state(k);
  const std::size_t stop = crf_stop_state(k);
  if (additive_mask != nullptr &&
      (additive_mask->rows() != k + 2 || additive_mask->cols() != k + 2)) {
    throw UserError("decode mask shape mismatch");
  }
  auto trans = [&](std::size_t i, std::size_t j) {
    double v = transitions(i, j);
    if (additive_mask != nullptr) v += (*additive_mask)(i, j);
    return v;
  };

  Tensor score(t_len, k);
  std::vector<std::vector<std::size_t>> back(t_len, std::vector<std::size_t>(k, 0));
  for (std::size_t j = 0; j < k; ++j) {
    score(0, j) = trans(start, j) + emissions(0, j);
  }
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      double best = score(t - 1, 0) + trans(0, j);
      std::size_t best_i = 0;
      for (std::size_t i = 1; i < k; ++i) {
        const double candidate = score(t - 1, i) + trans(i, j);
        if (candidate > best) {
          best = candidate;
          best_i = i;
        }
      }
      score(t, j) = best + emissions(t, j);
      back[t][j] = best_i;
    }
  }

  double best = score(t_len - 1, 0) + trans(0, stop);
  std::size_t best_j = 0;
  for (std::size_t j = 1; j < k; ++j) {
    const double candidate = score(t_len - 1, j) + trans(j, stop);
    if (candidate > best) {
      best = candidate;
      best_j = j;
    }
  }

  ViterbiResult result;
  result.score = best;
  result.labels.assign(t_len, 0);
  result.labels[t_len - 1] = best_j;
  for (std::size_t t = t_len - 1; t > 0; --t) {
    result.labels[t - 1] = back[t][result.labels[t]];
  }
  return result;
}

Tensor crf_log_marginals(const Tensor& emissions, const Tensor& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  const Tensor alpha = forward_lattice(emissions, transitions);
  const Tensor beta = backward_lattice(emissions, transitions);
  std::vector<double> finals(k);
  for (std::size_t j = 0; j < k; ++j) {
    finals[j] = alpha(t_len - 1, j) + transitions(j, crf_stop_state(k));
  }
  const double log_z = logsumexp(finals);
  Tensor out(t_len, k);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      out(t, j) = alpha(t, j) + beta(t, j) - log_z;
    }
  }
  return out;
}

CrfOracleResult crf_brute_force(const Tensor& emissions, const Tensor& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t t_len = emissions.rows();
  const std::size_t k = emissions.cols();
  double combos = 1.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    combos *= static_cast<double>(k);
    if (combos > 1e6) {
      throw UserError("brute-force CRF oracle limited to 10^6 sequences");
    }
  }

  CrfOracleResult result;
  result.best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(combos));
  std::vector<std::size_t> labels(t_len, 0);
  // Odometer enumeration in ascending lexicographic order; ties keep the
  // first (smallest) sequence.
  while (true) {
    const double s = crf_sequence_score(emissions, transitions, labels);
    scores.push_back(s);
    if (s > result.best_score) {
      result.best_score = s;
      result.best_labels = labels;
    }
    std::size_t pos = t_len;
    while (pos > 0) {
      --pos;
      if (++labels[pos] < k) break;
      labels[pos] = 0;
      if (pos == 0) {
        result.log_partition = logsumexp(scores);
        return result;
      }
    }
  }
}

CrfLayer::CrfLayer(const std::string& name, const LabelScheme& scheme, Rng& rng)
    : num_tags_(scheme.num_tags()) {
  const std::size_t n = num_tags_ + 2;
  transitions.name = name + ".trans";
  transitions.value = Tensor(n, n);
  transitions.grad = Tensor(n, n);
  transitions.init_uniform_fan_in(n, rng);

  // Additive decode mask: I-x reachable only from B-x or I-x.
  bio_mask_ = Tensor(n, n);
  const std::size_t start = crf_start_state(num_tags_);
  for (std::size_t j = 0; j < num_tags_; ++j) {
    const bool j_inside = j >= 2 && j % 2 == 0;
    if (!j_inside) continue;
    const int j_class = scheme.tag_class(j);
    bio_mask_(start, j) = kNegInf;
    for (std::size_t i = 0; i < num_tags_; ++i) {
      if (i >= 1 && scheme.tag_class(i) == j_class) continue;
      bio_mask_(i, j) = kNegInf;
    }
  }
}

double CrfLayer::nll(const Tensor& emissions, const std::vector<std::size_t>& labels,
                     Tensor* d_emissions, double scale) {
  return crf_nll(emissions, transitions.value, labels, d_emissions,
                 &transitions.grad, scale);
}

ViterbiResult CrfLayer::decode(const Tensor& emissions, bool constrained) const {
  return crf_viterbi(emissions, transitions.value,
                     constrained ? &bio_mask_ : nullptr);
}

Tensor CrfLayer::log_marginals(const Tensor& emissions) const {
  return crf_log_marginals(emissions, transitions.value);
}

}  // namespace jace
