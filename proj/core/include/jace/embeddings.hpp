#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jace/corpus.hpp"
#include "jace/rng.hpp"
#include "jace/tensor.hpp"

namespace jace {

// Token-to-index map with UNK at index 0 and one placeholder token per PHI
// class (e.g. "<PHI:PAT>") registered up front so pipeline CE models can
// learn placeholder representations. The lowercasing policy is fixed at
// construction.
class Vocab {
 public:
  static constexpr std::size_t kUnkIndex = 0;
  static constexpr const char* kUnkToken = "<UNK>";

  Vocab() = default;
  Vocab(const std::vector<std::string>& anon_classes, bool lowercase);

  static Vocab build(const Corpus& corpus, const std::vector<std::string>& anon_classes,
                     bool lowercase);
  static std::string placeholder_token(const std::string& class_name);

  // Inserts the token if new; bumps its frequency either way.
  std::size_t add(const std::string& token);
  // OOV tokens map to kUnkIndex.
  std::size_t index_of(const std::string& token) const;
  const std::string& token_at(std::size_t index) const { return tokens_[index]; }
  std::size_t frequency(std::size_t index) const { return freq_[index]; }

  std::size_t size() const { return tokens_.size(); }
  bool lowercase() const { return lowercase_; }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::string normalize(const std::string& token) const;

  std::vector<std::string> tokens_;
  std::vector<std::size_t> freq_;
  std::map<std::string, std::size_t> index_;
  bool lowercase_ = false;
};

// Frozen word-vector table read from the text format
//   <count> <dim>\n
//   <word> <v1> ... <v_dim>\n
struct PretrainedTable {
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::map<std::string, std::size_t> index;
  Tensor vectors;  // |words| x dim

  static PretrainedTable load(const std::string& path);
  void save(const std::string& path) const;
};

// Produces the per-token input vector: a trainable lookup row, optionally
// concatenated with a frozen pretrained row (zeros for words the pretrained
// table does not cover). Only the trainable table receives gradient.
class EmbeddingStack {
 public:
  EmbeddingStack() = default;
  EmbeddingStack(std::size_t vocab_size, std::size_t trainable_dim, Rng& rng,
                 std::optional<PretrainedTable> pretrained = std::nullopt);

  struct Cache {
    std::vector<std::size_t> trainable_rows;  // after any UNK substitution
  };

  // Rows ordered [trainable | frozen]. In training mode, singleton tokens
  // (frequency 1) are replaced by UNK with probability unk_prob so the UNK
  // row gets trained; rng must be supplied when unk_prob > 0.
  Tensor forward(const Vocab& vocab, const std::vector<std::string>& tokens, Cache* cache,
                 bool training = false, double unk_prob = 0.0, Rng* rng = nullptr) const;
  void backward(const Cache& cache, const Tensor& d_output);

  std::size_t total_dim() const { return trainable_dim() + frozen_dim(); }
  std::size_t trainable_dim() const { return table.value.cols(); }
  std::size_t frozen_dim() const { return frozen_words.empty() ? 0 : frozen.value.cols(); }
  bool has_frozen() const { return !frozen_words.empty(); }

  std::vector<Parameter*> parameters();

  Parameter table;   // |vocab| x trainable_dim
  Parameter frozen;  // |pretrained words| x frozen_dim, trainable = false
  std::vector<std::string> frozen_words;
  std::map<std::string, std::size_t> frozen_index;
};

}  // namespace jace
