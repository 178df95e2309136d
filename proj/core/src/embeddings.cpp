#include "jace/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jace/errors.hpp"

namespace jace {

Vocab::Vocab(const std::vector<std::string>& anon_classes, bool lowercase)
    : lowercase_(lowercase) {
  tokens_.push_back(kUnkToken);
  freq_.push_back(0);
  index_[kUnkToken] = kUnkIndex;
  for (const std::string& cls : anon_classes) {
    const std::string ph = placeholder_token(cls);
    index_[ph] = tokens_.size();
    tokens_.push_back(ph);
    freq_.push_back(0);
  }
}

std::string Vocab::placeholder_token(const std::string& class_name) {
  return "<PHI:" + class_name + ">";
}

std::string Vocab::normalize(const std::string& token) const {
  if (!lowercase_) return token;
  // Placeholders and UNK keep their canonical casing.
  if (!token.empty() && token.front() == '<' && token.back() == '>') return token;
  std::string out = token;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t Vocab::add(const std::string& token) {
  const std::string t = normalize(token);
  auto it = index_.find(t);
  if (it != index_.end()) {
    ++freq_[it->second];
    return it->second;
  }
  const std::size_t id = tokens_.size();
  index_[t] = id;
  tokens_.push_back(t);
  freq_.push_back(1);
  return id;
}

std::size_t Vocab::index_of(const std::string& token) const {
  auto it = index_.find(normalize(token));
  return it == index_.end() ? kUnkIndex : it->second;
}

Vocab Vocab::build(const Corpus& corpus, const std::vector<std::string>& anon_classes,
                   bool lowercase) {
  Vocab v(anon_classes, lowercase);
  for (const Document& doc : corpus) {
    for (const Sentence& sent : doc.sentences) {
      for (const std::string& tok : sent.tokens()) v.add(tok);
    }
  }
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocab file: " + path);
  out << (lowercase_ ? "lowercase" : "verbatim") << "\n";
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << "\t" << freq_[i] << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocab file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw UserError("vocab file is empty: " + path);
  Vocab v;
  if (line == "lowercase") {
    v.lowercase_ = true;
  } else if (line == "verbatim") {
    v.lowercase_ = false;
  } else {
    throw UserError("vocab file " + path + ": bad policy line '" + line + "'");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw UserError("vocab file " + path + ":" + std::to_string(lineno) + ": missing tab");
    }
    const std::string tok = line.substr(0, tab);
    const std::size_t freq = static_cast<std::size_t>(std::strtoull(line.c_str() + tab + 1,
                                                                    nullptr, 10));
    if (v.index_.count(tok)) {
      throw UserError("vocab file " + path + ":" + std::to_string(lineno) + ": duplicate token");
    }
    v.index_[tok] = v.tokens_.size();
    v.tokens_.push_back(tok);
    v.freq_.push_back(freq);
  }
  if (v.tokens_.empty() || v.tokens_[0] != kUnkToken) {
    throw UserError("vocab file " + path + ": first token must be " + std::string(kUnkToken));
  }
  return v;
}

PretrainedTable PretrainedTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open word-vector file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw UserError(path + ": missing header line");
  std::istringstream header(line);
  long long count = -1, dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim <= 0) {
    throw UserError(path + ":1: header must be '<count> <dim>'");
  }
  PretrainedTable table;
  table.dim = static_cast<std::size_t>(dim);
  table.vectors = Tensor(static_cast<std::size_t>(count), table.dim);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) {
      throw UserError(path + ":" + std::to_string(lineno) + ": missing word");
    }
    if (table.index.count(word)) {
      throw UserError(path + ":" + std::to_string(lineno) + ": duplicate word '" + word + "'");
    }
    const std::size_t row = table.words.size();
    if (row >= static_cast<std::size_t>(count)) {
      throw UserError(path + ":" + std::to_string(lineno) + ": more words than header count " +
                      std::to_string(count));
    }
    for (std::size_t j = 0; j < table.dim; ++j) {
      std::string field;
      if (!(ls >> field)) {
        throw UserError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(table.dim) + " values");
      }
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        throw UserError(path + ":" + std::to_string(lineno) + ": non-numeric field '" + field +
                        "'");
      }
      table.vectors(row, j) = v;
    }
    std::string extra;
    if (ls >> extra) {
      throw UserError(path + ":" + std::to_string(lineno) + ": trailing field '" + extra + "'");
    }
    table.index[word] = row;
    table.words.push_back(word);
  }
  if (table.words.size() != static_cast<std::size_t>(count)) {
    throw UserError(path + ": header declares " + std::to_string(count) + " words, found " +
                    std::to_string(table.words.size()));
  }
  return table;
}

void PretrainedTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write word-vector file: " + path);
  out << words.size() << " " << dim << "\n";
  out.precision(17);
  for (std::size_t r = 0; r < words.size(); ++r) {
    out << words[r];
    for (std::size_t j = 0; j < dim; ++j) out << " " << vectors(r, j);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

EmbeddingStack::EmbeddingStack(std::size_t vocab_size, std::size_t trainable_dim, Rng& rng,
                               std::optional<PretrainedTable> pretrained)
    : table("embed.table", vocab_size, trainable_dim) {
  if (trainable_dim == 0) throw UserError("trainable embedding dimension must be positive");
  table.init_uniform_fan_in(trainable_dim, rng);
  if (pretrained) {
    frozen = Parameter("embed.frozen", pretrained->words.size(), pretrained->dim,
                       /*trainable=*/false);
    frozen.value = pretrained->vectors;
    frozen_words = pretrained->words;
    frozen_index = pretrained->index;
  }
}

Tensor EmbeddingStack::forward(const Vocab& vocab, const std::vector<std::string>& tokens,
                               Cache* cache, bool training, double unk_prob, Rng* rng) const {
  const std::size_t T = tokens.size();
  const std::size_t dt = trainable_dim();
  const std::size_t df = frozen_dim();
  Tensor out(T, dt + df);
  Cache local;
  Cache* c = cache ? cache : &local;
  c->trainable_rows.assign(T, Vocab::kUnkIndex);

  for (std::size_t t = 0; t < T; ++t) {
    std::size_t row = vocab.index_of(tokens[t]);
    if (training && unk_prob > 0.0 && row != Vocab::kUnkIndex && vocab.frequency(row) == 1 &&
        rng != nullptr && rng->bernoulli(unk_prob)) {
      row = Vocab::kUnkIndex;
    }
    c->trainable_rows[t] = row;
    const double* src = table.value.row(row);
    double* dst = out.row(t);
    for (std::size_t j = 0; j < dt; ++j) dst[j] = src[j];
    if (df > 0) {
      auto it = frozen_index.find(tokens[t]);
      if (it != frozen_index.end()) {
        const double* fsrc = frozen.value.row(it->second);
        for (std::size_t j = 0; j < df; ++j) dst[dt + j] = fsrc[j];
      }
    }
  }
  return out;
}

void EmbeddingStack::backward(const Cache& cache, const Tensor& d_output) {
  const std::size_t dt = trainable_dim();
  if (d_output.cols() != total_dim()) {
    throw UserError("embedding backward: gradient dim mismatch");
  }
  for (std::size_t t = 0; t < cache.trainable_rows.size(); ++t) {
    double* g = table.grad.row(cache.trainable_rows[t]);
    const double* dy = d_output.row(t);
    for (std::size_t j = 0; j < dt; ++j) g[j] += dy[j];
  }
}

std::vector<Parameter*> EmbeddingStack::parameters() {
  std::vector<Parameter*> ps = {&table};
  if (has_frozen()) ps.push_back(&frozen);
  return ps;
}

}  // namespace jace
