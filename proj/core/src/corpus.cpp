#include "jace/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "jace/errors.hpp"

namespace jace {

namespace {

constexpr const char* kDocStart = "-DOCSTART-";

bool is_b_tag(const std::string& t) { return t.size() > 2 && t[0] == 'B' && t[1] == '-'; }
bool is_i_tag(const std::string& t) { return t.size() > 2 && t[0] == 'I' && t[1] == '-'; }
std::string tag_class_name(const std::string& t) { return t.substr(2); }

}  // namespace

LabelScheme::LabelScheme(std::string task_name, std::vector<std::string> classes)
    : task_name_(std::move(task_name)), classes_(std::move(classes)) {
  if (task_name_.empty()) throw UserError("label scheme needs a task name");
  std::set<std::string> seen;
  for (const std::string& c : classes_) {
    if (c.empty()) throw UserError("empty class name in scheme '" + task_name_ + "'");
    if (c.find('-') != std::string::npos || c.find(' ') != std::string::npos ||
        c.find('\t') != std::string::npos) {
      throw UserError("class name '" + c + "' may not contain whitespace or '-'");
    }
    if (!seen.insert(c).second) {
      throw UserError("duplicate class name '" + c + "' in scheme '" + task_name_ + "'");
    }
  }
  tags_.push_back(kNegativeLabel);
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    tags_.push_back("B-" + classes_[i]);
    tags_.push_back("I-" + classes_[i]);
    class_index_[classes_[i]] = i;
  }
  for (std::size_t i = 0; i < tags_.size(); ++i) tag_index_[tags_[i]] = i;
}

std::size_t LabelScheme::tag_index(const std::string& tag) const {
  auto it = tag_index_.find(tag);
  if (it == tag_index_.end()) {
    throw UserError("unknown tag '" + tag + "' for task '" + task_name_ + "'");
  }
  return it->second;
}

bool LabelScheme::has_tag(const std::string& tag) const { return tag_index_.count(tag) > 0; }

int LabelScheme::tag_class(std::size_t tag_index) const {
  if (tag_index == 0) return -1;
  return static_cast<int>((tag_index - 1) / 2);
}

std::size_t LabelScheme::class_index(const std::string& class_name) const {
  auto it = class_index_.find(class_name);
  if (it == class_index_.end()) {
    throw UserError("unknown class '" + class_name + "' for task '" + task_name_ + "'");
  }
  return it->second;
}

bool LabelScheme::has_class(const std::string& class_name) const {
  return class_index_.count(class_name) > 0;
}

int first_bio_violation(const std::vector<std::string>& labels, std::string* why) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& t = labels[i];
    if (t == LabelScheme::kNegativeLabel || is_b_tag(t)) continue;
    if (!is_i_tag(t)) {
      if (why) *why = "tag '" + t + "' is neither O nor B-x/I-x";
      return static_cast<int>(i);
    }
    const std::string cls = tag_class_name(t);
    if (i == 0) {
      if (why) *why = t + " without preceding B-" + cls;
      return 0;
    }
    const std::string& prev = labels[i - 1];
    const bool continues = (is_b_tag(prev) || is_i_tag(prev)) && tag_class_name(prev) == cls;
    if (!continues) {
      if (why) *why = t + " without preceding B-" + cls;
      return static_cast<int>(i);
    }
  }
  return -1;
}

bool is_bio_valid(const std::vector<std::string>& labels) {
  return first_bio_violation(labels, nullptr) < 0;
}

std::vector<Span> bio_to_spans(const std::vector<std::string>& labels) {
  std::string why;
  if (first_bio_violation(labels, &why) >= 0) {
    throw UserError("BIO violation: " + why);
  }
  std::vector<Span> spans;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_b_tag(labels[i])) continue;
    std::size_t end = i + 1;
    while (end < labels.size() && is_i_tag(labels[end])) ++end;
    spans.push_back({i, end, tag_class_name(labels[i])});
  }
  return spans;
}

std::vector<std::string> spans_to_bio(const std::vector<Span>& spans, std::size_t length) {
  std::vector<std::string> labels(length, LabelScheme::kNegativeLabel);
  std::vector<bool> used(length, false);
  for (const Span& s : spans) {
    if (s.start >= s.end || s.end > length) {
      throw UserError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                      ") out of bounds for length " + std::to_string(length));
    }
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (used[i]) throw UserError("overlapping spans at token " + std::to_string(i));
      used[i] = true;
      labels[i] = (i == s.start ? "B-" : "I-") + s.class_name;
    }
  }
  return labels;
}

Sentence::Sentence(std::vector<std::string> tokens,
                   std::map<std::string, std::vector<std::string>> labels)
    : tokens_(std::move(tokens)), labels_(std::move(labels)) {
  for (const auto& [task, seq] : labels_) {
    if (seq.size() != tokens_.size()) {
      throw UserError("label sequence for task '" + task + "' has length " +
                      std::to_string(seq.size()) + ", expected " +
                      std::to_string(tokens_.size()));
    }
    std::string why;
    if (first_bio_violation(seq, &why) >= 0) {
      throw UserError("BIO violation in task '" + task + "': " + why);
    }
  }
}

const std::vector<std::string>& Sentence::task_labels(const std::string& task) const {
  auto it = labels_.find(task);
  if (it == labels_.end()) throw UserError("sentence has no labels for task '" + task + "'");
  return it->second;
}

std::vector<Span> Sentence::task_spans(const std::string& task) const {
  return bio_to_spans(task_labels(task));
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct PendingSentence {
  std::vector<std::string> tokens;
  std::vector<std::vector<std::string>> columns;  // one per scheme
  int first_line = 0;
};

Sentence finish_sentence(PendingSentence& pending, const std::vector<LabelScheme>& schemes) {
  std::map<std::string, std::vector<std::string>> labels;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    std::string why;
    int bad = first_bio_violation(pending.columns[s], &why);
    if (bad >= 0) {
      throw UserError("BIO violation at line " + std::to_string(pending.first_line + bad) +
                      " (task " + schemes[s].task_name() + "): " + why);
    }
    labels[schemes[s].task_name()] = pending.columns[s];
  }
  return Sentence(std::move(pending.tokens), std::move(labels));
}

}  // namespace

Corpus parse_conll(const std::string& text, const std::vector<LabelScheme>& schemes) {
  if (schemes.empty()) throw UserError("parse_conll needs at least one label scheme");
  Corpus docs;
  std::set<std::string> doc_ids;
  PendingSentence pending;
  pending.columns.resize(schemes.size());
  bool in_doc = false;
  Document current;
  std::size_t implicit_counter = 0;

  auto flush_sentence = [&](int /*lineno*/) {
    if (pending.tokens.empty()) return;
    if (!in_doc) {
      current.id = "doc" + std::to_string(implicit_counter++);
      in_doc = true;
    }
    current.sentences.push_back(finish_sentence(pending, schemes));
    pending = PendingSentence{};
    pending.columns.resize(schemes.size());
  };
  auto flush_document = [&](int lineno) {
    flush_sentence(lineno);
    if (!in_doc) return;
    if (current.sentences.empty()) {
      throw UserError("empty document '" + current.id + "' before line " +
                      std::to_string(lineno));
    }
    if (!doc_ids.insert(current.id).second) {
      throw UserError("duplicate document id '" + current.id + "'");
    }
    docs.push_back(std::move(current));
    current = Document{};
    in_doc = false;
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush_sentence(lineno);
      continue;
    }
    if (line.rfind(kDocStart, 0) == 0) {
      flush_document(lineno);
      std::string id = line.substr(std::string(kDocStart).size());
      if (!id.empty() && id[0] == ' ') id = id.substr(1);
      if (id.empty()) {
        throw UserError("line " + std::to_string(lineno) + ": " + kDocStart +
                        " requires a document id");
      }
      current.id = id;
      in_doc = true;
      continue;
    }
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 1 + schemes.size()) {
      throw UserError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(1 + schemes.size()) + " tab-separated columns, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      throw UserError("line " + std::to_string(lineno) + ": empty token");
    }
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      const std::string& tag = fields[1 + s];
      if (!schemes[s].has_tag(tag)) {
        throw UserError("line " + std::to_string(lineno) + ": unknown tag '" + tag +
                        "' for task '" + schemes[s].task_name() + "'");
      }
    }
    if (pending.tokens.empty()) pending.first_line = lineno;
    pending.tokens.push_back(fields[0]);
    for (std::size_t s = 0; s < schemes.size(); ++s) pending.columns[s].push_back(fields[1 + s]);
  }
  flush_document(lineno + 1);
  return docs;
}

Corpus read_conll_file(const std::string& path, const std::vector<LabelScheme>& schemes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_conll(ss.str(), schemes);
}

std::string write_conll(const Corpus& docs, const std::vector<LabelScheme>& schemes) {
  std::string out;
  bool first_doc = true;
  for (const Document& doc : docs) {
    if (!first_doc) out += "\n";
    first_doc = false;
    out += std::string(kDocStart) + " " + doc.id + "\n";
    for (const Sentence& sent : doc.sentences) {
      out += "\n";
      for (std::size_t t = 0; t < sent.size(); ++t) {
        out += sent.tokens()[t];
        for (const LabelScheme& scheme : schemes) {
          out += "\t" + sent.task_labels(scheme.task_name())[t];
        }
        out += "\n";
      }
    }
  }
  return out;
}

void write_conll_file(const std::string& path, const Corpus& docs,
                      const std::vector<LabelScheme>& schemes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  out << write_conll(docs, schemes);
  if (!out) throw IoError("write failed: " + path);
}

namespace {

// Non-empty parts of a token split on maximal underscore runs. A token made
// entirely of underscores yields no parts and is kept verbatim by the caller.
std::vector<std::string> underscore_parts(const std::string& token) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : token) {
    if (c == '_') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

Sentence split_underscore_tokens(const Sentence& sentence) {
  std::vector<std::string> tokens;
  std::map<std::string, std::vector<std::string>> labels;
  for (const auto& [task, seq] : sentence.labels()) labels[task] = {};

  for (std::size_t t = 0; t < sentence.size(); ++t) {
    const std::string& token = sentence.tokens()[t];
    std::vector<std::string> parts;
    if (token.find('_') != std::string::npos) parts = underscore_parts(token);
    if (parts.size() <= 1) {
      tokens.push_back(token);
      for (const auto& [task, seq] : sentence.labels()) labels[task].push_back(seq[t]);
      continue;
    }
    for (std::size_t p = 0; p < parts.size(); ++p) {
      tokens.push_back(parts[p]);
      for (const auto& [task, seq] : sentence.labels()) {
        const std::string& src = seq[t];
        if (p == 0 || src == LabelScheme::kNegativeLabel || is_i_tag(src)) {
          labels[task].push_back(src);
        } else {
          labels[task].push_back("I-" + tag_class_name(src));
        }
      }
    }
  }
  return Sentence(std::move(tokens), std::move(labels));
}

Document split_underscore_tokens(const Document& doc) {
  Document out;
  out.id = doc.id;
  out.sentences.reserve(doc.sentences.size());
  for (const Sentence& s : doc.sentences) out.sentences.push_back(split_underscore_tokens(s));
  return out;
}

std::size_t count_sentences(const Corpus& docs) {
  std::size_t n = 0;
  for (const Document& d : docs) n += d.sentences.size();
  return n;
}

std::vector<const Sentence*> all_sentences(const Corpus& docs) {
  std::vector<const Sentence*> out;
  for (const Document& d : docs) {
    for (const Sentence& s : d.sentences) out.push_back(&s);
  }
  return out;
}

}  // namespace jace
