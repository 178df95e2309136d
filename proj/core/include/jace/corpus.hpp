#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace jace {

// Tagset for one sequence-labeling task. `classes` excludes the negative
// class; the derived tag list is ["O", "B-c1", "I-c1", "B-c2", ...] and its
// order is fixed by the class order, with "O" at index 0.
class LabelScheme {
 public:
  LabelScheme() = default;
  LabelScheme(std::string task_name, std::vector<std::string> classes);

  const std::string& task_name() const { return task_name_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& tags() const { return tags_; }

  std::size_t num_tags() const { return tags_.size(); }
  std::size_t num_classes() const { return classes_.size(); }

  // Index into tags(); throws UserError for unknown tags.
  std::size_t tag_index(const std::string& tag) const;
  bool has_tag(const std::string& tag) const;
  const std::string& tag_name(std::size_t index) const { return tags_[index]; }

  // Class index for B-x/I-x tags, -1 for "O".
  int tag_class(std::size_t tag_index) const;
  std::size_t class_index(const std::string& class_name) const;
  bool has_class(const std::string& class_name) const;

  static constexpr const char* kNegativeLabel = "O";

 private:
  std::string task_name_;
  std::vector<std::string> classes_;
  std::vector<std::string> tags_;
  std::map<std::string, std::size_t> tag_index_;
  std::map<std::string, std::size_t> class_index_;
};

// Half-open token span [start, end) of one class; the unit of exact-match
// evaluation.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string class_name;

  bool operator==(const Span& o) const = default;
  bool operator<(const Span& o) const {
    if (start != o.start) return start < o.start;
    if (end != o.end) return end < o.end;
    return class_name < o.class_name;
  }
};

// True iff `labels` is a structurally valid BIO sequence (no leading I-x, no
// I-x after O or after a different class). Does not check tag membership.
bool is_bio_valid(const std::vector<std::string>& labels);
// Detailed variant: returns the 0-based offending position, or -1 if valid.
int first_bio_violation(const std::vector<std::string>& labels, std::string* why);

std::vector<Span> bio_to_spans(const std::vector<std::string>& labels);
std::vector<std::string> spans_to_bio(const std::vector<Span>& spans, std::size_t length);

// Tokenized sentence with one BIO label sequence per task. Construction
// validates lengths and BIO structure, so an existing Sentence is always
// well formed.
class Sentence {
 public:
  Sentence() = default;
  Sentence(std::vector<std::string> tokens,
           std::map<std::string, std::vector<std::string>> labels);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  const std::map<std::string, std::vector<std::string>>& labels() const { return labels_; }
  bool has_task(const std::string& task) const { return labels_.count(task) > 0; }
  const std::vector<std::string>& task_labels(const std::string& task) const;
  std::vector<Span> task_spans(const std::string& task) const;

  bool operator==(const Sentence& o) const = default;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::vector<std::string>> labels_;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;

  bool operator==(const Document& o) const = default;
};

using Corpus = std::vector<Document>;

// CoNLL-style TSV: `token<TAB>label...` with one label column per scheme,
// blank line between sentences, "-DOCSTART- <id>" between documents.
Corpus parse_conll(const std::string& text, const std::vector<LabelScheme>& schemes);
Corpus read_conll_file(const std::string& path, const std::vector<LabelScheme>& schemes);
std::string write_conll(const Corpus& docs, const std::vector<LabelScheme>& schemes);
void write_conll_file(const std::string& path, const Corpus& docs,
                      const std::vector<LabelScheme>& schemes);

// Splits tokens containing "_" between non-empty parts into their components;
// every part inherits the source token's label, with B-x kept on the first
// part and I-x on the rest. Tokens that are all underscores stay unchanged.
Sentence split_underscore_tokens(const Sentence& sentence);
Document split_underscore_tokens(const Document& doc);

std::size_t count_sentences(const Corpus& docs);
std::vector<const Sentence*> all_sentences(const Corpus& docs);

}  // namespace jace
