#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "jace/config.hpp"
#include "jace/corpus.hpp"

namespace jace {

// One template token: either a literal surface form or a typed slot to be
// filled from the slot type's lexicon.
struct TemplateToken {
  bool is_slot = false;
  std::string text;  // literal surface, or slot type name when is_slot
};

using SentenceTemplate = std::vector<TemplateToken>;

// Generator description: templates with typed slots plus one lexicon per
// slot type. Slot types are partitioned into the ANON task's PHI classes and
// the CE task's concept classes.
class TemplateSpec {
 public:
  TemplateSpec() = default;

  static TemplateSpec from_config(const Config& cfg);
  // The shipped desk-scale spec: 24 PHI classes and 3 concept classes.
  static TemplateSpec default_spec();

  void add_template(const std::string& pattern);  // slots written as {TYPE}
  void add_lexicon_entry(const std::string& slot_type, const std::string& surface);
  void set_anon_classes(const std::vector<std::string>& classes);
  void set_ce_classes(const std::vector<std::string>& classes);
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  // Checks every referenced slot type has a non-empty lexicon and that the
  // lexicons of distinct slot types are disjoint. Throws UserError.
  void validate() const;

  const std::vector<SentenceTemplate>& templates() const { return templates_; }
  const std::map<std::string, std::vector<std::string>>& lexicons() const { return lexicons_; }
  const std::vector<std::string>& anon_classes() const { return anon_classes_; }
  const std::vector<std::string>& ce_classes() const { return ce_classes_; }
  std::uint64_t seed() const { return seed_; }

  LabelScheme anon_scheme() const { return LabelScheme("anon", anon_classes_); }
  LabelScheme ce_scheme() const { return LabelScheme("ce", ce_classes_); }
  std::vector<LabelScheme> schemes() const { return {anon_scheme(), ce_scheme()}; }

  bool is_anon_class(const std::string& slot_type) const;

 private:
  std::vector<SentenceTemplate> templates_;
  std::map<std::string, std::vector<std::string>> lexicons_;
  std::vector<std::string> anon_classes_;
  std::vector<std::string> ce_classes_;
  std::uint64_t seed_ = 1;
};

// Deterministic pure function of (spec, n_sentences): fills slots from their
// lexicons, labels them with BIO tags on both tasks, groups ~10 sentences
// per document.
Corpus generate(const TemplateSpec& spec, std::size_t n_sentences);

// Token positions (document-wide sentence/token coordinates) whose surface
// form occurs in a PHI lexicon, with the owning slot type.
struct LeakedToken {
  std::size_t sentence = 0;
  std::size_t token = 0;
  std::string slot_type;

  bool operator==(const LeakedToken& o) const = default;
};

std::vector<LeakedToken> leakage_oracle(const Document& doc, const TemplateSpec& spec);
std::vector<LeakedToken> leakage_oracle(const Corpus& docs, const TemplateSpec& spec);

}  // namespace jace
