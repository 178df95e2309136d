#include "jace/synthgen.hpp"

#include <algorithm>
#include <sstream>

#include "jace/errors.hpp"
#include "jace/rng.hpp"

namespace jace {

namespace {

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

void TemplateSpec::add_template(const std::string& pattern) {
  SentenceTemplate tpl;
  for (const std::string& tok : split_spaces(pattern)) {
    if (tok.size() > 2 && tok.front() == '{' && tok.back() == '}') {
      tpl.push_back({true, tok.substr(1, tok.size() - 2)});
    } else {
      tpl.push_back({false, tok});
    }
  }
  if (tpl.empty()) throw UserError("empty template pattern");
  templates_.push_back(std::move(tpl));
}

void TemplateSpec::add_lexicon_entry(const std::string& slot_type, const std::string& surface) {
  if (split_spaces(surface).empty()) {
    throw UserError("empty lexicon entry for slot type " + slot_type);
  }
  lexicons_[slot_type].push_back(surface);
}

void TemplateSpec::set_anon_classes(const std::vector<std::string>& classes) {
  anon_classes_ = classes;
}

void TemplateSpec::set_ce_classes(const std::vector<std::string>& classes) {
  ce_classes_ = classes;
}

bool TemplateSpec::is_anon_class(const std::string& slot_type) const {
  return std::find(anon_classes_.begin(), anon_classes_.end(), slot_type) != anon_classes_.end();
}

void TemplateSpec::validate() const {
  // Scheme constructors check class-name rules and uniqueness.
  LabelScheme anon = anon_scheme();
  LabelScheme ce = ce_scheme();
  for (const std::string& c : ce_classes_) {
    if (anon.has_class(c)) {
      throw UserError("slot type '" + c + "' declared for both tasks");
    }
  }
  for (const auto& tpl : templates_) {
    for (const TemplateToken& tok : tpl) {
      if (!tok.is_slot) continue;
      if (!anon.has_class(tok.text) && !ce.has_class(tok.text)) {
        throw UserError("template references undeclared slot type '" + tok.text + "'");
      }
      auto it = lexicons_.find(tok.text);
      if (it == lexicons_.end() || it->second.empty()) {
        throw UserError("slot type '" + tok.text + "' has an empty lexicon");
      }
    }
  }
  // Disjointness across slot types, down to individual tokens, keeps the
  // leakage oracle's token -> type attribution unambiguous.
  std::map<std::string, std::string> owner;
  for (const auto& [type, entries] : lexicons_) {
    for (const std::string& entry : entries) {
      for (const std::string& tok : split_spaces(entry)) {
        auto [it, inserted] = owner.emplace(tok, type);
        if (!inserted && it->second != type) {
          throw UserError("lexicon token '" + tok + "' appears in both '" + it->second +
                          "' and '" + type + "'");
        }
      }
    }
  }
}

TemplateSpec TemplateSpec::from_config(const Config& cfg) {
  std::vector<std::string> allowed = {".seed", "schemes.anon", "schemes.ce", "templates.template"};
  TemplateSpec spec;
  spec.set_seed(static_cast<std::uint64_t>(cfg.get_int("", "seed", 1)));
  spec.set_anon_classes(split_csv(cfg.get("schemes", "anon", "")));
  spec.set_ce_classes(split_csv(cfg.get("schemes", "ce", "")));
  for (const std::string& t : cfg.get_all("templates", "template")) spec.add_template(t);
  for (const std::string& section : cfg.sections()) {
    if (section.rfind("lexicon ", 0) == 0) {
      allowed.push_back(section + ".entry");
      const std::string type = section.substr(8);
      for (const std::string& e : cfg.get_all(section, "entry")) {
        spec.add_lexicon_entry(type, e);
      }
    }
  }
  cfg.require_known(allowed);
  if (spec.templates_.empty()) throw UserError("template spec declares no templates");
  spec.validate();
  return spec;
}

TemplateSpec TemplateSpec::default_spec() {
  TemplateSpec s;
  s.set_seed(1);
  s.set_anon_classes({"PAT",    "DOCTOR",  "AGE",      "DATE",   "PHONE",  "FAX",
                      "EMAIL",  "SSN",     "MRN",      "HOSP",   "CLINIC", "CITY",
                      "STATE",  "STREET",  "ZIP",      "COUNTRY", "ORG",   "USERNAME",
                      "DEVICE", "IDNUM",   "LICENSE",  "URL",    "BIOID",  "PROFESSION"});
  s.set_ce_classes({"DRUG", "DISEASE", "PROC"});

  auto lex = [&s](const std::string& type, std::initializer_list<const char*> entries) {
    for (const char* e : entries) s.add_lexicon_entry(type, e);
  };
  lex("PAT", {"Lena Vasquez", "Omar Feld", "Tessa Moor", "Ivo Brandt", "Ruth Albescu"});
  lex("DOCTOR", {"Dr. Calder", "Dr. Nunes", "Dr. Okafor", "Dr. Lindqvist", "Dr. Marchetti"});
  lex("AGE", {"71", "64", "58", "83", "47"});
  lex("DATE", {"2019-03-14", "2020-11-02", "2018-07-29", "2021-01-16", "2017-05-08"});
  lex("PHONE", {"555-0143", "555-0188", "555-0121", "555-0166", "555-0109"});
  lex("FAX", {"555-9901", "555-9923", "555-9947", "555-9965", "555-9982"});
  lex("EMAIL", {"k.ortiz@webmail.example", "j.pelt@webmail.example", "m.faro@webmail.example",
                "r.senn@webmail.example", "t.iqbal@webmail.example"});
  lex("SSN", {"900-21-4431", "900-33-8702", "900-45-1276", "900-57-6648", "900-69-9013"});
  lex("MRN", {"MRN-104482", "MRN-115937", "MRN-128261", "MRN-139704", "MRN-142158"});
  lex("HOSP", {"Mercy General", "Saint Aurelia", "Northbrook Medical", "Valley Ridge",
               "Harbor Point"});
  lex("CLINIC", {"Westside Clinic", "Lakeshore Clinic", "Oakdale Clinic", "Riverbend Clinic",
                 "Hillcrest Clinic"});
  lex("CITY", {"Brandenfeld", "Novaterra", "Eastmere", "Sunvale", "Kirkwall"});
  lex("STATE", {"Nordland", "Westmark", "Caltara", "Veridia", "Ostania"});
  lex("STREET", {"14 Alder Lane", "9 Birchway", "220 Cobalt Row", "77 Dunmore Ave",
                 "31 Fenwick Road"});
  lex("ZIP", {"90731", "44102", "60614", "73301", "98109"});
  lex("COUNTRY", {"Freedonia", "Sylvania", "Borduria", "Syldavia", "Latveria"});
  lex("ORG", {"Acme Insurance", "Globex Health", "Initech Labs", "Umbra Partners",
              "Vantage Care"});
  lex("USERNAME", {"jdoe42", "mlopez7", "kchen09", "rpatel3", "asmith88"});
  lex("DEVICE", {"PM-2200", "ICD-770", "VAD-310", "CGM-505", "NEB-120"});
  lex("IDNUM", {"ID-58201", "ID-69347", "ID-71558", "ID-82669", "ID-93775"});
  lex("LICENSE", {"LIC-33821", "LIC-44936", "LIC-55047", "LIC-66158", "LIC-77269"});
  lex("URL", {"portal.medrec.example", "chart.clinix.example", "my.healthhub.example",
              "app.curanet.example", "web.mediview.example"});
  lex("BIOID", {"BIO-220541", "BIO-331652", "BIO-442763", "BIO-553874", "BIO-664985"});
  lex("PROFESSION", {"carpenter", "librarian", "electrician", "bartender", "surveyor"});
  lex("DRUG", {"metformin", "lisinopril", "atorvastatin", "warfarin", "omeprazole",
               "insulin glargine"});
  lex("DISEASE", {"diabetes mellitus", "hypertension", "atrial fibrillation", "pneumonia",
                  "asthma"});
  lex("PROC", {"appendectomy", "colonoscopy", "echocardiogram", "dialysis",
               "knee replacement"});

  const char* templates[] = {
      "Patient {PAT} , {AGE} years old , was admitted to {HOSP} on {DATE} .",
      "{PAT} reported taking {DRUG} for {DISEASE} .",
      "{DOCTOR} scheduled a {PROC} at {CLINIC} .",
      "Contact the ward at {PHONE} or by fax at {FAX} .",
      "Results were mailed to {EMAIL} on {DATE} .",
      "Record {MRN} lists {DISEASE} treated with {DRUG} .",
      "{PAT} lives at {STREET} in {CITY} , {STATE} {ZIP} .",
      "The insurer {ORG} confirmed id {IDNUM} for {PAT} .",
      "{DOCTOR} from {HOSP} performed the {PROC} .",
      "Login {USERNAME} accessed the chart via {URL} .",
      "A {DEVICE} unit was implanted during the {PROC} .",
      "License {LICENSE} belongs to {DOCTOR} of {CLINIC} .",
      "Sample {BIOID} tested positive for {DISEASE} .",
      "{PAT} works as a {PROFESSION} in {CITY} .",
      "SSN {SSN} matches record {MRN} .",
      "Follow up at {CLINIC} on {DATE} regarding {DISEASE} .",
      "{DOCTOR} increased the {DRUG} dose for {PAT} .",
      "Transfer from {HOSP} to {CLINIC} happened on {DATE} .",
      "The {PROFESSION} , aged {AGE} , denies {DISEASE} .",
      "Call {PHONE} to confirm the {PROC} appointment .",
      "Visit portal {URL} with user {USERNAME} and id {IDNUM} .",
      "Fax referrals to {FAX} at {ORG} .",
      "{PAT} moved from {COUNTRY} to {STATE} on {DATE} .",
      "Registry of {COUNTRY} issued license {LICENSE} .",
      "Message {EMAIL} or call {PHONE} about sample {BIOID} .",
      "An {AGE} year old {PROFESSION} presented with {DISEASE} at {HOSP} .",
      "Device {DEVICE} serial {IDNUM} was checked at {CLINIC} .",
      "Mail forms to {STREET} , {CITY} {ZIP} , {COUNTRY} .",
      "{DOCTOR} prescribed {DRUG} after the {PROC} .",
      "SSN {SSN} and zip {ZIP} verified for {USERNAME} .",
  };
  for (const char* t : templates) s.add_template(t);
  s.validate();
  return s;
}

namespace {

constexpr std::size_t kSentencesPerDocument = 10;

Sentence generate_sentence(const TemplateSpec& spec, Rng& rng) {
  const auto& templates = spec.templates();
  const SentenceTemplate& tpl =
      templates[static_cast<std::size_t>(rng.uniform_int(templates.size()))];
  std::vector<std::string> tokens;
  std::vector<std::string> anon;
  std::vector<std::string> ce;
  for (const TemplateToken& tt : tpl) {
    if (!tt.is_slot) {
      tokens.push_back(tt.text);
      anon.push_back(LabelScheme::kNegativeLabel);
      ce.push_back(LabelScheme::kNegativeLabel);
      continue;
    }
    const auto& entries = spec.lexicons().at(tt.text);
    const std::string& entry =
        entries[static_cast<std::size_t>(rng.uniform_int(entries.size()))];
    const std::vector<std::string> parts = split_spaces(entry);
    const bool is_anon = spec.is_anon_class(tt.text);
    for (std::size_t p = 0; p < parts.size(); ++p) {
      tokens.push_back(parts[p]);
      const std::string tag = (p == 0 ? "B-" : "I-") + tt.text;
      anon.push_back(is_anon ? tag : LabelScheme::kNegativeLabel);
      ce.push_back(is_anon ? LabelScheme::kNegativeLabel : tag);
    }
  }
  return Sentence(std::move(tokens), {{"anon", std::move(anon)}, {"ce", std::move(ce)}});
}

}  // namespace

Corpus generate(const TemplateSpec& spec, std::size_t n_sentences) {
  spec.validate();
  Corpus docs;
  const Rng base(spec.seed());
  const std::size_t n_docs = (n_sentences + kSentencesPerDocument - 1) / kSentencesPerDocument;
  for (std::size_t d = 0; d < n_docs; ++d) {
    // Per-document stream so generation order never matters.
    Rng rng = base.split(d);
    Document doc;
    doc.id = "synth-" + std::to_string(d);
    const std::size_t count =
        std::min(kSentencesPerDocument, n_sentences - d * kSentencesPerDocument);
    for (std::size_t i = 0; i < count; ++i) doc.sentences.push_back(generate_sentence(spec, rng));
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<LeakedToken> leakage_oracle(const Document& doc, const TemplateSpec& spec) {
  std::map<std::string, std::string> phi_tokens;
  for (const std::string& cls : spec.anon_classes()) {
    auto it = spec.lexicons().find(cls);
    if (it == spec.lexicons().end()) continue;
    for (const std::string& entry : it->second) {
      for (const std::string& tok : split_spaces(entry)) phi_tokens[tok] = cls;
    }
  }
  std::vector<LeakedToken> leaks;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& tokens = doc.sentences[s].tokens();
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      auto it = phi_tokens.find(tokens[t]);
      if (it != phi_tokens.end()) leaks.push_back({s, t, it->second});
    }
  }
  return leaks;
}

std::vector<LeakedToken> leakage_oracle(const Corpus& docs, const TemplateSpec& spec) {
  std::vector<LeakedToken> leaks;
  std::size_t sentence_base = 0;
  for (const Document& doc : docs) {
    for (LeakedToken leak : leakage_oracle(doc, spec)) {
      leak.sentence += sentence_base;
      leaks.push_back(std::move(leak));
    }
    sentence_base += doc.sentences.size();
  }
  return leaks;
}

}  // namespace jace
