#include <string>
#include <vector>

#include "doctest.h"
#include "jace/corpus.hpp"
#include "jace/errors.hpp"
#include "jace/rng.hpp"
#include "jace/synthgen.hpp"

using namespace jace;

namespace {

std::vector<LabelScheme> two_schemes() {
  return {LabelScheme("anon", {"PAT", "AGE"}), LabelScheme("ce", {"DRUG"})};
}

}  // namespace

TEST_CASE("label scheme derives its tag list from the class order") {
  const LabelScheme s("anon", {"PAT", "AGE"});
  CHECK(s.tags() == std::vector<std::string>{"O", "B-PAT", "I-PAT", "B-AGE", "I-AGE"});
  CHECK(s.num_tags() == 5);
  CHECK(s.num_classes() == 2);
  CHECK(s.tag_index("O") == 0);
  CHECK(s.tag_index("I-AGE") == 4);
  CHECK(s.tag_class(0) == -1);
  CHECK(s.tag_class(1) == 0);
  CHECK(s.tag_class(4) == 1);
  CHECK(s.class_index("AGE") == 1);
  CHECK_THROWS_AS(s.tag_index("B-XXX"), UserError);
}

TEST_CASE("label scheme rejects malformed class names") {
  CHECK_THROWS_AS(LabelScheme("t", {""}), UserError);
  CHECK_THROWS_AS(LabelScheme("t", {"A B"}), UserError);
  CHECK_THROWS_AS(LabelScheme("t", {"A-B"}), UserError);
  CHECK_THROWS_AS(LabelScheme("t", {"A", "A"}), UserError);
  CHECK_THROWS_AS(LabelScheme("", {"A"}), UserError);
}

TEST_CASE("bio validity rules") {
  CHECK(is_bio_valid({"O", "B-PAT", "I-PAT"}));
  CHECK(is_bio_valid({}));
  CHECK_FALSE(is_bio_valid({"I-PAT"}));
  CHECK_FALSE(is_bio_valid({"O", "I-PAT"}));
  CHECK_FALSE(is_bio_valid({"B-PAT", "I-AGE"}));
  CHECK(is_bio_valid({"B-PAT", "B-PAT"}));

  std::string why;
  CHECK(first_bio_violation({"O", "I-PAT"}, &why) == 1);
  CHECK(first_bio_violation({"B-PAT", "I-PAT"}, &why) == -1);
}

TEST_CASE("bio_to_spans on the reference examples") {
  CHECK(bio_to_spans({"B-PAT", "I-PAT", "O"}) == std::vector<Span>{{0, 2, "PAT"}});
  CHECK(bio_to_spans({"O", "O"}) == std::vector<Span>{});
  CHECK(bio_to_spans({"B-PAT", "B-AGE", "I-AGE"}) ==
        std::vector<Span>{{0, 1, "PAT"}, {1, 3, "AGE"}});
}

TEST_CASE("spans_to_bio on the reference examples") {
  CHECK(spans_to_bio({}, 3) == std::vector<std::string>{"O", "O", "O"});
  CHECK(spans_to_bio({{1, 2, "AGE"}}, 3) == std::vector<std::string>{"O", "B-AGE", "O"});
  CHECK_THROWS_AS(spans_to_bio({{0, 2, "A"}, {1, 3, "B"}}, 3), UserError);
  CHECK_THROWS_AS(spans_to_bio({{2, 4, "A"}}, 3), UserError);
}

TEST_CASE("span conversion round-trips on 1000 random span sets") {
  Rng rng(42);
  const std::vector<std::string> classes = {"A", "B", "C"};
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t len = 1 + rng.uniform_int(12);
    std::vector<Span> spans;
    std::size_t pos = 0;
    while (pos < len) {
      if (rng.bernoulli(0.4)) {
        const std::size_t end = pos + 1 + rng.uniform_int(std::min<std::size_t>(3, len - pos));
        spans.push_back({pos, end, classes[rng.uniform_int(classes.size())]});
        pos = end;
      } else {
        ++pos;
      }
    }
    const std::vector<std::string> bio = spans_to_bio(spans, len);
    CHECK(is_bio_valid(bio));
    CHECK(bio_to_spans(bio) == spans);
  }
}

TEST_CASE("parse_conll on a minimal two-scheme document") {
  const Corpus docs = parse_conll("Peter\tB-PAT\tO\n", two_schemes());
  REQUIRE(docs.size() == 1);
  REQUIRE(docs[0].sentences.size() == 1);
  const Sentence& s = docs[0].sentences[0];
  CHECK(s.tokens() == std::vector<std::string>{"Peter"});
  CHECK(s.task_labels("anon") == std::vector<std::string>{"B-PAT"});
  CHECK(s.task_labels("ce") == std::vector<std::string>{"O"});
}

TEST_CASE("parse_conll of an empty string is an empty corpus") {
  CHECK(parse_conll("", two_schemes()).empty());
}

TEST_CASE("parse_conll rejects a leading I tag with the line number") {
  try {
    parse_conll("x\tI-PAT\tO\n", two_schemes());
    FAIL("expected UserError");
  } catch (const UserError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("I-PAT") != std::string::npos);
  }
}

TEST_CASE("parse_conll reports malformed lines") {
  try {
    parse_conll("ok\tO\tO\nbad\tO\n", two_schemes());
    FAIL("expected UserError");
  } catch (const UserError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_conll("x\tB-NOPE\tO\n", two_schemes()), UserError);
}

TEST_CASE("sentence construction enforces its invariants") {
  CHECK_THROWS_AS(Sentence({"a", "b"}, {{"anon", {"O"}}}), UserError);
  CHECK_THROWS_AS(Sentence({"a"}, {{"anon", {"I-PAT"}}}), UserError);
  CHECK_NOTHROW(Sentence({"a"}, {{"anon", {"B-PAT"}}}));
}

TEST_CASE("write_conll round-trips") {
  const std::vector<LabelScheme> schemes = two_schemes();
  SUBCASE("empty corpus") { CHECK(write_conll({}, schemes).empty()); }
  SUBCASE("minimal document") {
    const Corpus docs = parse_conll("-DOCSTART- d1\n\nPeter\tB-PAT\tO\n", schemes);
    const std::string text = write_conll(docs, schemes);
    CHECK(parse_conll(text, schemes) == docs);
  }
  SUBCASE("100 synthetic documents") {
    const Corpus docs = generate(TemplateSpec::default_spec(), 1000);
    REQUIRE(docs.size() == 100);
    const std::vector<LabelScheme> synth = TemplateSpec::default_spec().schemes();
    const std::string text = write_conll(docs, synth);
    const Corpus back = parse_conll(text, synth);
    CHECK(back == docs);
    CHECK(write_conll(back, synth) == text);
  }
}

TEST_CASE("underscore splitting on the reference examples") {
  const Sentence hosp({"Hospital_General"}, {{"anon", {"B-HOSP"}}});
  const Sentence split1 = split_underscore_tokens(hosp);
  CHECK(split1.tokens() == std::vector<std::string>{"Hospital", "General"});
  CHECK(split1.task_labels("anon") == std::vector<std::string>{"B-HOSP", "I-HOSP"});

  const Sentence ab({"a_b"}, {{"anon", {"O"}}});
  const Sentence split2 = split_underscore_tokens(ab);
  CHECK(split2.tokens() == std::vector<std::string>{"a", "b"});
  CHECK(split2.task_labels("anon") == std::vector<std::string>{"O", "O"});

  const Sentence plain({"x"}, {{"anon", {"B-PAT"}}, {"ce", {"O"}}});
  CHECK(split_underscore_tokens(plain) == plain);
}

TEST_CASE("underscore splitting keeps I tags and handles dirty input") {
  const Sentence s({"went", "to", "Hospital_General", "Anexo_2"},
                   {{"anon", {"O", "O", "B-HOSP", "I-HOSP"}}});
  const Sentence out = split_underscore_tokens(s);
  CHECK(out.tokens() ==
        std::vector<std::string>{"went", "to", "Hospital", "General", "Anexo", "2"});
  CHECK(out.task_labels("anon") ==
        std::vector<std::string>{"O", "O", "B-HOSP", "I-HOSP", "I-HOSP", "I-HOSP"});

  const Sentence dirty({"_a", "b__c", "___"}, {{"anon", {"O", "B-PAT", "O"}}});
  const Sentence dout = split_underscore_tokens(dirty);
  CHECK(dout.tokens() == std::vector<std::string>{"_a", "b", "c", "___"});
  CHECK(dout.task_labels("anon") == std::vector<std::string>{"O", "B-PAT", "I-PAT", "O"});
}

TEST_CASE("underscore splitting is idempotent") {
  const Corpus docs = generate(TemplateSpec::default_spec(), 200);
  for (const Document& doc : docs) {
    for (const Sentence& s : doc.sentences) {
      const Sentence once = split_underscore_tokens(s);
      CHECK(split_underscore_tokens(once) == once);
    }
  }
}

TEST_CASE("document ids must be unique and non-empty documents enforced") {
  const std::vector<LabelScheme> schemes = two_schemes();
  CHECK_THROWS_AS(
      parse_conll("-DOCSTART- d1\n\nx\tO\tO\n\n-DOCSTART- d1\n\ny\tO\tO\n", schemes),
      UserError);
  CHECK_THROWS_AS(parse_conll("-DOCSTART- d1\n\n-DOCSTART- d2\n\nx\tO\tO\n", schemes),
                  UserError);
}

TEST_CASE("corpus helpers count and flatten sentences") {
  const Corpus docs = generate(TemplateSpec::default_spec(), 25);
  CHECK(count_sentences(docs) == 25);
  CHECK(all_sentences(docs).size() == 25);
}
