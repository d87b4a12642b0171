#include <doctest.h>

#include "attrprobe/data_selector.hpp"
#include "attrprobe/error.hpp"
#include "attrprobe/rng.hpp"
#include "golden.hpp"

using namespace attrprobe;

namespace {

DeficiencySpec spec_of(const std::vector<Attribute>& attributes) {
  DeficiencySpec spec;
  spec.attributes = attributes;
  return spec;
}

}  // namespace

TEST_CASE("related by stemmed tokens") {
  QADatum toys{"1", "The children played with toys.", "", {"x"}};
  CHECK(is_related(toys, {{"is", "a", "toy"}, Category::Taxonomic, 0}));
  QADatum plain{"2", "Nothing relevant.", "Really?", {"no"}};
  CHECK_FALSE(is_related(plain, {{"does", "deflate"}, Category::Functional, 0}));
  CHECK_THROWS_AS(is_related(plain, {{"is"}, Category::Visual, 0}), Error);
}

TEST_CASE("stop words never match on their own") {
  QADatum datum{"1", "This is a thing that does what it has to.", "", {"the"}};
  CHECK_FALSE(is_related(datum, {{"is", "a", "toy"}, Category::Taxonomic, 0}));
  SelectorConfig bare;
  bare.stop_words = {"is", "does", "has"};
  CHECK(is_related(datum, {{"is", "a", "toy"}, Category::Taxonomic, 0}, bare));
}

TEST_CASE("attribute stems") {
  CHECK(attribute_stems({{"does", "deflate"}, Category::Functional, 0}) == std::vector<std::string>{"deflat"});
  CHECK_THROWS(attribute_stems({{"has", "the"}, Category::Functional, 0}));
}

TEST_CASE("hand fixture selects the expected subset") {
  auto f = golden::selection_fixture();
  auto selection = select_subset(f.corpus, spec_of(f.attributes));
  CHECK(selection.kept == f.kept);
  CHECK(selection.provenance == f.provenance);
  auto threaded = select_subset(f.corpus, spec_of(f.attributes), {}, 3);
  CHECK(threaded.kept == selection.kept);
  CHECK(threaded.provenance == selection.provenance);
}

TEST_CASE("empty spec selects nothing") {
  auto f = golden::selection_fixture();
  auto selection = select_subset(f.corpus, {});
  CHECK(selection.kept.empty());
}

TEST_CASE("unusable attributes are reported, not fatal") {
  auto f = golden::selection_fixture();
  auto attrs = f.attributes;
  attrs.push_back({{"is"}, Category::Visual, 4});
  auto selection = select_subset(f.corpus, spec_of(attrs));
  CHECK(selection.unusable == std::vector<std::size_t>{4});
  CHECK(selection.kept == f.kept);
}

TEST_CASE("monotone in the deficient set and provenance replays") {
  auto f = golden::selection_fixture();
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Attribute> small, large;
    for (const auto& a : f.attributes) {
      const double u = rng.uniform();
      if (u < 0.4) small.push_back(a);
      if (u < 0.8) large.push_back(a);
    }
    auto s = select_subset(f.corpus, spec_of(small));
    auto l = select_subset(f.corpus, spec_of(large));
    for (auto i : s.kept) CHECK(std::find(l.kept.begin(), l.kept.end(), i) != l.kept.end());
    for (std::size_t k = 0; k < l.kept.size(); ++k) {
      for (auto id : l.provenance[k]) CHECK(is_related(f.corpus[l.kept[k]], f.attributes[id]));
    }
  }
}

TEST_CASE("deficiency spec from a fit report") {
  FitReport report;
  report.per_attribute = {{0, "is red", Category::Visual, 1.0, 3}, {1, "is a toy", Category::Taxonomic, 0.4, 2},
                          {2, "does deflate", Category::Functional, 0.8, 2}};
  auto spec = DeficiencySpec::from_report(report);
  REQUIRE(spec.attributes.size() == 2);
  CHECK(spec.attributes[0].name() == "is a toy");
  CHECK(DeficiencySpec::from_report(report, 0.5).attributes.size() == 1);
  for (const auto& a : spec.attributes) CHECK(report.per_attribute[a.id].f1 < spec.f1_threshold);
}

TEST_CASE("corpus parsing") {
  auto corpus = parse_corpus(
      "{\"id\":\"a\",\"passage\":\"p\",\"question\":\"q\",\"answers\":[\"x\",\"y\"]}\n"
      "\n"
      "{\"id\":\"b\",\"passage\":\"p\",\"question\":\"q\",\"answers\":[\"z\"]}\n",
      "c.jsonl");
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].answers.size() == 2);
  CHECK(to_json(corpus[1])["answers"][0] == "z");
  try {
    parse_corpus("{\"id\":\"a\",\"passage\":\"p\",\"question\":\"q\",\"answers\":[\"x\"]}\n"
                 "{\"id\":\"a\",\"passage\":\"p\",\"question\":\"q\",\"answers\":[\"x\"]}\n",
                 "c.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"passage\":\"p\",\"question\":\"q\",\"answers\":[]}\n", "c"), ParseError);
  CHECK_THROWS_AS(parse_corpus("{not json}\n", "c"), ParseError);
}
