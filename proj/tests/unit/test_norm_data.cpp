#include <doctest.h>

#include <fstream>
#include <sstream>

#include "attrprobe/error.hpp"
#include "attrprobe/norm_data.hpp"
#include "attrprobe/rng.hpp"
#include "oracles.hpp"

using namespace attrprobe;

namespace {

NormDataset parse(const std::string& text, LoadOptions options = {}) {
  std::istringstream in(text);
  return parse_norms(in, "fixture.tsv", options);
}

const char* kFixture =
    "concept\tfeature\tfeature type\tproduction frequency\n"
    "apple\tis red\tvisual perceptual\t5\n"
    "apple\tis a fruit\ttaxonomic\t5\n"
    "shirt\tmade of cotton\tvisual\t5\n"
    "balloon\tdoes deflate\tfunctional\t5\n"
    "balloon\tis red\tvisual\t5\n";

}  // namespace

TEST_CASE("fixture loads exactly the listed cells") {
  auto ds = parse(kFixture);
  REQUIRE(ds.n_objects() == 3);
  REQUIRE(ds.n_attributes() == 4);
  CHECK(ds.objects() == std::vector<std::string>{"apple", "shirt", "balloon"});
  CHECK(ds.attributes()[0].name() == "is red");
  CHECK(ds.attributes()[2].category == Category::Visual);
  CHECK(ds.attributes()[3].category == Category::Functional);
  std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 0}, {0, 1}, {1, 2}, {2, 0}, {2, 3}};
  CHECK(ds.positives() == expected);
  std::size_t true_cells = 0;
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t a = 0; a < 4; ++a) true_cells += ds.has(o, a);
  CHECK(true_cells == 5);
}

TEST_CASE("production frequency threshold") {
  const std::string text =
      "o\ta\tc\tf\n"
      "apple\tis red\tvisual\t1\n"
      "apple\tis round\tvisual\t2\n"
      "pear\tis red\tvisual\t3\n";
  auto ds = parse(text);
  CHECK(ds.has(*ds.find_object("apple"), *ds.find_attribute("is round")));
  CHECK_FALSE(ds.has(*ds.find_object("apple"), *ds.find_attribute("is red")));
  CHECK(ds.has(*ds.find_object("pear"), *ds.find_attribute("is red")));

  LoadOptions strict;
  strict.min_production_frequency = 3;
  auto high = parse(text, strict);
  CHECK(high.n_attributes() == 1);  // "is round" has no positive left
  CHECK(high.attributes()[0].id == 0);
}

TEST_CASE("unknown category is rejected with its line") {
  try {
    parse("o\ta\tc\tf\napple\tis red\tcolour\t5\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("unknown category") != std::string::npos);
  }
}

TEST_CASE("malformed rows name their line number") {
  try {
    parse("o\ta\tc\tf\napple\tis red\tvisual\t5\napple\tis round\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("o\ta\tc\tf\napple\tis red\tvisual\tmany\n"), ParseError);
  CHECK_THROWS_AS(parse("o\ta\tc\tf\napple\tis red\tvisual\t5\napple\tis red\ttaxonomic\t5\n"), ParseError);
}

TEST_CASE("empty files are errors") {
  CHECK_THROWS_AS(parse(""), Error);
  CHECK_THROWS_AS(parse("o\ta\tc\tf\n"), Error);
}

TEST_CASE("category aliases and round-trip") {
  for (auto c : kCategories) CHECK(parse_category(to_string(c)) == c);
  CHECK(parse_category("Encyclopaedic") == Category::Encyclopedic);
  CHECK(parse_category("other perceptual") == Category::Perceptual);
  CHECK(parse_category("colour") == std::nullopt);
}

TEST_CASE("dataset invariants are enforced") {
  std::vector<Attribute> attrs{{{"is", "red"}, Category::Visual, 0}};
  CHECK_THROWS(NormDataset({"a", "a"}, attrs, {{0, 0}}));
  CHECK_THROWS(NormDataset({"a"}, attrs, {}));
  std::vector<Attribute> dup{{{"is", "red"}, Category::Visual, 0}, {{"is", "red"}, Category::Visual, 1}};
  CHECK_THROWS(NormDataset({"a"}, dup, {{0, 0}, {0, 1}}));
  std::vector<Attribute> sparse{{{"is", "red"}, Category::Visual, 3}};
  CHECK_THROWS(NormDataset({"a"}, sparse, {{0, 0}}));
}

TEST_CASE("filter removes out-of-vocabulary and excluded attributes") {
  auto ds = parse(
      "o\ta\tc\tf\n"
      "knife\tis sharp\tvisual\t5\n"
      "knife\tis zorbly\tvisual\t5\n"
      "knife\tis metal\tvisual\t5\n");
  std::unordered_set<std::string> vocab{"is", "sharp", "metal", "knife"};
  FilterOptions options;
  options.exclusions = {"is sharp"};
  auto out = filter_attributes(ds, vocab, options);
  REQUIRE(out.n_attributes() == 1);
  CHECK(out.attributes()[0].name() == "is metal");
  CHECK(out.attributes()[0].id == 0);

  std::vector<std::string> warnings;
  auto none = filter_attributes(ds, {}, {}, &warnings);
  CHECK(none.n_attributes() == 0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("strict filter also checks object tokens") {
  auto ds = parse("o\ta\tc\tf\nknife\tis sharp\tvisual\t5\nzorb\tis sharp\tvisual\t5\n");
  std::unordered_set<std::string> vocab{"is", "sharp", "knife"};
  CHECK(filter_attributes(ds, vocab).n_objects() == 2);
  FilterOptions strict;
  strict.strict = true;
  CHECK(filter_attributes(ds, vocab, strict).objects() == std::vector<std::string>{"knife"});
}

TEST_CASE("filter properties on random datasets") {
  Rng rng(3);
  const std::vector<std::string> words{"is", "red", "round", "big", "has", "legs", "made", "of", "wood", "zz"};
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream tsv;
    tsv << "o\ta\tc\tf\n";
    for (int row = 0; row < 40; ++row) {
      const auto a = rng.index(12);
      tsv << "obj" << rng.index(8) << '\t' << words[a % words.size()] << ' ' << words[(a * 7 + 3) % words.size()]
          << '\t' << to_string(kCategories[a % 5]) << '\t' << 1 + rng.index(5) << '\n';
    }
    NormDataset raw;
    try {
      raw = parse(tsv.str());
    } catch (const ParseError&) {
      continue;  // the same name drew two categories
    }
    std::unordered_set<std::string> vocab;
    for (const auto& w : words)
      if (rng.uniform() < 0.8) vocab.insert(w);
    auto once = filter_attributes(raw, vocab);
    auto twice = filter_attributes(once, vocab);
    CHECK(once == twice);
    for (auto [o, a] : once.positives()) {
      auto ro = raw.find_object(once.objects()[o]);
      auto ra = raw.find_attribute(once.attributes()[a].name());
      REQUIRE(ro);
      REQUIRE(ra);
      CHECK(raw.has(*ro, *ra));
    }
    std::vector<int> seen(once.n_attributes(), 0);
    for (auto c : kCategories)
      for (auto a : once.attributes_in(c)) ++seen[a];
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("json dump is canonical") {
  auto ds = parse(kFixture);
  auto j = to_json(ds);
  CHECK(j["objects"].size() == 3);
  CHECK(j["attributes"][1]["category"] == "taxonomic");
  CHECK(j["positives"].size() == 5);
  CHECK(j["positives"][0] == nlohmann::json::array({0, 0}));
}

TEST_CASE("file loading and raw attribute counts") {
  oracle::TempDir dir;
  {
    std::ofstream(dir / "n.tsv") << "o\ta\tc\tf\napple\tis red\tvisual\t1\npear\tis green\tvisual\t4\n";
    std::ofstream(dir / "ex.txt") << "# comment\n\nis sharp\n  Has Legs \n";
  }
  CHECK(count_raw_attributes(dir / "n.tsv") == 2);
  CHECK(load_norms(dir / "n.tsv").n_attributes() == 1);
  CHECK(load_exclusion_list(dir / "ex.txt") == std::vector<std::string>{"is sharp", "has legs"});
  CHECK_THROWS(load_norms(dir / "missing.tsv"));
}
