#include <doctest.h>

#include <fstream>
#include <sstream>

#include "attrprobe/error.hpp"
#include "attrprobe/kg_store.hpp"
#include "attrprobe/text.hpp"
#include "oracles.hpp"

using namespace attrprobe;

namespace {

KgStore parse(const std::string& text) {
  std::istringstream in(text);
  return KgStore::parse(in, "kb.tsv");
}

}  // namespace

TEST_CASE("relations are numbered in first-seen order") {
  auto store = parse(
      "start\trelation\tend\tkb\n"
      "hot\tantonym\tcold\tconceptnet\n"
      "hot\trelated_to\tfire\tconceptnet\n"
      "cold\tantonym\thot\tconceptnet\n");
  CHECK(store.relations().local("conceptnet", "antonym") == 0u);
  CHECK(store.relations().local("conceptnet", "related_to") == 1u);
  CHECK(store.triples().size() == 3);
}

TEST_CASE("per-kb relation ranges are disjoint") {
  auto store = parse(
      "a\tx\tb\tk1\n"
      "a\ty\tb\tk1\n"
      "a\tx\tb\tk2\n"
      "a\tz\tb\tk2\n");
  const auto& idx = store.relations();
  CHECK(idx.global("k1", "x") == 0u);
  CHECK(idx.global("k1", "y") == 1u);
  CHECK(idx.global("k2", "x") == 2u);
  CHECK(idx.global("k2", "z") == 3u);
  CHECK(idx.size() == 4);
  CHECK(idx.describe(2) == std::pair<std::string, std::string>{"k2", "x"});
  CHECK_THROWS(idx.describe(4));
  for (const auto& t : store.triples()) CHECK(t.relation_id < idx.size());
}

TEST_CASE("duplicates are stored once with a warning; empty input is valid") {
  auto store = parse("a\tx\tb\tk\na\tx\tb\tk\n");
  CHECK(store.triples().size() == 1);
  CHECK(store.warnings().size() == 1);
  CHECK(parse("").triples().empty());
}

TEST_CASE("malformed rows report line numbers") {
  try {
    parse("a\tx\tb\tk\na\tx\tb\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("a\t\tb\tk\n"), ParseError);
}

TEST_CASE("reloading gives the same index") {
  oracle::TempDir dir;
  std::ofstream(dir / "a.tsv") << "a\tx\tb\tk1\nc\ty\td\tk1\n";
  std::ofstream(dir / "b.tsv") << "a\tz\tb\tk2\n";
  auto first = KgStore::load({dir / "a.tsv", dir / "b.tsv"});
  auto second = KgStore::load({dir / "a.tsv", dir / "b.tsv"});
  CHECK(first.relations() == second.relations());
  CHECK(first.relations().global("k2", "z") == 2u);
  CHECK_THROWS(KgStore::load({dir / "missing.tsv"}));
}

TEST_CASE("pair queries") {
  auto store = parse(
      "shirt\tmade_of\tcotton\tconceptnet\n"
      "cotton\tused_for\tshirt\tconceptnet\n"
      "shirt\trelated_to\tred\tconceptnet\n");
  auto matches = store.query_pair("shirt", {"made", "of", "cotton"});
  REQUIRE(matches.size() == 2);
  CHECK(store.relations().describe(matches[0].relation_id).second == "made_of");
  CHECK(matches[0].direction == Direction::Forward);
  CHECK(matches[1].direction == Direction::Reverse);
  CHECK(store.query_pair("shirt", {"is", "blue"}).empty());
  CHECK(store.query_pair("sock", {"made", "of", "cotton"}).empty());
  CHECK(store.query_pair("shirt", {"is"}).empty());
}

TEST_CASE("prompt queries: eat ... dinner") {
  auto store = parse("eat\tat_location\tdinner\tconceptnet\n");
  auto tokens = tokenize("We often eat pasta at dinner.");
  auto per_word = store.query_prompt(tokens);
  REQUIRE(per_word.size() == tokens.size());
  REQUIRE(per_word[2].size() == 1);
  CHECK(store.relations().describe(per_word[2][0].relation_id).second == "at_location");
  CHECK(per_word[2][0].word_position == 2);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (i != 2) CHECK(per_word[i].empty());

  CHECK(store.query_prompt(tokenize("We eat pasta.")).at(1).empty());
}

TEST_CASE("multi-word start nodes match at their first word") {
  auto store = parse("orange juice\tis_a\tdrink\tconceptnet\njuice\tis_a\tdrink\tconceptnet\n");
  auto tokens = tokenize("a drink of orange juice");
  auto per_word = store.query_prompt(tokens);
  REQUIRE(per_word[3].size() == 1);
  CHECK(per_word[3][0].triple == 0);
  REQUIRE(per_word[4].size() == 1);
  CHECK(per_word[4][0].triple == 1);
  CHECK(store.query_prompt(tokenize("orange drink juice"))[0].empty());
}

TEST_CASE("prompt and pair queries equal brute-force scans") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto kb = oracle::random_kb(rng, 1 + rng.index(50));
    auto store = parse(kb.tsv);
    for (int q = 0; q < 5; ++q) {
      std::vector<std::string> prompt;
      const auto len = rng.index(40);
      for (std::size_t i = 0; i < len; ++i) prompt.push_back(kb.vocabulary[rng.index(kb.vocabulary.size())]);
      auto got = store.query_prompt(prompt);
      for (auto& list : got) std::sort(list.begin(), list.end());
      CHECK(got == oracle::brute_force_prompt(store, prompt));

      std::string object = kb.vocabulary[rng.index(kb.vocabulary.size())];
      if (rng.uniform() < 0.3) object += " " + kb.vocabulary[rng.index(kb.vocabulary.size())];
      std::vector<std::string> attribute{"is"};
      for (std::size_t i = 0, n = 1 + rng.index(4); i < n; ++i)
        attribute.push_back(kb.vocabulary[rng.index(kb.vocabulary.size())]);
      CHECK(store.query_pair(object, attribute) == oracle::brute_force_pair(store, object, attribute, default_stop_words()));
    }
  }
}

TEST_CASE("sample_relation is uniform") {
  Rng rng(17);
  std::vector<int> items{10, 20, 30};
  CHECK(sample_relation(std::vector<int>{}, rng) == std::nullopt);
  CHECK(sample_relation(std::vector<int>{5}, rng) == 5);
  std::map<int, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[*sample_relation(items, rng)];
  for (auto [k, v] : counts) {
    CHECK(v / 30000.0 >= 0.30);
    CHECK(v / 30000.0 <= 0.37);
  }
}
