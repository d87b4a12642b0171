#include <doctest.h>

#include <fstream>
#include <regex>

#include "attrprobe/contextualizer.hpp"
#include "attrprobe/error.hpp"
#include "attrprobe/rng.hpp"
#include "attrprobe/text.hpp"
#include "golden.hpp"
#include "oracles.hpp"

using namespace attrprobe;

TEST_CASE("pluralize rules") {
  CHECK(pluralize("deflate") == "deflates");
  CHECK(pluralize("squash") == "squashes");
  CHECK(pluralize("fly") == "flies");
  CHECK(pluralize("play") == "plays");
  CHECK(pluralize("fix") == "fixes");
  CHECK(pluralize("buzz") == "buzzes");
  CHECK(pluralize("catch") == "catches");
  CHECK(pluralize("pass") == "passes");
  CHECK(pluralize("y") == "ys");
  CHECK_THROWS_AS(pluralize(""), Error);
}

TEST_CASE("golden sentences") {
  for (const auto& c : golden::sentences()) {
    CAPTURE(c.object);
    CAPTURE(c.attribute);
    CHECK(contextualize(c.object, split_words(c.attribute)) == c.expected);
  }
}

TEST_CASE("template slots") {
  SentenceTemplate slots;
  contextualize("shirt", {"made", "of", "cotton"}, {}, slots);
  CHECK(slots.prefix == "A");
  CHECK(slots.affix == "is");
  CHECK(slots.postfix == ".");
  contextualize("apple", {"is", "red"}, {}, slots);
  CHECK(slots.prefix == "An");
  CHECK(slots.affix.empty());
}

TEST_CASE("config extends the word lists") {
  auto config = ContextualizerConfig::from_json(nlohmann::json::parse(R"({
    "to_remove": ["does", "can"],
    "needs_affix": ["made", "used"],
    "plural_overrides": {"have": "has", "go": "goes"},
    "substitutions": {"does deflate": "does shrink"}
  })"));
  CHECK(contextualize("dog", {"can", "go", "far"}, config) == "A dog goes far.");
  CHECK(contextualize("cup", {"does", "have", "handles"}, config) == "A cup has handles.");
  CHECK(contextualize("pen", {"used", "for", "writing"}, config) == "A pen is used for writing.");
  CHECK(contextualize("balloon", {"does", "deflate"}, config) == "A balloon shrinks.");
}

TEST_CASE("config errors") {
  oracle::TempDir dir;
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(ContextualizerConfig::load(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(ContextualizerConfig::load(dir / "missing.json"), ConfigError);
}

TEST_CASE("a lone removable word is kept") { CHECK(contextualize("bin", {"does"}) == "A bin does."); }

TEST_CASE("empty inputs are rejected") {
  CHECK_THROWS(contextualize("", {"is", "red"}));
  CHECK_THROWS(contextualize("apple", {}));
}

TEST_CASE("sentence properties over random pairs") {
  const std::vector<std::string> objects{"apple", "bus", "owl", "kite", "urn", "egg", "yak", "sofa"};
  const std::vector<std::string> words{"is", "has", "does", "made", "of", "red", "fly", "wash", "toy", "wood"};
  const std::regex shape("^(A|An) .+\\.$");
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const auto& object = objects[rng.index(objects.size())];
    std::vector<std::string> attribute;
    const auto len = 1 + rng.index(4);
    for (std::size_t k = 0; k < len; ++k) attribute.push_back(words[rng.index(words.size())]);
    const auto sentence = contextualize(object, attribute);
    CHECK(std::regex_match(sentence, shape));
    CHECK(sentence == contextualize(object, attribute));
    CHECK(sentence.find(" " + object + " ") != std::string::npos);
    if (attribute.front() != "does") {
      // token-unchanged apart from the affix
      const auto tail = join(attribute) + ".";
      CHECK(sentence.substr(sentence.size() - tail.size()) == tail);
    }
  }
}

TEST_CASE("contextualize_all is attribute-major") {
  NormDataset ds({"apple", "shirt"}, {{{"is", "red"}, Category::Visual, 0}, {{"made", "of", "cotton"}, Category::Visual, 1}},
                 {{0, 0}, {1, 1}});
  auto pairs = contextualize_all(ds);
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].sentence == "An apple is red.");
  CHECK(pairs[1].sentence == "A shirt is red.");
  CHECK(pairs[3].sentence == "A shirt is made of cotton.");
}
