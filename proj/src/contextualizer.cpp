#include "attrprobe/contextualizer.hpp"

#include <fstream>

#include "attrprobe/error.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {
namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
    case 'A': case 'E': case 'I': case 'O': case 'U':
      return true;
    default:
      return false;
  }
}

std::set<std::string> string_set(const nlohmann::json& j) {
  std::set<std::string> out;
  for (const auto& item : j) out.insert(normalize(item.get<std::string>()));
  return out;
}

}  // namespace

ContextualizerConfig ContextualizerConfig::from_json(const nlohmann::json& j) {
  ContextualizerConfig config;
  if (j.contains("to_remove")) config.to_remove = string_set(j.at("to_remove"));
  if (j.contains("needs_affix")) config.needs_affix = string_set(j.at("needs_affix"));
  if (j.contains("plural_overrides")) {
    for (const auto& [k, v] : j.at("plural_overrides").items()) {
      config.plural_overrides[normalize(k)] = normalize(v.get<std::string>());
    }
  }
  if (j.contains("substitutions")) {
    for (const auto& [k, v] : j.at("substitutions").items()) {
      config.substitutions[join(split_words(normalize(k)))] = join(split_words(normalize(v.get<std::string>())));
    }
  }
  return config;
}

ContextualizerConfig ContextualizerConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open contextualizer config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad contextualizer config " + path.string() + ": " + e.what());
  }
}

std::string pluralize(std::string_view verb) {
  if (verb.empty()) throw Error("cannot pluralize an empty word");
  std::string word(verb);
  const std::size_t n = word.size();
  if (n >= 2 && word[n - 1] == 'y' && !is_vowel(word[n - 2])) {
    return word.substr(0, n - 1) + "ies";
  }
  if (word.ends_with('s') || word.ends_with('x') || word.ends_with('z') || word.ends_with("ch") ||
      word.ends_with("sh")) {
    return word + "es";
  }
  return word + "s";
}

std::string contextualize(std::string_view object, const std::vector<std::string>& attribute,
                          const ContextualizerConfig& config, SentenceTemplate& slots) {
  if (object.empty()) throw Error("contextualize: empty object");
  if (attribute.empty()) throw Error("contextualize: empty attribute");

  std::vector<std::string> words = attribute;
  if (auto sub = config.substitutions.find(join(words)); sub != config.substitutions.end()) {
    words = split_words(sub->second);
  }
  if (words.size() >= 2 && config.to_remove.contains(words.front())) {
    words.erase(words.begin());
    auto override_it = config.plural_overrides.find(words.front());
    words.front() = override_it != config.plural_overrides.end() ? override_it->second
                                                                 : pluralize(words.front());
  }

  slots.prefix = is_vowel(object.front()) ? "An" : "A";
  slots.affix = config.needs_affix.contains(words.front()) ? "is" : "";
  slots.postfix = ".";

  std::string sentence = slots.prefix;
  sentence += ' ';
  sentence += object;
  if (!slots.affix.empty()) {
    sentence += ' ';
    sentence += slots.affix;
  }
  sentence += ' ';
  sentence += join(words);
  sentence += slots.postfix;
  if (sentence.front() >= 'a' && sentence.front() <= 'z') sentence.front() -= 'a' - 'A';
  return sentence;
}

std::string contextualize(std::string_view object, const std::vector<std::string>& attribute,
                          const ContextualizerConfig& config) {
  SentenceTemplate slots;
  return contextualize(object, attribute, config, slots);
}

std::vector<ContextualizedPair> contextualize_all(const NormDataset& dataset,
                                                  const ContextualizerConfig& config) {
  std::vector<ContextualizedPair> pairs;
  pairs.reserve(dataset.n_objects() * dataset.n_attributes());
  for (const auto& attribute : dataset.attributes()) {
    for (std::size_t o = 0; o < dataset.n_objects(); ++o) {
      pairs.push_back({o, attribute.id, contextualize(dataset.objects()[o], attribute.tokens, config)});
    }
  }
  return pairs;
}

}  // namespace attrprobe
