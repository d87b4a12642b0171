#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrprobe/norm_data.hpp"

namespace attrprobe {

/// Word lists driving sentence construction. Defaults follow the CSLB
/// contextualization rules; every list is extensible from a JSON file.
struct ContextualizerConfig {
  /// Leading attribute words that are dropped, pluralizing the next word.
  std::set<std::string> to_remove{"does"};
  /// Leading attribute words that take "is" between object and attribute.
  std::set<std::string> needs_affix{"made"};
  /// Third-person forms that bypass the pluralization rules ("have" -> "has").
  std::map<std::string, std::string> plural_overrides;
  /// Whole-attribute rewrites applied before any other rule.
  std::map<std::string, std::string> substitutions;

  static ContextualizerConfig from_json(const nlohmann::json& j);
  static ContextualizerConfig load(const std::filesystem::path& path);
};

/// Third-person singular of a base-form verb: consonant+y -> ies,
/// s/x/z/ch/sh -> +es, otherwise +s.
std::string pluralize(std::string_view verb);

/// The three context slots wrapped around "object attribute".
struct SentenceTemplate {
  std::string prefix;   // "A" or "An"
  std::string affix;    // "is" or empty
  std::string postfix;  // "."
};

/// Turns an (object, attribute) pair into a short declarative sentence, e.g.
/// (balloon, does deflate) -> "A balloon deflates.".
std::string contextualize(std::string_view object, const std::vector<std::string>& attribute,
                          const ContextualizerConfig& config = {});

/// Same, also returning the chosen template slots.
std::string contextualize(std::string_view object, const std::vector<std::string>& attribute,
                          const ContextualizerConfig& config, SentenceTemplate& slots);

struct ContextualizedPair {
  std::size_t object;
  std::size_t attribute;
  std::string sentence;
};

/// Every (object, attribute) cell of the dataset, attribute-major.
std::vector<ContextualizedPair> contextualize_all(const NormDataset& dataset,
                                                  const ContextualizerConfig& config = {});

}  // namespace attrprobe
