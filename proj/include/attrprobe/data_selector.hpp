#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrprobe/norm_data.hpp"
#include "attrprobe/probe.hpp"

namespace attrprobe {

/// One reading-comprehension item from the supplementary corpus.
struct QADatum {
  std::string id;
  std::string passage;
  std::string question;
  std::vector<std::string> answers;
};

/// Reads {id, passage, question, answers:[...]} lines. Ids must be unique
/// and every datum needs at least one answer.
std::vector<QADatum> load_corpus(const std::filesystem::path& path);
std::vector<QADatum> parse_corpus(const std::string& text, std::string_view source);

struct SelectorConfig {
  /// Attribute words ignored for matching. The articles are included so that
  /// "is a toy" matches on "toy" rather than on every "a".
  std::set<std::string> stop_words{"is", "does", "has", "a", "an", "the"};
};

/// Attributes whose fit score fell below the threshold.
struct DeficiencySpec {
  std::vector<Attribute> attributes;
  double f1_threshold = 1.0;

  static DeficiencySpec from_report(const FitReport& report, double threshold = 1.0);
};

/// Stemmed content tokens of an attribute. Throws if none survive the stop filter.
std::vector<std::string> attribute_stems(const Attribute& attribute, const SelectorConfig& config = {});

/// True iff a stemmed content token of the attribute equals a stemmed token
/// anywhere in the passage, question, or answers.
bool is_related(const QADatum& datum, const Attribute& attribute, const SelectorConfig& config = {});

struct Selection {
  /// Corpus indices of kept data, in corpus order.
  std::vector<std::size_t> kept;
  /// For each kept datum, the ids of the attributes it matched.
  std::vector<std::vector<std::size_t>> provenance;
  /// Deficient attributes with no content tokens, which cannot select anything.
  std::vector<std::size_t> unusable;
};

Selection select_subset(const std::vector<QADatum>& corpus, const DeficiencySpec& spec,
                        const SelectorConfig& config = {}, std::size_t threads = 1);

nlohmann::json to_json(const QADatum& datum);

}  // namespace attrprobe
