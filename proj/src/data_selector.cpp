#include "attrprobe/data_selector.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "attrprobe/error.hpp"
#include "attrprobe/io.hpp"
#include "attrprobe/parallel.hpp"
#include "attrprobe/stemmer.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

using nlohmann::json;

std::vector<QADatum> parse_corpus(const std::string& text, std::string_view source) {
  std::vector<QADatum> corpus;
  std::unordered_set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize(line).empty()) continue;
    try {
      const json j = json::parse(line);
      QADatum datum;
      datum.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      datum.passage = j.value("passage", "");
      datum.question = j.value("question", "");
      datum.answers = j.at("answers").get<std::vector<std::string>>();
      if (datum.answers.empty()) throw ParseError(std::string(source), line_no, "datum has no answers");
      if (!ids.insert(datum.id).second) {
        throw ParseError(std::string(source), line_no, "duplicate datum id '" + datum.id + "'");
      }
      corpus.push_back(std::move(datum));
    } catch (const json::exception& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  return corpus;
}

std::vector<QADatum> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path), path.string());
}

DeficiencySpec DeficiencySpec::from_report(const FitReport& report, double threshold) {
  DeficiencySpec spec;
  spec.f1_threshold = threshold;
  for (const auto& fit : report.per_attribute) {
    if (fit.f1 < threshold) spec.attributes.push_back(Attribute{split_words(fit.name), fit.category, fit.id});
  }
  return spec;
}

std::vector<std::string> attribute_stems(const Attribute& attribute, const SelectorConfig& config) {
  std::vector<std::string> stems;
  for (const auto& token : attribute.tokens) {
    if (config.stop_words.contains(token)) continue;
    for (const auto& piece : tokenize(token)) stems.push_back(stem(piece));
  }
  if (stems.empty()) {
    throw Error("attribute '" + attribute.name() + "' has no content words after stop-word removal");
  }
  std::sort(stems.begin(), stems.end());
  stems.erase(std::unique(stems.begin(), stems.end()), stems.end());
  return stems;
}

namespace {

/// Stemmed token set of passage, question, and answers, memoizing stems.
std::unordered_set<std::string> datum_stems(const QADatum& datum,
                                            std::unordered_map<std::string, std::string>& memo) {
  std::unordered_set<std::string> stems;
  auto add = [&](const std::string& text) {
    for (auto& token : tokenize(normalize(text))) {
      auto it = memo.find(token);
      if (it == memo.end()) it = memo.emplace(token, stem(token)).first;
      stems.insert(it->second);
    }
  };
  add(datum.passage);
  add(datum.question);
  for (const auto& answer : datum.answers) add(answer);
  return stems;
}

}  // namespace

bool is_related(const QADatum& datum, const Attribute& attribute, const SelectorConfig& config) {
  const auto wanted = attribute_stems(attribute, config);
  std::unordered_map<std::string, std::string> memo;
  const auto present = datum_stems(datum, memo);
  return std::any_of(wanted.begin(), wanted.end(), [&](const std::string& s) { return present.contains(s); });
}

Selection select_subset(const std::vector<QADatum>& corpus, const DeficiencySpec& spec,
                        const SelectorConfig& config, std::size_t threads) {
  Selection selection;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> targets;
  for (const auto& attribute : spec.attributes) {
    try {
      targets.emplace_back(attribute.id, attribute_stems(attribute, config));
    } catch (const Error&) {
      selection.unusable.push_back(attribute.id);
    }
  }

  std::vector<std::vector<std::size_t>> matched(corpus.size());
  if (!targets.empty()) {
    const std::size_t workers = std::max<std::size_t>(1, threads);
    const std::size_t chunk = (corpus.size() + workers - 1) / std::max<std::size_t>(1, workers);
    parallel_for(workers, workers, [&](std::size_t w) {
      std::unordered_map<std::string, std::string> memo;
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(corpus.size(), begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        const auto present = datum_stems(corpus[i], memo);
        for (const auto& [id, stems] : targets) {
          if (std::any_of(stems.begin(), stems.end(), [&](const std::string& s) { return present.contains(s); })) {
            matched[i].push_back(id);
          }
        }
      }
    });
  }

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (matched[i].empty()) continue;
    selection.kept.push_back(i);
    std::sort(matched[i].begin(), matched[i].end());
    selection.provenance.push_back(std::move(matched[i]));
  }
  return selection;
}

json to_json(const QADatum& datum) {
  return {{"id", datum.id}, {"passage", datum.passage}, {"question", datum.question}, {"answers", datum.answers}};
}

}  // namespace attrprobe
