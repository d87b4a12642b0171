#include "attrprobe/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "attrprobe/error.hpp"
#include "attrprobe/io.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

using nlohmann::json;

std::vector<QuestionAttributeLink> parse_links(const std::string& text, std::string_view source) {
  std::vector<QuestionAttributeLink> links;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize(line).empty()) continue;
    try {
      const json j = json::parse(line);
      QuestionAttributeLink link;
      link.question_id = j.at("question_id").is_string() ? j.at("question_id").get<std::string>()
                                                         : j.at("question_id").dump();
      link.attribute_ids = j.at("attribute_ids").get<std::vector<std::size_t>>();
      if (link.attribute_ids.empty()) {
        throw ParseError(std::string(source), line_no, "question links no attribute");
      }
      if (j.contains("correct") && !j.at("correct").is_null()) link.correct = j.at("correct").get<bool>();
      if (!seen.insert(link.question_id).second) {
        throw ParseError(std::string(source), line_no, "duplicate question id '" + link.question_id + "'");
      }
      links.push_back(std::move(link));
    } catch (const json::exception& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  return links;
}

std::vector<QuestionAttributeLink> load_links(const std::filesystem::path& path) {
  return parse_links(read_file(path), path.string());
}

std::map<std::string, bool> outcomes_from_links(const std::vector<QuestionAttributeLink>& links) {
  std::map<std::string, bool> outcomes;
  for (const auto& link : links) {
    if (link.correct) outcomes[link.question_id] = *link.correct;
  }
  return outcomes;
}

std::map<std::size_t, AttributeAccuracy> per_attribute_accuracy(const std::vector<QuestionAttributeLink>& links,
                                                                const std::map<std::string, bool>& outcomes) {
  std::set<std::string> known;
  for (const auto& link : links) known.insert(link.question_id);
  for (const auto& [id, correct] : outcomes) {
    if (!known.contains(id)) throw Error("outcome for unknown question id '" + id + "'");
  }

  std::map<std::size_t, AttributeAccuracy> result;
  for (const auto& link : links) {
    auto it = outcomes.find(link.question_id);
    if (it == outcomes.end()) throw Error("question '" + link.question_id + "' has no outcome");
    std::set<std::size_t> attributes(link.attribute_ids.begin(), link.attribute_ids.end());
    for (auto a : attributes) {
      auto& acc = result[a];
      ++acc.total;
      if (it->second) ++acc.correct;
    }
  }
  for (auto& [a, acc] : result) acc.accuracy = static_cast<double>(acc.correct) / static_cast<double>(acc.total);
  return result;
}

std::pair<double, double> least_squares(const std::vector<RegressionPoint>& points, bool weighted) {
  double sw = 0, sx = 0, sy = 0;
  for (const auto& p : points) {
    const double w = weighted ? p.weight : 1.0;
    sw += w;
    sx += w * p.x;
    sy += w * p.y;
  }
  if (!(sw > 0)) throw Error("no regression possible: zero total weight");
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0, sxy = 0;
  for (const auto& p : points) {
    const double w = weighted ? p.weight : 1.0;
    sxx += w * (p.x - mx) * (p.x - mx);
    sxy += w * (p.x - mx) * (p.y - my);
  }
  if (!(sxx > 0)) throw Error("no regression possible: x has zero variance");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

RegressionFit bootstrap_linreg(std::vector<RegressionPoint> points, Rng& rng, const BootstrapOptions& options) {
  if (!(options.confidence > 0 && options.confidence < 1)) throw Error("confidence must lie in (0,1)");
  if (options.grid_points < 2) throw Error("grid needs at least 2 points");
  std::sort(points.begin(), points.end(), [](const RegressionPoint& a, const RegressionPoint& b) {
    return std::tie(a.x, a.y, a.weight) < std::tie(b.x, b.y, b.weight);
  });

  RegressionFit fit;
  std::tie(fit.slope, fit.intercept) = least_squares(points, options.weighted);
  if (points.size() < 3) throw Error("bootstrap regression needs at least 3 points");

  const double x_min = points.front().x;
  const double x_max = points.back().x;
  fit.grid.resize(options.grid_points);
  for (std::size_t g = 0; g < options.grid_points; ++g) {
    fit.grid[g] = x_min + (x_max - x_min) * static_cast<double>(g) / static_cast<double>(options.grid_points - 1);
  }

  std::vector<std::vector<double>> predictions(options.grid_points);
  for (auto& column : predictions) column.reserve(options.resamples);
  std::vector<RegressionPoint> sample(points.size());
  for (std::size_t b = 0; b < options.resamples; ++b) {
    std::pair<double, double> line;
    for (;;) {
      for (auto& s : sample) s = points[rng.index(points.size())];
      try {
        line = least_squares(sample, options.weighted);
        break;
      } catch (const Error&) {
        ++fit.redrawn;
      }
    }
    for (std::size_t g = 0; g < options.grid_points; ++g) {
      predictions[g].push_back(line.second + line.first * fit.grid[g]);
    }
  }

  const double tail = 0.5 * (1.0 - options.confidence);
  fit.lower.resize(options.grid_points);
  fit.upper.resize(options.grid_points);
  for (std::size_t g = 0; g < options.grid_points; ++g) {
    fit.lower[g] = percentile(predictions[g], tail);
    fit.upper[g] = percentile(predictions[g], 1.0 - tail);
  }
  return fit;
}

json to_json(const RegressionFit& fit) {
  json band = json::array();
  for (std::size_t g = 0; g < fit.grid.size(); ++g) {
    band.push_back({{"x", fit.grid[g]}, {"lower", fit.lower[g]}, {"upper", fit.upper[g]}});
  }
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"band", band}, {"redrawn", fit.redrawn}};
}

}  // namespace attrprobe
