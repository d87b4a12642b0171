#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attrprobe/rng.hpp"

namespace attrprobe {

/// A downstream question annotated with the attributes it depends on.
struct QuestionAttributeLink {
  std::string question_id;
  std::vector<std::size_t> attribute_ids;
  /// Model outcome when the links file carries it.
  std::optional<bool> correct;
};

/// Reads {question_id, attribute_ids:[...], correct?} lines.
std::vector<QuestionAttributeLink> load_links(const std::filesystem::path& path);
std::vector<QuestionAttributeLink> parse_links(const std::string& text, std::string_view source);

/// question_id -> correct, taken from the links themselves.
std::map<std::string, bool> outcomes_from_links(const std::vector<QuestionAttributeLink>& links);

struct AttributeAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

/// Accuracy over the questions linked to each attribute. Attributes with no
/// linked question are absent. Throws if a linked question has no outcome
/// or an outcome names an unknown question.
std::map<std::size_t, AttributeAccuracy> per_attribute_accuracy(const std::vector<QuestionAttributeLink>& links,
                                                                const std::map<std::string, bool>& outcomes);

struct RegressionPoint {
  double x = 0.0;
  double y = 0.0;
  double weight = 1.0;
};

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double confidence = 0.90;
  std::size_t grid_points = 101;
  /// Weighted least squares using RegressionPoint::weight.
  bool weighted = false;
};

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Prediction band: percentiles of the resampled lines at each grid x.
  std::vector<double> grid;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Resamples redrawn because all their x values coincided.
  std::size_t redrawn = 0;
};

/// Least-squares line (optionally weighted). Throws when x has no variance.
std::pair<double, double> least_squares(const std::vector<RegressionPoint>& points, bool weighted);

/// OLS on the full data plus a percentile bootstrap band. Points are put in a
/// canonical order before resampling, so the result ignores input order.
RegressionFit bootstrap_linreg(std::vector<RegressionPoint> points, Rng& rng, const BootstrapOptions& options = {});

/// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

nlohmann::json to_json(const RegressionFit& fit);

}  // namespace attrprobe
