#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "attrprobe/kg_store.hpp"
#include "attrprobe/logistic.hpp"
#include "attrprobe/norm_data.hpp"

namespace attrprobe {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

/// 2tp / (2tp + fp + fn); 0 when the denominator is 0.
double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

/// Leave-one-out predictions: row i is predicted by a classifier trained on
/// every other row. A single-class training fold predicts that class.
std::vector<std::uint8_t> loo_predictions(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                          std::span<const std::uint8_t> labels,
                                          const LogisticOptions& options = {});

/// Fit score of one attribute: F1 over the pooled held-out predictions.
/// `features` has one row per object of the dataset.
double loo_fit_score(const NormDataset& dataset, std::size_t attribute,
                     const Eigen::Ref<const Eigen::MatrixXd>& features, const LogisticOptions& options = {});

/// Supplies the n_objects x d feature matrix used for one attribute.
using FeatureProvider = std::function<Eigen::MatrixXd(std::size_t attribute)>;

/// Relation features appended to the base features.
struct KgAugmentation {
  const KgStore* store = nullptr;
  std::uint64_t seed = 0;
  /// Width of each frozen relation embedding.
  std::size_t dim = 10;
  /// Relation embeddings are drawn uniform(-init_range, init_range).
  double init_range = 1.0;
  /// Replace the base features with zeros (KG-only ablation).
  bool zero_base = false;
};

/// Frozen random relation embedding table, one row per global relation id.
Eigen::MatrixXd relation_embedding_table(std::size_t relations, std::size_t dim, double init_range,
                                         std::uint64_t seed);

/// For every (attribute, object) cell, the global relation id sampled from
/// the pair's matches, or -1. Sampling runs serially in attribute-major
/// order so that the draw sequence is independent of thread count.
std::vector<std::vector<long>> sample_pair_relations(const NormDataset& dataset, const KgStore& store,
                                                     std::uint64_t seed);

struct ProbeOptions {
  LogisticOptions logistic;
  std::size_t threads = 1;
};

struct AttributeFit {
  std::size_t id = 0;
  std::string name;
  Category category = Category::Visual;
  double f1 = 0.0;
  std::size_t n_pos = 0;
};

struct FitReport {
  std::vector<AttributeFit> per_attribute;
  std::map<Category, double> medians;  // categories with at least one attribute
  double overall_median = 0.0;
  /// Run metadata written as "# key=value" lines above CSV output.
  std::vector<std::pair<std::string, std::string>> header;

  /// Recomputes the medians from per_attribute.
  void update_medians();
};

/// Median with the mean-of-middle-two convention; 0 for an empty list.
double median(std::vector<double> values);

/// Fit scores for every attribute. With augmentation, each example's
/// features are concat(base, embedding of a sampled matching relation) with a
/// zero block when the pair has no match.
FitReport run_probe(const NormDataset& dataset, const FeatureProvider& features, std::size_t feature_dim,
                    const std::optional<KgAugmentation>& augmentation = std::nullopt,
                    const ProbeOptions& options = {});

enum class DeltaBand { Small, Medium, Large };

std::string_view to_string(DeltaBand band);

struct AttributeDelta {
  std::string name;
  Category category = Category::Visual;
  double before = 0.0;
  double after = 0.0;
  double delta = 0.0;
  DeltaBand band = DeltaBand::Small;
};

struct DeltaThresholds {
  double small = 0.15;  // delta < small
  double large = 0.3;   // delta > large
};

/// Per-attribute f1_b - f1_a. Throws if the attribute sets differ.
std::vector<AttributeDelta> delta_report(const FitReport& a, const FitReport& b,
                                         const DeltaThresholds& thresholds = {});

// Report files.

std::string fit_csv(const FitReport& report);
FitReport parse_fit_csv(const std::string& text, std::string_view source);
FitReport load_fit_csv(const std::filesystem::path& path);

/// Category medians laid out one row per source, in percent.
std::string category_table_csv(const std::vector<std::pair<std::string, FitReport>>& sources);
std::string delta_csv(const std::vector<AttributeDelta>& deltas);
/// Per-source fit scores for swarm plots.
nlohmann::json swarm_json(const std::vector<std::pair<std::string, FitReport>>& sources);

}  // namespace attrprobe
