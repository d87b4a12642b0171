#include "attrprobe/probe.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "attrprobe/error.hpp"
#include "attrprobe/io.hpp"
#include "attrprobe/parallel.hpp"
#include "attrprobe/rng.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

Confusion confusion(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) throw Error("predictions and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool y = labels[i] != 0;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  const Confusion c = confusion(predictions, labels);
  const std::size_t denominator = 2 * c.tp + c.fp + c.fn;
  if (denominator == 0) return 0.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denominator);
}

std::vector<std::uint8_t> loo_predictions(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                          std::span<const std::uint8_t> labels, const LogisticOptions& options) {
  const Eigen::Index n = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw Error("feature rows and label count differ");
  if (n < 2) throw Error("leave-one-out needs at least two objects");

  std::vector<std::uint8_t> predictions(labels.size(), 0);
  Eigen::MatrixXd fold(n - 1, features.cols());
  std::vector<std::uint8_t> fold_labels(labels.size() - 1);
  for (Eigen::Index held = 0; held < n; ++held) {
    for (Eigen::Index i = 0, r = 0; i < n; ++i) {
      if (i == held) continue;
      fold.row(r) = features.row(i);
      fold_labels[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(i)];
      ++r;
    }
    const TrainResult trained = train_logistic(fold, fold_labels, options);
    predictions[static_cast<std::size_t>(held)] = trained.model.predict(features.row(held).transpose()) ? 1 : 0;
  }
  return predictions;
}

double loo_fit_score(const NormDataset& dataset, std::size_t attribute,
                     const Eigen::Ref<const Eigen::MatrixXd>& features, const LogisticOptions& options) {
  if (attribute >= dataset.n_attributes()) throw Error("attribute id out of range");
  if (features.rows() != static_cast<Eigen::Index>(dataset.n_objects())) {
    throw Error("feature matrix needs one row per object");
  }
  const auto labels = dataset.labels(attribute);
  return f1_score(loo_predictions(features, labels, options), labels);
}

Eigen::MatrixXd relation_embedding_table(std::size_t relations, std::size_t dim, double init_range,
                                         std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd table(static_cast<Eigen::Index>(relations), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) table(r, c) = rng.uniform(-init_range, init_range);
  }
  return table;
}

std::vector<std::vector<long>> sample_pair_relations(const NormDataset& dataset, const KgStore& store,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<long>> sampled(dataset.n_attributes(), std::vector<long>(dataset.n_objects(), -1));
  for (const auto& attribute : dataset.attributes()) {
    for (std::size_t o = 0; o < dataset.n_objects(); ++o) {
      auto matches = store.query_pair(dataset.objects()[o], attribute.tokens);
      if (auto chosen = sample_relation(matches, rng)) {
        sampled[attribute.id][o] = static_cast<long>(chosen->relation_id);
      }
    }
  }
  return sampled;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

void FitReport::update_medians() {
  medians.clear();
  std::map<Category, std::vector<double>> by_category;
  std::vector<double> all;
  for (const auto& fit : per_attribute) {
    by_category[fit.category].push_back(fit.f1);
    all.push_back(fit.f1);
  }
  for (auto& [category, values] : by_category) medians[category] = median(std::move(values));
  overall_median = median(std::move(all));
}

FitReport run_probe(const NormDataset& dataset, const FeatureProvider& features, std::size_t feature_dim,
                    const std::optional<KgAugmentation>& augmentation, const ProbeOptions& options) {
  Eigen::MatrixXd relation_table;
  std::vector<std::vector<long>> sampled;
  FitReport report;
  if (augmentation) {
    if (!augmentation->store) throw Error("knowledge-graph augmentation needs a loaded store");
    relation_table = relation_embedding_table(augmentation->store->relations().size(), augmentation->dim,
                                              augmentation->init_range,
                                              derive_seed(augmentation->seed, "relation-embeddings"));
    sampled = sample_pair_relations(dataset, *augmentation->store, derive_seed(augmentation->seed, "pair-sampling"));
    report.header = {{"kg_seed", std::to_string(augmentation->seed)},
                     {"relation_dim", std::to_string(augmentation->dim)},
                     {"relation_init", "uniform(-" + format_double(augmentation->init_range) + "," +
                                           format_double(augmentation->init_range) + ")"},
                     {"kg_only", augmentation->zero_base ? "true" : "false"}};
  }

  const auto n = static_cast<Eigen::Index>(dataset.n_objects());
  const auto base_dim = static_cast<Eigen::Index>(feature_dim);
  const Eigen::Index extra = augmentation ? static_cast<Eigen::Index>(augmentation->dim) : 0;
  report.per_attribute.resize(dataset.n_attributes());

  parallel_for(dataset.n_attributes(), options.threads, [&](std::size_t a) {
    Eigen::MatrixXd base = features(a);
    if (base.rows() != n || base.cols() != base_dim) {
      throw Error("feature provider returned a " + std::to_string(base.rows()) + "x" + std::to_string(base.cols()) +
                  " matrix for attribute '" + dataset.attributes()[a].name() + "'");
    }
    Eigen::MatrixXd x(n, base_dim + extra);
    if (augmentation && augmentation->zero_base) {
      x.leftCols(base_dim).setZero();
    } else {
      x.leftCols(base_dim) = base;
    }
    if (augmentation) {
      for (Eigen::Index o = 0; o < n; ++o) {
        const long relation = sampled[a][static_cast<std::size_t>(o)];
        if (relation >= 0) {
          x.row(o).tail(extra) = relation_table.row(relation);
        } else {
          x.row(o).tail(extra).setZero();
        }
      }
    }
    const auto& attribute = dataset.attributes()[a];
    const auto labels = dataset.labels(a);
    report.per_attribute[a] = AttributeFit{attribute.id, attribute.name(), attribute.category,
                                           f1_score(loo_predictions(x, labels, options.logistic), labels),
                                           dataset.positive_count(a)};
  });
  report.update_medians();
  return report;
}

std::string_view to_string(DeltaBand band) {
  switch (band) {
    case DeltaBand::Small: return "small";
    case DeltaBand::Medium: return "medium";
    case DeltaBand::Large: return "large";
  }
  return "small";
}

std::vector<AttributeDelta> delta_report(const FitReport& a, const FitReport& b, const DeltaThresholds& thresholds) {
  if (!(thresholds.small <= thresholds.large)) throw Error("small-band threshold exceeds large-band threshold");
  std::map<std::string, const AttributeFit*> after;
  for (const auto& fit : b.per_attribute) after[fit.name] = &fit;
  if (after.size() != a.per_attribute.size()) throw Error("reports cover different attribute sets");

  std::vector<AttributeDelta> deltas;
  for (const auto& fit : a.per_attribute) {
    auto it = after.find(fit.name);
    if (it == after.end()) throw Error("attribute '" + fit.name + "' missing from second report");
    AttributeDelta d{fit.name, fit.category, fit.f1, it->second->f1, it->second->f1 - fit.f1, DeltaBand::Medium};
    if (d.delta < thresholds.small) d.band = DeltaBand::Small;
    else if (d.delta > thresholds.large) d.band = DeltaBand::Large;
    deltas.push_back(std::move(d));
  }
  return deltas;
}

namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

std::string signed_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", 100.0 * fraction);
  return buf;
}

}  // namespace

std::string fit_csv(const FitReport& report) {
  std::ostringstream out;
  for (const auto& [key, value] : report.header) out << "# " << key << '=' << value << '\n';
  out << "attribute,category,f1,n_pos\n";
  for (const auto& fit : report.per_attribute) {
    out << csv_field(fit.name) << ',' << to_string(fit.category) << ',' << format_double(fit.f1) << ','
        << fit.n_pos << '\n';
  }
  return out.str();
}

FitReport parse_fit_csv(const std::string& text, std::string_view source) {
  FitReport report;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.starts_with('#')) {
      auto eq = line.find('=');
      if (eq != std::string::npos) {
        report.header.emplace_back(normalize(line.substr(1, eq - 1)), line.substr(eq + 1));
      }
      continue;
    }
    auto fields = parse_csv_line(line);
    if (!header_seen) {
      if (fields.size() < 4 || fields[0] != "attribute" || fields[1] != "category" || fields[2] != "f1" ||
          fields[3] != "n_pos") {
        throw ParseError(std::string(source), line_no, "expected header attribute,category,f1,n_pos");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) throw ParseError(std::string(source), line_no, "expected 4 fields");
    AttributeFit fit;
    fit.id = report.per_attribute.size();
    fit.name = join(split_words(normalize(fields[0])));
    auto category = parse_category(fields[1]);
    if (!category) throw ParseError(std::string(source), line_no, "unknown category '" + fields[1] + "'");
    fit.category = *category;
    try {
      std::size_t used = 0;
      fit.f1 = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
      fit.n_pos = std::stoul(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(std::string(source), line_no, "non-numeric f1 or n_pos");
    }
    if (!(fit.f1 >= 0.0 && fit.f1 <= 1.0)) throw ParseError(std::string(source), line_no, "f1 outside [0,1]");
    report.per_attribute.push_back(std::move(fit));
  }
  if (!header_seen) throw Error(std::string(source) + ": empty fit report");
  report.update_medians();
  return report;
}

FitReport load_fit_csv(const std::filesystem::path& path) { return parse_fit_csv(read_file(path), path.string()); }

std::string category_table_csv(const std::vector<std::pair<std::string, FitReport>>& sources) {
  std::ostringstream out;
  out << "metric";
  for (auto c : kCategories) out << ',' << to_string(c);
  out << ",overall\n";
  auto cell = [](const FitReport& r, Category c) -> std::optional<double> {
    auto it = r.medians.find(c);
    if (it == r.medians.end()) return std::nullopt;
    return it->second;
  };
  for (const auto& [name, report] : sources) {
    out << "median_" << name;
    for (auto c : kCategories) {
      auto v = cell(report, c);
      out << ',' << (v ? percent(*v) : "NA");
    }
    out << ',' << percent(report.overall_median) << '\n';
  }
  if (sources.size() == 2) {
    const auto& a = sources[0].second;
    const auto& b = sources[1].second;
    out << "delta";
    for (auto c : kCategories) {
      auto va = cell(a, c);
      auto vb = cell(b, c);
      out << ',' << (va && vb ? signed_percent(*vb - *va) : "NA");
    }
    out << ',' << signed_percent(b.overall_median - a.overall_median) << '\n';
  }
  return out.str();
}

std::string delta_csv(const std::vector<AttributeDelta>& deltas) {
  std::ostringstream out;
  out << "attribute,category,before,after,delta,band\n";
  for (const auto& d : deltas) {
    out << csv_field(d.name) << ',' << to_string(d.category) << ',' << format_double(d.before) << ','
        << format_double(d.after) << ',' << format_double(d.delta) << ',' << to_string(d.band) << '\n';
  }
  return out.str();
}

nlohmann::json swarm_json(const std::vector<std::pair<std::string, FitReport>>& sources) {
  nlohmann::json out = {{"sources", nlohmann::json::array()}};
  for (const auto& [name, report] : sources) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& fit : report.per_attribute) {
      points.push_back({{"attribute", fit.name}, {"category", std::string(to_string(fit.category))}, {"x", fit.f1}});
    }
    out["sources"].push_back({{"name", name}, {"median", report.overall_median}, {"points", points}});
  }
  return out;
}

}  // namespace attrprobe
