#include "attrprobe/norm_data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>

#include "attrprobe/error.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Visual: return "visual";
    case Category::Encyclopedic: return "encyclopedic";
    case Category::Functional: return "functional";
    case Category::Perceptual: return "perceptual";
    case Category::Taxonomic: return "taxonomic";
  }
  return "visual";
}

std::optional<Category> parse_category(std::string_view text) {
  const std::string key = join(split_words(normalize(text)), " ");
  static const std::map<std::string, Category, std::less<>> names = {
      {"visual", Category::Visual},
      {"visual perceptual", Category::Visual},
      {"encyclopedic", Category::Encyclopedic},
      {"encyclopaedic", Category::Encyclopedic},
      {"functional", Category::Functional},
      {"perceptual", Category::Perceptual},
      {"other perceptual", Category::Perceptual},
      {"taxonomic", Category::Taxonomic},
  };
  auto it = names.find(key);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

std::string Attribute::name() const { return join(tokens, " "); }

NormDataset::NormDataset(std::vector<std::string> objects, std::vector<Attribute> attributes,
                         const std::vector<std::pair<std::size_t, std::size_t>>& positives)
    : objects_(std::move(objects)), attributes_(std::move(attributes)) {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].empty()) throw Error("empty object name");
    if (!object_index_.emplace(objects_[i], i).second) {
      throw Error("duplicate object name '" + objects_[i] + "'");
    }
  }
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    if (attributes_[a].tokens.empty()) throw Error("empty attribute name");
    if (attributes_[a].id != a) throw Error("attribute ids must be dense");
    if (!attribute_index_.emplace(attributes_[a].name(), a).second) {
      throw Error("duplicate attribute name '" + attributes_[a].name() + "'");
    }
  }
  membership_.assign(objects_.size() * attributes_.size(), 0);
  for (auto [o, a] : positives) {
    if (o >= objects_.size() || a >= attributes_.size()) throw Error("positive cell out of range");
    membership_[a * objects_.size() + o] = 1;
  }
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    if (positive_count(a) == 0) {
      throw Error("attribute '" + attributes_[a].name() + "' has no positive object");
    }
  }
}

std::vector<std::uint8_t> NormDataset::labels(std::size_t attribute) const {
  auto begin = membership_.begin() + static_cast<std::ptrdiff_t>(attribute * objects_.size());
  return {begin, begin + static_cast<std::ptrdiff_t>(objects_.size())};
}

std::size_t NormDataset::positive_count(std::size_t attribute) const {
  std::size_t count = 0;
  for (std::size_t o = 0; o < objects_.size(); ++o) count += has(o, attribute);
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> NormDataset::positives() const {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t o = 0; o < objects_.size(); ++o) {
    for (std::size_t a = 0; a < attributes_.size(); ++a) {
      if (has(o, a)) cells.emplace_back(o, a);
    }
  }
  return cells;
}

std::vector<std::size_t> NormDataset::attributes_in(Category category) const {
  std::vector<std::size_t> ids;
  for (const auto& attribute : attributes_) {
    if (attribute.category == category) ids.push_back(attribute.id);
  }
  return ids;
}

std::optional<std::size_t> NormDataset::find_object(std::string_view name) const {
  auto it = object_index_.find(std::string(name));
  if (it == object_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> NormDataset::find_attribute(std::string_view name) const {
  auto it = attribute_index_.find(std::string(name));
  if (it == attribute_index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const NormDataset& a, const NormDataset& b) {
  if (a.objects_ != b.objects_ || a.attributes_.size() != b.attributes_.size()) return false;
  for (std::size_t i = 0; i < a.attributes_.size(); ++i) {
    const auto& x = a.attributes_[i];
    const auto& y = b.attributes_[i];
    if (x.tokens != y.tokens || x.category != y.category || x.id != y.id) return false;
  }
  return a.membership_ == b.membership_;
}

namespace {

std::string normalize_attribute(std::string_view raw) {
  return join(split_words(normalize(raw)), " ");
}

double parse_frequency(std::string_view field, std::string_view source, std::size_t line) {
  std::string trimmed = normalize(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
    throw ParseError(std::string(source), line, "production frequency is not a number: '" + trimmed + "'");
  }
  return value;
}

}  // namespace

NormDataset parse_norms(std::istream& in, std::string_view source, const LoadOptions& options) {
  std::vector<std::string> objects;
  std::unordered_map<std::string, std::size_t> object_ids;
  std::vector<Attribute> attributes;
  std::unordered_map<std::string, std::size_t> attribute_ids;
  std::vector<std::pair<std::size_t, std::size_t>> positives;

  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (line.empty()) continue;
      if (split_tabs(line).size() != 4) {
        throw ParseError(std::string(source), line_no, "header must have 4 tab-separated columns");
      }
      header_seen = true;
      continue;
    }
    if (normalize(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ParseError(std::string(source), line_no,
                       "expected 4 tab-separated fields, found " + std::to_string(fields.size()));
    }
    const std::string object = normalize(fields[0]);
    const std::string attribute = normalize_attribute(fields[1]);
    if (object.empty() || attribute.empty()) {
      throw ParseError(std::string(source), line_no, "empty object or attribute");
    }
    auto category = parse_category(fields[2]);
    if (!category) {
      throw ParseError(std::string(source), line_no,
                       "unknown category '" + std::string(fields[2]) + "'");
    }
    const double frequency = parse_frequency(fields[3], source, line_no);
    ++rows;

    auto [obj_it, new_object] = object_ids.emplace(object, objects.size());
    if (new_object) objects.push_back(object);
    auto [attr_it, new_attribute] = attribute_ids.emplace(attribute, attributes.size());
    if (new_attribute) {
      attributes.push_back(Attribute{split_words(attribute), *category, attributes.size()});
    } else if (attributes[attr_it->second].category != *category) {
      throw ParseError(std::string(source), line_no,
                       "attribute '" + attribute + "' listed under two categories");
    }
    if (frequency >= options.min_production_frequency) {
      positives.emplace_back(obj_it->second, attr_it->second);
    }
  }
  if (rows == 0) throw Error(std::string(source) + ": empty norm file");

  // Drop attributes that never reach the frequency threshold, then re-densify.
  std::vector<std::size_t> has_positive(attributes.size(), 0);
  for (auto [o, a] : positives) has_positive[a] = 1;
  std::vector<std::size_t> remap(attributes.size(), SIZE_MAX);
  std::vector<Attribute> kept;
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    if (!has_positive[a]) continue;
    remap[a] = kept.size();
    kept.push_back(attributes[a]);
    kept.back().id = remap[a];
  }
  for (auto& cell : positives) cell.second = remap[cell.second];
  return NormDataset(std::move(objects), std::move(kept), positives);
}

NormDataset load_norms(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open norm file " + path.string());
  return parse_norms(in, path.string(), options);
}

std::size_t count_raw_attributes(const std::filesystem::path& path) {
  // Thresholding at -inf keeps every listed attribute.
  LoadOptions all;
  all.min_production_frequency = -1e300;
  return load_norms(path, all).n_attributes();
}

NormDataset filter_attributes(const NormDataset& dataset,
                              const std::unordered_set<std::string>& vocab,
                              const FilterOptions& options, std::vector<std::string>* warnings) {
  std::unordered_set<std::string> excluded;
  for (const auto& name : options.exclusions) excluded.insert(normalize_attribute(name));

  std::vector<std::size_t> object_keep;
  for (std::size_t o = 0; o < dataset.n_objects(); ++o) {
    bool ok = true;
    if (options.strict) {
      for (const auto& token : split_words(dataset.objects()[o])) ok = ok && vocab.contains(token);
    }
    if (ok) object_keep.push_back(o);
  }

  std::vector<std::size_t> attribute_keep;
  for (const auto& attribute : dataset.attributes()) {
    if (excluded.contains(attribute.name())) continue;
    bool in_vocab = std::all_of(attribute.tokens.begin(), attribute.tokens.end(),
                                [&](const std::string& t) { return vocab.contains(t); });
    if (!in_vocab) continue;
    bool any_positive = false;
    for (auto o : object_keep) any_positive = any_positive || dataset.has(o, attribute.id);
    if (!any_positive) continue;
    attribute_keep.push_back(attribute.id);
  }

  std::vector<std::string> objects;
  for (auto o : object_keep) objects.push_back(dataset.objects()[o]);
  std::vector<Attribute> attributes;
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  for (std::size_t a = 0; a < attribute_keep.size(); ++a) {
    Attribute attribute = dataset.attributes()[attribute_keep[a]];
    attribute.id = a;
    attributes.push_back(std::move(attribute));
    for (std::size_t o = 0; o < object_keep.size(); ++o) {
      if (dataset.has(object_keep[o], attribute_keep[a])) positives.emplace_back(o, a);
    }
  }
  if (attributes.empty() && warnings) {
    warnings->push_back("attribute filter removed every attribute");
  }
  return NormDataset(std::move(objects), std::move(attributes), positives);
}

std::vector<std::string> load_exclusion_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open exclusion list " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::string name = normalize_attribute(line);
    if (name.empty() || name.starts_with('#')) continue;
    names.push_back(std::move(name));
  }
  return names;
}

nlohmann::json to_json(const NormDataset& dataset) {
  nlohmann::json attributes = nlohmann::json::array();
  for (const auto& attribute : dataset.attributes()) {
    attributes.push_back({{"id", attribute.id},
                          {"name", attribute.name()},
                          {"category", std::string(to_string(attribute.category))}});
  }
  nlohmann::json positives = nlohmann::json::array();
  for (auto [o, a] : dataset.positives()) positives.push_back({o, a});
  return {{"objects", dataset.objects()}, {"attributes", attributes}, {"positives", positives}};
}

}  // namespace attrprobe
