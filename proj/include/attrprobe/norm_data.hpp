#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace attrprobe {

/// CSLB's five-way attribute taxonomy.
enum class Category : std::uint8_t { Visual, Encyclopedic, Functional, Perceptual, Taxonomic };

inline constexpr std::array<Category, 5> kCategories = {
    Category::Visual, Category::Encyclopedic, Category::Functional, Category::Perceptual,
    Category::Taxonomic};

std::string_view to_string(Category category);

/// Accepts the five canonical names plus the CSLB export spellings
/// ("visual perceptual", "other perceptual", "encyclopaedic").
std::optional<Category> parse_category(std::string_view text);

struct Attribute {
  std::vector<std::string> tokens;
  Category category = Category::Visual;
  std::size_t id = 0;

  std::string name() const;
};

/// Objects x attributes binary membership matrix. Immutable once built.
class NormDataset {
 public:
  NormDataset() = default;

  /// Validates uniqueness, dense ids, and that each attribute has a positive.
  /// `positives` holds (object index, attribute index) pairs.
  NormDataset(std::vector<std::string> objects, std::vector<Attribute> attributes,
              const std::vector<std::pair<std::size_t, std::size_t>>& positives);

  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t n_objects() const { return objects_.size(); }
  std::size_t n_attributes() const { return attributes_.size(); }

  bool has(std::size_t object, std::size_t attribute) const {
    return membership_[attribute * objects_.size() + object] != 0;
  }

  /// Label column for one attribute, indexed by object.
  std::vector<std::uint8_t> labels(std::size_t attribute) const;
  std::size_t positive_count(std::size_t attribute) const;

  /// Sorted (object, attribute) pairs of every true cell.
  std::vector<std::pair<std::size_t, std::size_t>> positives() const;

  std::vector<std::size_t> attributes_in(Category category) const;
  std::optional<std::size_t> find_object(std::string_view name) const;
  std::optional<std::size_t> find_attribute(std::string_view name) const;

  friend bool operator==(const NormDataset& a, const NormDataset& b);

 private:
  std::vector<std::string> objects_;
  std::vector<Attribute> attributes_;
  std::vector<std::uint8_t> membership_;  // attribute-major
  std::unordered_map<std::string, std::size_t> object_index_;
  std::unordered_map<std::string, std::size_t> attribute_index_;
};

struct LoadOptions {
  /// Minimum production frequency for a row to count as a positive cell.
  double min_production_frequency = 2.0;
};

/// Reads object\tattribute\tcategory\tproduction-frequency TSV with a header row.
/// Attributes that end up with no positive object are dropped.
NormDataset load_norms(const std::filesystem::path& path, const LoadOptions& options = {});
NormDataset parse_norms(std::istream& in, std::string_view source, const LoadOptions& options = {});

/// Counts distinct attribute names in a norm file before thresholding.
std::size_t count_raw_attributes(const std::filesystem::path& path);

struct FilterOptions {
  /// Attribute names removed unconditionally (multi-word names, homographs).
  std::vector<std::string> exclusions;
  /// Also drop objects whose name has a token missing from the vocabulary.
  bool strict = false;
};

/// Removes attributes with any token outside `vocab` or listed in the
/// exclusions; re-densifies ids. An empty result is returned with a warning.
NormDataset filter_attributes(const NormDataset& dataset,
                              const std::unordered_set<std::string>& vocab,
                              const FilterOptions& options = {},
                              std::vector<std::string>* warnings = nullptr);

/// One normalized attribute name per line; blank lines and '#' comments skipped.
std::vector<std::string> load_exclusion_list(const std::filesystem::path& path);

/// Canonical dump: objects, attributes with categories, sparse positive cells.
nlohmann::json to_json(const NormDataset& dataset);

}  // namespace attrprobe
