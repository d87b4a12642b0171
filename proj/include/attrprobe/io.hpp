#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace attrprobe {

std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Collects a command's artifacts in memory and commits them together, so a
/// failure before commit() leaves nothing on disk.
class ArtifactSet {
 public:
  void add(std::filesystem::path path, std::string content);

  /// Writes every artifact to a temp file first, then renames them all.
  void commit() const;

  const std::vector<std::pair<std::filesystem::path, std::string>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> items_;
};

/// 64-bit FNV-1a, used for config fingerprints in run manifests.
std::string fnv1a_hex(const std::string& data);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace attrprobe
