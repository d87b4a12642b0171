#include "attrprobe/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "attrprobe/error.hpp"

namespace attrprobe {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

namespace {

fs::path temp_sibling(const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  return tmp;
}

void write_raw(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = temp_sibling(path);
  write_raw(tmp, content);
  fs::rename(tmp, path);
}

void ArtifactSet::add(fs::path path, std::string content) {
  items_.emplace_back(std::move(path), std::move(content));
}

void ArtifactSet::commit() const {
  std::vector<fs::path> staged;
  try {
    for (const auto& [path, content] : items_) {
      write_raw(temp_sibling(path), content);
      staged.push_back(temp_sibling(path));
    }
  } catch (...) {
    std::error_code ignored;
    for (const auto& tmp : staged) fs::remove(tmp, ignored);
    throw;
  }
  for (const auto& [path, content] : items_) fs::rename(temp_sibling(path), path);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

}  // namespace attrprobe
