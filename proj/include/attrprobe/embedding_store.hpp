#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "attrprobe/contextualizer.hpp"

namespace attrprobe {

using Vector = std::vector<double>;

enum class FeatureMode { Static, Contextual };

FeatureMode parse_feature_mode(std::string_view text);

/// concat(v, r) has dimension dim(v) + dim(r).
Vector concat(std::span<const double> head, std::span<const double> tail);

/// Word vectors from a whitespace-separated text file ("word f1 ... fd").
class StaticVectors {
 public:
  static StaticVectors load(const std::filesystem::path& path);
  static StaticVectors parse(std::istream& in, std::string_view source);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view word) const;
  std::optional<Vector> find(std::string_view word) const;
  std::unordered_set<std::string> vocabulary() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

/// Append-only JSONL cache of sentence vectors: {"text": ..., "vector": [...]}.
/// Reads may run concurrently; appends are serialized.
class EmbeddingCache {
 public:
  /// In-memory cache with no backing file.
  EmbeddingCache() = default;
  /// Loads `path` if it exists; later appends go to the same file.
  explicit EmbeddingCache(std::filesystem::path path);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<Vector> find(const std::string& text) const;
  bool contains(const std::string& text) const;
  std::size_t size() const;
  /// Zero when the cache is empty.
  std::size_t dim() const;

  /// Adds entries not yet present and flushes them to the backing file.
  /// Throws if a vector's dimension disagrees with the cache.
  void append(const std::vector<std::string>& texts, const std::vector<Vector>& vectors);

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Vector> entries_;
  std::size_t dim_ = 0;
};

struct ClientOptions {
  std::size_t max_batch = 64;
  std::size_t parallelism = 1;
  int attempts = 3;
  std::chrono::milliseconds backoff{200};
  std::chrono::seconds timeout{120};
};

/// Client for the embedding service: POST /embed {"texts": [...]} returning
/// {"vectors": [[...]...], "dim": d}.
class EmbeddingClient {
 public:
  explicit EmbeddingClient(std::string url, ClientOptions options = {});

  /// One request; throws RemoteError (retriable for non-200 and transport errors).
  std::vector<Vector> request(std::span<const std::string> texts) const;

  /// Splits into batches of at most max_batch, retrying each with
  /// exponential backoff. Output is aligned with input order.
  std::vector<Vector> embed(std::span<const std::string> texts) const;

  bool healthy() const;
  const std::string& url() const { return url_; }
  const ClientOptions& options() const { return options_; }

 private:
  std::string url_;
  std::string host_;
  std::string prefix_;
  ClientOptions options_;
};

/// One feature lookup interface over the three vector sources.
class EmbeddingStore {
 public:
  EmbeddingStore(std::shared_ptr<const StaticVectors> static_vectors,
                 std::shared_ptr<EmbeddingCache> cache,
                 std::shared_ptr<const EmbeddingClient> client,
                 ContextualizerConfig contextualizer = {});

  /// Static: the object's word vector. Contextual: the sentence vector of
  /// contextualize(object, attribute), fetched from the service on a miss.
  Vector pair_vector(std::string_view object, const std::vector<std::string>& attribute,
                     FeatureMode mode) const;

  /// Requests `sentences` from the service, persists them to the cache, and
  /// returns them in input order.
  std::vector<Vector> fetch_remote(const std::vector<std::string>& sentences) const;

  /// Fetches every sentence not already cached. Returns the number fetched.
  std::size_t prefetch(const std::vector<std::string>& sentences) const;

  std::size_t dim(FeatureMode mode) const;
  const ContextualizerConfig& contextualizer() const { return contextualizer_; }
  const StaticVectors* static_vectors() const { return static_.get(); }
  EmbeddingCache* cache() const { return cache_.get(); }

 private:
  std::shared_ptr<const StaticVectors> static_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::shared_ptr<const EmbeddingClient> client_;
  ContextualizerConfig contextualizer_;
};

}  // namespace attrprobe
