#include "attrprobe/embedding_store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "attrprobe/error.hpp"
#include "attrprobe/parallel.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

using nlohmann::json;

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "static") return FeatureMode::Static;
  if (text == "contextual") return FeatureMode::Contextual;
  throw ConfigError("unknown feature mode '" + std::string(text) + "' (expected static|contextual)");
}

Vector concat(std::span<const double> head, std::span<const double> tail) {
  Vector out;
  out.reserve(head.size() + tail.size());
  out.insert(out.end(), head.begin(), head.end());
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

// ---------------------------------------------------------------------------
// StaticVectors

StaticVectors StaticVectors::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vector file " + path.string());
  return parse(in, path.string());
}

StaticVectors StaticVectors::parse(std::istream& in, std::string_view source) {
  StaticVectors store;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view rest(line);
    auto skip_spaces = [&] {
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
    };
    skip_spaces();
    if (rest.empty()) continue;
    auto word_end = rest.find_first_of(" \t");
    std::string word = normalize(rest.substr(0, word_end));
    rest = word_end == std::string_view::npos ? std::string_view{} : rest.substr(word_end);

    row.clear();
    skip_spaces();
    while (!rest.empty()) {
      float value = 0.0f;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
      const bool delimited = ptr == rest.data() + rest.size() || *ptr == ' ' || *ptr == '\t';
      if (ec != std::errc() || !delimited) {
        auto end = rest.find_first_of(" \t");
        throw ParseError(std::string(source), line_no,
                         "non-numeric field '" + std::string(rest.substr(0, end)) + "'");
      }
      if (!std::isfinite(value)) {
        throw ParseError(std::string(source), line_no, "non-finite value in vector");
      }
      row.push_back(value);
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
      skip_spaces();
    }
    if (store.dim_ == 0) {
      if (row.empty()) throw ParseError(std::string(source), line_no, "vector has no components");
      store.dim_ = row.size();
    } else if (row.size() != store.dim_) {
      throw ParseError(std::string(source), line_no,
                       "dimension mismatch: expected " + std::to_string(store.dim_) + ", found " +
                           std::to_string(row.size()));
    }

    auto [it, inserted] = store.index_.emplace(word, store.words_.size());
    if (inserted) {
      store.words_.push_back(word);
      store.data_.insert(store.data_.end(), row.begin(), row.end());
    } else {
      store.warnings_.push_back(std::string(source) + ":" + std::to_string(line_no) +
                                ": duplicate word '" + word + "', keeping the later vector");
      std::copy(row.begin(), row.end(), store.data_.begin() + static_cast<std::ptrdiff_t>(it->second * store.dim_));
    }
  }
  return store;
}

bool StaticVectors::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

std::optional<Vector> StaticVectors::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  auto begin = data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_);
  return Vector(begin, begin + static_cast<std::ptrdiff_t>(dim_));
}

std::unordered_set<std::string> StaticVectors::vocabulary() const {
  return {words_.begin(), words_.end()};
}

// ---------------------------------------------------------------------------
// EmbeddingCache

namespace {

Vector vector_from_json(const json& j, std::size_t expected_dim, const std::string& context) {
  if (!j.is_array()) throw Error(context + ": vector must be a JSON array");
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(context + ": vector component is not a number");
    const double value = x.get<double>();
    if (!std::isfinite(value)) throw Error(context + ": non-finite vector component");
    v.push_back(value);
  }
  if (v.empty()) throw Error(context + ": empty vector");
  if (expected_dim != 0 && v.size() != expected_dim) {
    throw Error(context + ": dimension " + std::to_string(v.size()) + " disagrees with " +
                std::to_string(expected_dim));
  }
  return v;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path_->string(), line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.contains("text") || !record.contains("vector")) {
      throw ParseError(path_->string(), line_no, "cache record needs \"text\" and \"vector\"");
    }
    Vector v;
    try {
      v = vector_from_json(record.at("vector"), dim_, "cache record");
    } catch (const Error& e) {
      throw ParseError(path_->string(), line_no, e.what());
    }
    dim_ = v.size();
    entries_.emplace(record.at("text").get<std::string>(), std::move(v));
  }
}

std::optional<Vector> EmbeddingCache::find(const std::string& text) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(text);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingCache::contains(const std::string& text) const {
  std::shared_lock lock(mutex_);
  return entries_.contains(text);
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t EmbeddingCache::dim() const {
  std::shared_lock lock(mutex_);
  return dim_;
}

void EmbeddingCache::append(const std::vector<std::string>& texts,
                            const std::vector<Vector>& vectors) {
  if (texts.size() != vectors.size()) throw Error("cache append: texts and vectors differ in length");
  std::unique_lock lock(mutex_);
  std::size_t dim = dim_;
  for (const auto& v : vectors) {
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw Error("embedding dimension " + std::to_string(v.size()) +
                  " disagrees with cached dimension " + std::to_string(dim));
    }
  }

  std::string lines;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (entries_.contains(texts[i])) continue;
    lines += json{{"text", texts[i]}, {"vector", vectors[i]}}.dump();
    lines += '\n';
    entries_.emplace(texts[i], vectors[i]);
  }
  dim_ = dim;
  if (path_ && !lines.empty()) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    out << lines;
    out.flush();
    if (!out) throw Error("cannot append to embedding cache " + path_->string());
  }
}

// ---------------------------------------------------------------------------
// EmbeddingClient

EmbeddingClient::EmbeddingClient(std::string url, ClientOptions options)
    : url_(std::move(url)), options_(options) {
  if (options_.max_batch == 0) throw ConfigError("embedding batch size must be positive");
  auto scheme = url_.find("://");
  if (scheme == std::string::npos) throw ConfigError("embedding URL needs a scheme: " + url_);
  auto path_start = url_.find('/', scheme + 3);
  host_ = url_.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : url_.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

std::vector<Vector> EmbeddingClient::request(std::span<const std::string> texts) const {
  httplib::Client http(host_);
  http.set_connection_timeout(options_.timeout);
  http.set_read_timeout(options_.timeout);
  http.set_write_timeout(options_.timeout);

  const std::string body = json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}}.dump();
  auto response = http.Post(prefix_ + "/embed", body, "application/json");
  if (!response) {
    throw RemoteError("embedding service unreachable at " + url_ + ": " +
                          httplib::to_string(response.error()),
                      true);
  }
  if (response->status != 200) {
    throw RemoteError("embedding service returned HTTP " + std::to_string(response->status), true);
  }

  json payload;
  try {
    payload = json::parse(response->body);
  } catch (const json::parse_error& e) {
    throw RemoteError(std::string("malformed embedding response: ") + e.what(), false);
  }
  if (!payload.contains("vectors") || !payload.contains("dim")) {
    throw RemoteError("embedding response lacks \"vectors\" or \"dim\"", false);
  }
  const auto dim = payload.at("dim").get<std::size_t>();
  const auto& rows = payload.at("vectors");
  if (!rows.is_array() || rows.size() != texts.size()) {
    throw RemoteError("embedding response has " + std::to_string(rows.size()) + " vectors for " +
                          std::to_string(texts.size()) + " texts",
                      false);
  }
  std::vector<Vector> vectors;
  vectors.reserve(rows.size());
  try {
    for (const auto& row : rows) vectors.push_back(vector_from_json(row, dim, "embedding response"));
  } catch (const Error& e) {
    throw RemoteError(e.what(), false);
  }
  return vectors;
}

std::vector<Vector> EmbeddingClient::embed(std::span<const std::string> texts) const {
  const std::size_t batch = options_.max_batch;
  const std::size_t n_batches = (texts.size() + batch - 1) / batch;
  std::vector<std::vector<Vector>> results(n_batches);

  parallel_for(n_batches, options_.parallelism, [&](std::size_t b) {
    auto chunk = texts.subspan(b * batch, std::min(batch, texts.size() - b * batch));
    auto delay = options_.backoff;
    for (int attempt = 1;; ++attempt) {
      try {
        results[b] = request(chunk);
        return;
      } catch (const RemoteError& e) {
        if (!e.retriable() || attempt >= options_.attempts) {
          throw RemoteError(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempts)",
                            false);
        }
      }
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  });

  std::vector<Vector> vectors;
  vectors.reserve(texts.size());
  for (auto& chunk : results) {
    for (auto& v : chunk) vectors.push_back(std::move(v));
  }
  return vectors;
}

bool EmbeddingClient::healthy() const {
  httplib::Client http(host_);
  http.set_connection_timeout(std::chrono::seconds(5));
  auto response = http.Get(prefix_ + "/health");
  return response && response->status == 200;
}

// ---------------------------------------------------------------------------
// EmbeddingStore

EmbeddingStore::EmbeddingStore(std::shared_ptr<const StaticVectors> static_vectors,
                               std::shared_ptr<EmbeddingCache> cache,
                               std::shared_ptr<const EmbeddingClient> client,
                               ContextualizerConfig contextualizer)
    : static_(std::move(static_vectors)),
      cache_(std::move(cache)),
      client_(std::move(client)),
      contextualizer_(std::move(contextualizer)) {
  if (client_ && !cache_) cache_ = std::make_shared<EmbeddingCache>();
}

Vector EmbeddingStore::pair_vector(std::string_view object, const std::vector<std::string>& attribute,
                                   FeatureMode mode) const {
  if (mode == FeatureMode::Static) {
    if (!static_) throw Error("static mode requires a static vector file");
    auto v = static_->find(object);
    if (!v) throw Error("no static vector for object '" + std::string(object) + "'");
    return *v;
  }

  const std::string sentence = contextualize(object, attribute, contextualizer_);
  if (cache_) {
    if (auto v = cache_->find(sentence)) return *v;
  }
  if (!client_) throw Error("no contextual vector for '" + sentence + "' and no embedding service configured");
  return fetch_remote({sentence}).front();
}

std::vector<Vector> EmbeddingStore::fetch_remote(const std::vector<std::string>& sentences) const {
  if (!client_) throw ConfigError("no embedding service configured");
  auto vectors = client_->embed(sentences);
  if (cache_->dim() != 0 && !vectors.empty() && vectors.front().size() != cache_->dim()) {
    throw Error("service dimension " + std::to_string(vectors.front().size()) +
                " disagrees with cache dimension " + std::to_string(cache_->dim()));
  }
  cache_->append(sentences, vectors);
  return vectors;
}

std::size_t EmbeddingStore::prefetch(const std::vector<std::string>& sentences) const {
  std::vector<std::string> missing;
  std::unordered_set<std::string> seen;
  for (const auto& s : sentences) {
    if ((cache_ && cache_->contains(s)) || !seen.insert(s).second) continue;
    missing.push_back(s);
  }
  if (missing.empty()) return 0;
  if (!client_) {
    throw Error(std::to_string(missing.size()) + " contextual vectors missing (first: '" + missing.front() +
                "') and no embedding service configured");
  }
  fetch_remote(missing);
  return missing.size();
}

std::size_t EmbeddingStore::dim(FeatureMode mode) const {
  if (mode == FeatureMode::Static) return static_ ? static_->dim() : 0;
  return cache_ ? cache_->dim() : 0;
}

}  // namespace attrprobe
