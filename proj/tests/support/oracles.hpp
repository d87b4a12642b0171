#pragma once

// Independent reference implementations and fixture builders shared by the
// unit tests and the acceptance suite.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "attrprobe/kg_store.hpp"
#include "attrprobe/logistic.hpp"
#include "attrprobe/norm_data.hpp"
#include "attrprobe/rng.hpp"

namespace oracle {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("attrprobe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Leave-one-out F1 computed the slow, obvious way.
inline double naive_loo_f1(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& y,
                           const attrprobe::LogisticOptions& options = {}) {
  const long n = X.rows();
  long tp = 0, fp = 0, fn = 0;
  for (long held = 0; held < n; ++held) {
    Eigen::MatrixXd train(n - 1, X.cols());
    std::vector<std::uint8_t> labels;
    long r = 0;
    for (long i = 0; i < n; ++i) {
      if (i == held) continue;
      for (long c = 0; c < X.cols(); ++c) train(r, c) = X(i, c);
      labels.push_back(y[static_cast<std::size_t>(i)]);
      ++r;
    }
    int positives = 0;
    for (auto l : labels) positives += l;
    bool predicted;
    if (positives == 0) {
      predicted = false;
    } else if (positives == static_cast<int>(labels.size())) {
      predicted = true;
    } else {
      const auto fit = attrprobe::train_logistic(train, labels, options);
      double z = fit.model.bias;
      for (long c = 0; c < X.cols(); ++c) z += fit.model.weights[c] * X(held, c);
      predicted = z >= 0.0;
    }
    const bool actual = y[static_cast<std::size_t>(held)] != 0;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && actual) ++fn;
  }
  if (2 * tp + fp + fn == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline std::string joined(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Every (position, triple) where the start node sits at the position and all
// end-node words occur somewhere in the prompt.
inline std::vector<std::vector<attrprobe::RelationMatch>> brute_force_prompt(const attrprobe::KgStore& store,
                                                                             const std::vector<std::string>& prompt) {
  std::vector<std::vector<attrprobe::RelationMatch>> out(prompt.size());
  const auto& triples = store.triples();
  for (std::size_t t = 0; t < triples.size(); ++t) {
    for (std::size_t p = 0; p < prompt.size(); ++p) {
      for (std::size_t q = p; q <= prompt.size(); ++q) {
        std::vector<std::string> span(prompt.begin() + static_cast<long>(p), prompt.begin() + static_cast<long>(q));
        if (span != triples[t].start) continue;
        bool all = true;
        for (const auto& w : triples[t].end) {
          bool found = false;
          for (const auto& u : prompt) found = found || u == w;
          all = all && found;
        }
        if (all) out[p].push_back({p, triples[t].relation_id, triples[t].kb, t, attrprobe::Direction::Forward});
      }
    }
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

inline std::vector<attrprobe::RelationMatch> brute_force_pair(const attrprobe::KgStore& store, const std::string& object,
                                                              const std::vector<std::string>& attribute,
                                                              const std::set<std::string>& stop) {
  std::vector<attrprobe::RelationMatch> out;
  const auto& triples = store.triples();
  auto covered = [&](const std::vector<std::string>& node) {
    bool any_content = false;
    for (const auto& a : attribute) any_content = any_content || !stop.count(a);
    if (!any_content) return false;
    for (const auto& w : node) {
      bool hit = false;
      for (const auto& a : attribute) hit = hit || (a == w && !stop.count(a));
      if (!hit) return false;
    }
    return true;
  };
  for (std::size_t t = 0; t < triples.size(); ++t) {
    if (joined(triples[t].start) == object && covered(triples[t].end)) {
      out.push_back({0, triples[t].relation_id, triples[t].kb, t, attrprobe::Direction::Forward});
    }
    if (joined(triples[t].end) == object && covered(triples[t].start)) {
      out.push_back({0, triples[t].relation_id, triples[t].kb, t, attrprobe::Direction::Reverse});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Random KB over a small vocabulary so that prompts hit many triples.
struct RandomKb {
  std::string tsv;
  std::vector<std::string> vocabulary;
};

inline RandomKb random_kb(attrprobe::Rng& rng, std::size_t n_triples) {
  RandomKb kb;
  for (int i = 0; i < 14; ++i) kb.vocabulary.push_back("w" + std::to_string(i));
  const std::vector<std::string> relations{"antonym", "related_to", "at_location", "used_for", "part_of"};
  const std::vector<std::string> kbs{"conceptnet", "wordnet", "atomic"};
  auto node = [&] {
    const std::size_t len = 1 + rng.index(3);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) out += ' ';
      out += kb.vocabulary[rng.index(kb.vocabulary.size())];
    }
    return out;
  };
  std::ostringstream tsv;
  tsv << "start\trelation\tend\tkb\n";
  for (std::size_t i = 0; i < n_triples; ++i) {
    tsv << node() << '\t' << relations[rng.index(relations.size())] << '\t' << node() << '\t'
        << kbs[rng.index(kbs.size())] << '\n';
  }
  kb.tsv = tsv.str();
  return kb;
}

// Deterministic stand-in for the embedding service.
class FixtureServer {
 public:
  explicit FixtureServer(int dim = 4, int failures_before_success = 0)
      : dim_(dim), failures_(failures_before_success) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (failures_ > 0) {
        --failures_;
        res.status = 500;
        res.set_content("transient", "text/plain");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json vectors = nlohmann::json::array();
      for (const auto& text : body.at("texts")) {
        texts_seen_ += 1;
        vectors.push_back(vector_for(text.get<std::string>(), dim_));
      }
      res.set_content(nlohmann::json{{"vectors", vectors}, {"dim", dim_}}.dump(), "application/json");
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FixtureServer() {
    server_.stop();
    thread_.join();
  }

  static std::vector<double> vector_for(const std::string& text, int dim) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) h = (h ^ c) * 1099511628211ULL;
    attrprobe::Rng rng(h);
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }
  int texts_seen() const { return texts_seen_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int dim_;
  std::atomic<int> failures_;
  std::atomic<int> requests_{0};
  std::atomic<int> texts_seen_{0};
};

// Synthetic norm set for the augmentation experiment. For each attribute,
// 70% of objects carry a label that is a linear threshold of their features;
// the other 30% get random labels that only a planted KB records, through
// has_property / lacks_property triples.
struct PlantedNorms {
  attrprobe::NormDataset dataset;
  Eigen::MatrixXd features;  // one row per object
  std::string kb_tsv;
  double covered_fraction = 0.0;
};

inline PlantedNorms planted_norms(std::uint64_t seed, std::size_t n_objects = 60, std::size_t n_attributes = 8,
                                  std::size_t dim = 5, double kb_fraction = 0.3) {
  attrprobe::Rng rng(seed);
  PlantedNorms out;
  out.features.resize(static_cast<long>(n_objects), static_cast<long>(dim));
  for (long i = 0; i < out.features.size(); ++i) out.features.data()[i] = rng.normal();

  std::vector<std::string> objects;
  for (std::size_t i = 0; i < n_objects; ++i) objects.push_back("obj" + std::to_string(i));
  std::vector<attrprobe::Attribute> attributes;
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  std::ostringstream kb;
  kb << "start\trelation\tend\tkb\n";
  std::size_t covered = 0;
  for (std::size_t a = 0; a < n_attributes; ++a) {
    attributes.push_back({{"is", "prop" + std::to_string(a)}, attrprobe::kCategories[a % 5], a});
    Eigen::VectorXd w(static_cast<long>(dim));
    for (long k = 0; k < w.size(); ++k) w[k] = rng.normal();
    std::vector<std::size_t> order(n_objects);
    for (std::size_t i = 0; i < n_objects; ++i) order[i] = i;
    for (std::size_t i = n_objects; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    const auto n_cover = static_cast<std::size_t>(kb_fraction * static_cast<double>(n_objects) + 0.5);
    std::vector<bool> in_kb(n_objects, false);
    for (std::size_t i = 0; i < n_cover; ++i) in_kb[order[i]] = true;
    bool any = false;
    for (std::size_t i = 0; i < n_objects; ++i) {
      bool label;
      if (in_kb[i]) {
        label = rng.uniform() < 0.5;
        kb << objects[i] << '\t' << (label ? "has_property" : "lacks_property") << '\t' << "prop" << a
           << "\tplanted\n";
        ++covered;
      } else {
        label = out.features.row(static_cast<long>(i)).dot(w) > 0.3;
      }
      if (label) {
        positives.emplace_back(i, a);
        any = true;
      }
    }
    if (!any) positives.emplace_back(order.back(), a);
  }
  out.dataset = attrprobe::NormDataset(objects, attributes, positives);
  out.kb_tsv = kb.str();
  out.covered_fraction = static_cast<double>(covered) / static_cast<double>(n_objects * n_attributes);
  return out;
}

}  // namespace oracle
