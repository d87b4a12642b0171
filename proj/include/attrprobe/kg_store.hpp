#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "attrprobe/rng.hpp"

namespace attrprobe {

struct KnowledgeTriple {
  std::vector<std::string> start;
  std::string relation;
  std::vector<std::string> end;
  std::size_t kb = 0;           // index into RelationIndex::kbs()
  std::size_t relation_id = 0;  // global id, see RelationIndex
};

/// Dense relation ids. Each KB numbers its relations 0.. in first-seen order;
/// the global id space concatenates the KBs (also in first-seen order), so
/// the per-KB ranges are disjoint.
class RelationIndex {
 public:
  std::size_t kb_id(std::string_view kb);
  std::size_t local_id(std::size_t kb, std::string_view relation);

  std::optional<std::size_t> find_kb(std::string_view kb) const;
  std::optional<std::size_t> local(std::string_view kb, std::string_view relation) const;
  std::optional<std::size_t> global(std::string_view kb, std::string_view relation) const;
  std::size_t global(std::size_t kb, std::size_t local) const { return offsets()[kb] + local; }

  const std::vector<std::string>& kbs() const { return kbs_; }
  const std::vector<std::string>& relations(std::size_t kb) const { return relations_[kb]; }
  std::size_t size() const;
  std::vector<std::size_t> offsets() const;
  /// (kb name, relation name) for a global id.
  std::pair<std::string, std::string> describe(std::size_t global_id) const;

  friend bool operator==(const RelationIndex&, const RelationIndex&) = default;

 private:
  std::vector<std::string> kbs_;
  std::vector<std::vector<std::string>> relations_;
};

enum class Direction { Forward, Reverse };

struct RelationMatch {
  /// Prompt position of the first word of the start node (0 for pair queries).
  std::size_t word_position = 0;
  std::size_t relation_id = 0;  // global
  std::size_t kb = 0;
  std::size_t triple = 0;
  /// Pair queries: Forward when the object is the start node.
  Direction direction = Direction::Forward;

  friend bool operator==(const RelationMatch&, const RelationMatch&) = default;
  friend auto operator<=>(const RelationMatch& a, const RelationMatch& b) {
    return std::tie(a.word_position, a.triple, a.direction) <=> std::tie(b.word_position, b.triple, b.direction);
  }
};

/// Words ignored on the attribute side of pair queries.
const std::set<std::string>& default_stop_words();

/// Immutable triple store indexed for candidate lookup by node tokens.
class KgStore {
 public:
  /// Each file holds start\trelation\tend\tkb rows; a header row is optional.
  static KgStore load(const std::vector<std::filesystem::path>& paths);
  static KgStore parse(std::istream& in, std::string_view source);

  const std::vector<KnowledgeTriple>& triples() const { return triples_; }
  const RelationIndex& relations() const { return relations_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Triples linking the object (as a whole node) to a node whose tokens are
  /// all content tokens of the attribute, in either direction.
  std::vector<RelationMatch> query_pair(std::string_view object, const std::vector<std::string>& attribute,
                                        const std::set<std::string>& stop_words = default_stop_words()) const;

  /// Per-word match lists for a tokenized prompt. A triple matches when its
  /// start node occurs as a contiguous span and every end-node token occurs
  /// somewhere in the prompt; the match is recorded at the span's first word,
  /// once per occurrence of the span.
  std::vector<std::vector<RelationMatch>> query_prompt(const std::vector<std::string>& tokens) const;

 private:
  void add_stream(std::istream& in, std::string_view source);
  void finalize();

  std::vector<KnowledgeTriple> triples_;
  std::vector<std::size_t> local_ids_;
  RelationIndex relations_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_start_head_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_node_;
  std::vector<std::string> warnings_;
};

/// Uniform choice among matches; nullopt for an empty list.
template <typename Match>
std::optional<Match> sample_relation(const std::vector<Match>& matches, Rng& rng) {
  if (matches.empty()) return std::nullopt;
  return matches[rng.index(matches.size())];
}

}  // namespace attrprobe
