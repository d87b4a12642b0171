#include "attrprobe/kg_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <tuple>
#include <unordered_set>

#include "attrprobe/error.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

std::size_t RelationIndex::kb_id(std::string_view kb) {
  if (auto found = find_kb(kb)) return *found;
  kbs_.emplace_back(kb);
  relations_.emplace_back();
  return kbs_.size() - 1;
}

std::size_t RelationIndex::local_id(std::size_t kb, std::string_view relation) {
  auto& names = relations_[kb];
  auto it = std::find(names.begin(), names.end(), relation);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  names.emplace_back(relation);
  return names.size() - 1;
}

std::optional<std::size_t> RelationIndex::find_kb(std::string_view kb) const {
  auto it = std::find(kbs_.begin(), kbs_.end(), kb);
  if (it == kbs_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kbs_.begin());
}

std::optional<std::size_t> RelationIndex::local(std::string_view kb, std::string_view relation) const {
  auto k = find_kb(kb);
  if (!k) return std::nullopt;
  const auto& names = relations_[*k];
  auto it = std::find(names.begin(), names.end(), relation);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::optional<std::size_t> RelationIndex::global(std::string_view kb, std::string_view relation) const {
  auto l = local(kb, relation);
  if (!l) return std::nullopt;
  return global(*find_kb(kb), *l);
}

std::size_t RelationIndex::size() const {
  std::size_t total = 0;
  for (const auto& names : relations_) total += names.size();
  return total;
}

std::vector<std::size_t> RelationIndex::offsets() const {
  std::vector<std::size_t> out(kbs_.size(), 0);
  for (std::size_t k = 1; k < kbs_.size(); ++k) out[k] = out[k - 1] + relations_[k - 1].size();
  return out;
}

std::pair<std::string, std::string> RelationIndex::describe(std::size_t global_id) const {
  for (std::size_t k = 0; k < kbs_.size(); ++k) {
    if (global_id < relations_[k].size()) return {kbs_[k], relations_[k][global_id]};
    global_id -= relations_[k].size();
  }
  throw Error("relation id out of range");
}

const std::set<std::string>& default_stop_words() {
  static const std::set<std::string> words{"is", "does", "has", "a", "an", "the"};
  return words;
}

KgStore KgStore::load(const std::vector<std::filesystem::path>& paths) {
  KgStore store;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open knowledge base " + path.string());
    store.add_stream(in, path.string());
  }
  store.finalize();
  return store;
}

KgStore KgStore::parse(std::istream& in, std::string_view source) {
  KgStore store;
  store.add_stream(in, source);
  store.finalize();
  return store;
}

void KgStore::add_stream(std::istream& in, std::string_view source) {
  std::set<std::tuple<std::vector<std::string>, std::string, std::vector<std::string>, std::size_t>> seen;
  for (const auto& t : triples_) seen.emplace(t.start, t.relation, t.end, t.kb);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (normalize(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ParseError(std::string(source), line_no,
                       "expected start\\trelation\\tend\\tkb, found " + std::to_string(fields.size()) + " fields");
    }
    if (line_no == 1 && normalize(fields[0]) == "start" && normalize(fields[1]) == "relation" &&
        normalize(fields[2]) == "end" && normalize(fields[3]) == "kb") {
      continue;
    }
    KnowledgeTriple triple;
    triple.start = split_words(normalize(fields[0]));
    triple.relation = normalize(fields[1]);
    triple.end = split_words(normalize(fields[2]));
    const std::string kb = normalize(fields[3]);
    if (triple.start.empty() || triple.end.empty() || triple.relation.empty() || kb.empty()) {
      throw ParseError(std::string(source), line_no, "empty field in triple");
    }
    triple.kb = relations_.kb_id(kb);
    if (!seen.emplace(triple.start, triple.relation, triple.end, triple.kb).second) {
      warnings_.push_back(std::string(source) + ":" + std::to_string(line_no) + ": duplicate triple ignored");
      continue;
    }
    local_ids_.push_back(relations_.local_id(triple.kb, triple.relation));
    triples_.push_back(std::move(triple));
  }
}

void KgStore::finalize() {
  const auto offsets = relations_.offsets();
  by_start_head_.clear();
  by_node_.clear();
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    auto& t = triples_[i];
    t.relation_id = offsets[t.kb] + local_ids_[i];
    by_start_head_[t.start.front()].push_back(i);
    const std::string start = join(t.start);
    const std::string end = join(t.end);
    by_node_[start].push_back(i);
    if (end != start) by_node_[end].push_back(i);
  }
}

std::vector<RelationMatch> KgStore::query_pair(std::string_view object, const std::vector<std::string>& attribute,
                                               const std::set<std::string>& stop_words) const {
  const auto object_tokens = split_words(normalize(object));
  std::unordered_set<std::string> content;
  for (const auto& token : attribute) {
    if (!stop_words.contains(token)) content.insert(token);
  }
  auto covered = [&](const std::vector<std::string>& node) {
    return std::all_of(node.begin(), node.end(), [&](const std::string& t) { return content.contains(t); });
  };

  std::vector<RelationMatch> matches;
  auto it = by_node_.find(join(object_tokens));
  if (it == by_node_.end() || content.empty()) return matches;
  for (std::size_t index : it->second) {
    const auto& t = triples_[index];
    if (t.start == object_tokens && covered(t.end)) {
      matches.push_back({0, t.relation_id, t.kb, index, Direction::Forward});
    }
    if (t.end == object_tokens && covered(t.start)) {
      matches.push_back({0, t.relation_id, t.kb, index, Direction::Reverse});
    }
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

std::vector<std::vector<RelationMatch>> KgStore::query_prompt(const std::vector<std::string>& tokens) const {
  std::vector<std::vector<RelationMatch>> per_word(tokens.size());
  const std::unordered_set<std::string> present(tokens.begin(), tokens.end());
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    auto it = by_start_head_.find(tokens[p]);
    if (it == by_start_head_.end()) continue;
    for (std::size_t index : it->second) {
      const auto& t = triples_[index];
      if (p + t.start.size() > tokens.size()) continue;
      if (!std::equal(t.start.begin(), t.start.end(), tokens.begin() + static_cast<std::ptrdiff_t>(p))) continue;
      const bool end_present =
          std::all_of(t.end.begin(), t.end.end(), [&](const std::string& w) { return present.contains(w); });
      if (end_present) per_word[p].push_back({p, t.relation_id, t.kb, index, Direction::Forward});
    }
  }
  return per_word;
}

}  // namespace attrprobe
