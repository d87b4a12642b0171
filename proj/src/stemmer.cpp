#include "attrprobe/stemmer.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>
#include <optional>
#include <utility>

namespace attrprobe {
namespace {

// 'Y' marks a consonantal y and is not a vowel.
bool vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) { return w.ends_with(suffix); }

class Porter2 {
 public:
  explicit Porter2(std::string word) : w_(std::move(word)) {}

  std::string run() {
    if (w_.size() <= 2) return w_;
    if (auto special = exception1()) return *special;
    if (w_.front() == '\'') w_.erase(0, 1);
    mark_y();
    mark_regions();
    step0();
    step1a();
    if (exception2()) return restore();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return restore();
  }

 private:
  std::optional<std::string> exception1() const {
    static const std::array<std::pair<std::string_view, std::string_view>, 18> table{{
        {"skis", "ski"}, {"skies", "sky"}, {"dying", "die"}, {"lying", "lie"}, {"tying", "tie"},
        {"idly", "idl"}, {"gently", "gentl"}, {"ugly", "ugli"}, {"early", "earli"}, {"only", "onli"},
        {"singly", "singl"}, {"sky", "sky"}, {"news", "news"}, {"howe", "howe"}, {"atlas", "atlas"},
        {"cosmos", "cosmos"}, {"bias", "bias"}, {"andes", "andes"},
    }};
    for (auto [word, replacement] : table) {
      if (w_ == word) return std::string(replacement);
    }
    return std::nullopt;
  }

  bool exception2() const {
    for (std::string_view word : {"inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed"}) {
      if (w_ == word) return true;
    }
    return false;
  }

  void mark_y() {
    if (w_.front() == 'y') w_.front() = 'Y';
    for (std::size_t i = 1; i < w_.size(); ++i) {
      if (w_[i] == 'y' && vowel(w_[i - 1])) w_[i] = 'Y';
    }
  }

  std::size_t region_after(std::size_t start) const {
    for (std::size_t i = start + 1; i < w_.size(); ++i) {
      if (!vowel(w_[i]) && vowel(w_[i - 1])) return i + 1;
    }
    return w_.size();
  }

  void mark_regions() {
    r1_ = w_.size();
    for (std::string_view prefix : {"gener", "commun", "arsen"}) {
      if (w_.starts_with(prefix)) r1_ = prefix.size();
    }
    if (r1_ == w_.size()) r1_ = region_after(0);
    r2_ = r1_ < w_.size() ? region_after(r1_) : w_.size();
  }

  bool in_r1(std::size_t suffix_len) const { return w_.size() - suffix_len >= r1_; }
  bool in_r2(std::size_t suffix_len) const { return w_.size() - suffix_len >= r2_; }

  /// True when w[0, end) ends in a short syllable.
  bool short_syllable_at(std::size_t end) const {
    if (end == 2) return vowel(w_[0]) && !vowel(w_[1]);
    if (end >= 3) {
      const char c = w_[end - 1];
      return !vowel(w_[end - 3]) && vowel(w_[end - 2]) && !vowel(c) && c != 'w' && c != 'x' && c != 'Y';
    }
    return false;
  }

  bool is_short() const { return r1_ >= w_.size() && short_syllable_at(w_.size()); }

  void chop(std::size_t n) { w_.erase(w_.size() - n); }

  void replace(std::size_t n, std::string_view with) {
    chop(n);
    w_ += with;
  }

  bool has_vowel_before(std::size_t end) const {
    return std::any_of(w_.begin(), w_.begin() + static_cast<std::ptrdiff_t>(end), vowel);
  }

  /// Longest suffix of the word found in `suffixes`, or empty.
  std::string_view longest(std::initializer_list<std::string_view> suffixes) const {
    std::string_view best;
    for (auto s : suffixes) {
      if (s.size() > best.size() && ends_with(w_, s)) best = s;
    }
    return best;
  }

  void step0() {
    auto s = longest({"'s'", "'s", "'"});
    if (!s.empty()) chop(s.size());
  }

  void step1a() {
    auto s = longest({"sses", "ied", "ies", "us", "ss", "s"});
    if (s == "sses") {
      replace(4, "ss");
    } else if (s == "ied" || s == "ies") {
      replace(3, w_.size() > 4 ? "i" : "ie");
    } else if (s == "s") {
      if (w_.size() >= 3 && has_vowel_before(w_.size() - 2)) chop(1);
    }
  }

  void step1b() {
    auto s = longest({"eed", "eedly", "ed", "edly", "ing", "ingly"});
    if (s.empty()) return;
    if (s == "eed" || s == "eedly") {
      if (in_r1(s.size())) replace(s.size(), "ee");
      return;
    }
    if (!has_vowel_before(w_.size() - s.size())) return;
    chop(s.size());
    if (ends_with(w_, "at") || ends_with(w_, "bl") || ends_with(w_, "iz")) {
      w_ += 'e';
    } else if (ends_in_double()) {
      chop(1);
    } else if (is_short()) {
      w_ += 'e';
    }
  }

  bool ends_in_double() const {
    if (w_.size() < 2) return false;
    for (std::string_view d : {"bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt"}) {
      if (ends_with(w_, d)) return true;
    }
    return false;
  }

  void step1c() {
    const std::size_t n = w_.size();
    if (n > 2 && (w_[n - 1] == 'y' || w_[n - 1] == 'Y') && !vowel(w_[n - 2])) w_[n - 1] = 'i';
  }

  void step2() {
    auto s = longest({"tional", "enci", "anci", "abli", "entli", "izer", "ization", "ational", "ation", "ator",
                      "alism", "aliti", "alli", "fulness", "ousli", "ousness", "iveness", "iviti", "biliti",
                      "bli", "ogi", "fulli", "lessli", "li"});
    if (s.empty() || !in_r1(s.size())) return;
    if (s == "tional") replace(6, "tion");
    else if (s == "enci") replace(4, "ence");
    else if (s == "anci") replace(4, "ance");
    else if (s == "abli") replace(4, "able");
    else if (s == "entli") replace(5, "ent");
    else if (s == "izer" || s == "ization") replace(s.size(), "ize");
    else if (s == "ational" || s == "ation" || s == "ator") replace(s.size(), "ate");
    else if (s == "alism" || s == "aliti" || s == "alli") replace(s.size(), "al");
    else if (s == "fulness") replace(7, "ful");
    else if (s == "ousli" || s == "ousness") replace(s.size(), "ous");
    else if (s == "iveness" || s == "iviti") replace(s.size(), "ive");
    else if (s == "biliti" || s == "bli") replace(s.size(), "ble");
    else if (s == "ogi") {
      if (w_.size() >= 4 && w_[w_.size() - 4] == 'l') replace(3, "og");
    } else if (s == "fulli") replace(5, "ful");
    else if (s == "lessli") replace(6, "less");
    else if (s == "li") {
      if (w_.size() >= 3 && std::string_view("cdeghkmnrt").find(w_[w_.size() - 3]) != std::string_view::npos) chop(2);
    }
  }

  void step3() {
    auto s = longest({"tional", "ational", "alize", "icate", "iciti", "ical", "ful", "ness", "ative"});
    if (s.empty() || !in_r1(s.size())) return;
    if (s == "tional") replace(6, "tion");
    else if (s == "ational") replace(7, "ate");
    else if (s == "alize") replace(5, "al");
    else if (s == "icate" || s == "iciti" || s == "ical") replace(s.size(), "ic");
    else if (s == "ful" || s == "ness") chop(s.size());
    else if (s == "ative") {
      if (in_r2(5)) chop(5);
    }
  }

  void step4() {
    auto s = longest({"al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ism", "ate",
                      "iti", "ous", "ive", "ize", "ion"});
    if (s.empty() || !in_r2(s.size())) return;
    if (s == "ion") {
      const std::size_t n = w_.size();
      if (n >= 4 && (w_[n - 4] == 's' || w_[n - 4] == 't')) chop(3);
    } else {
      chop(s.size());
    }
  }

  void step5() {
    if (ends_with(w_, "e")) {
      if (in_r2(1) || (in_r1(1) && !short_syllable_at(w_.size() - 1))) chop(1);
    } else if (ends_with(w_, "l")) {
      if (in_r2(1) && w_.size() >= 2 && w_[w_.size() - 2] == 'l') chop(1);
    }
  }

  std::string restore() {
    std::replace(w_.begin(), w_.end(), 'Y', 'y');
    return w_;
  }

  std::string w_;
  std::size_t r1_ = 0;
  std::size_t r2_ = 0;
};

}  // namespace

std::string porter2_stem(std::string_view word) { return Porter2(std::string(word)).run(); }

std::string stem(std::string_view word) {
  std::string current(word);
  // Each pass shortens the word or leaves it unchanged after a few passes.
  for (int pass = 0; pass < 16; ++pass) {
    std::string next = porter2_stem(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

}  // namespace attrprobe
