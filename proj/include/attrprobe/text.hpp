#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace attrprobe {

/// NFC-normalizes and lowercases UTF-8 text, trimming surrounding whitespace.
/// Every module runs names and tokens through this before comparing them.
std::string normalize(std::string_view text);

/// Splits on ASCII whitespace and underscores, the separator used by
/// CSLB feature names and ConceptNet node labels.
std::vector<std::string> split_words(std::string_view text);

/// Word tokenizer for free text: maximal runs of letters/digits (non-ASCII
/// bytes count as letters), lowercased.
std::vector<std::string> tokenize(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

/// Splits a line on tab characters, keeping empty fields.
std::vector<std::string_view> split_tabs(std::string_view line);

}  // namespace attrprobe
