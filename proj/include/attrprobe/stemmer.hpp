#pragma once

#include <string>
#include <string_view>

namespace attrprobe {

/// One pass of the English (Porter2) stemmer over a lowercase word.
std::string porter2_stem(std::string_view word);

/// Porter2 applied until the word stops changing, so stem(stem(w)) == stem(w).
std::string stem(std::string_view word);

}  // namespace attrprobe
