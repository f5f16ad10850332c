#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace llmaug {

/// Lowercases and splits on every non-alphanumeric codepoint; empty tokens
/// are dropped. Input is UTF-8. Non-ASCII codepoints count as alphanumeric
/// unless they fall in a Unicode punctuation/space block; Latin-1 capitals
/// are lowercased, other scripts are left as-is.
std::vector<std::string> tokenize(std::string_view text);

/// Decodes UTF-8 into codepoints; invalid bytes become U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

std::string trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace llmaug
