#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace opinion::text {

constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

constexpr std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Number of maximal runs of non-whitespace characters. Markdown is not
// stripped first.
constexpr std::size_t word_count(std::string_view s) noexcept {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

// Lowercased maximal alphanumeric runs. Bytes >= 0x80 count as word
// characters so UTF-8 words stay in one piece; only ASCII is case-folded.
std::vector<std::string> tokenize(std::string_view s);

// Number of Unicode code points in a UTF-8 string (continuation bytes are
// not counted).
std::size_t utf8_length(std::string_view s) noexcept;

}  // namespace opinion::text
