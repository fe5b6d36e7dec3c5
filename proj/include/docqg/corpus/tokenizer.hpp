#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace docqg::corpus {

/// Tokens plus the [begin, end) byte range each token occupies in the source.
struct TokenizedText {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> offsets;
};

namespace detail {

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// ASCII punctuation only; bytes of multi-byte UTF-8 sequences are word bytes.
inline bool is_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

inline char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

/// Lowercases, splits on whitespace and peels leading/trailing punctuation
/// into single-character tokens. Interior punctuation stays attached, so
/// numbers such as "1,000.5" and words such as "don't" remain whole.
inline TokenizedText tokenize_with_offsets(std::string_view text) {
  TokenizedText out;
  auto emit = [&](std::size_t b, std::size_t e) {
    std::string tok;
    tok.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) tok.push_back(detail::lower(text[i]));
    out.tokens.push_back(std::move(tok));
    out.offsets.emplace_back(b, e);
  };

  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t end = i;
    while (end < text.size() && !detail::is_space(static_cast<unsigned char>(text[end]))) ++end;

    std::size_t b = i, e = end;
    while (b < e && detail::is_punct(static_cast<unsigned char>(text[b]))) {
      emit(b, b + 1);
      ++b;
    }
    std::size_t core_end = e;
    while (core_end > b && detail::is_punct(static_cast<unsigned char>(text[core_end - 1]))) {
      --core_end;
    }
    if (core_end > b) emit(b, core_end);
    for (std::size_t p = core_end; p < e; ++p) emit(p, p + 1);
    i = end;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  return tokenize_with_offsets(text).tokens;
}

}  // namespace docqg::corpus
