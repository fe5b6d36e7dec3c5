#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace docqg::corpus {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kUnk = 1;
inline constexpr std::size_t kSos = 2;
inline constexpr std::size_t kEos = 3;
inline constexpr std::size_t kMask = 4;
inline constexpr std::size_t kReservedCount = 5;

inline const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens = {"<pad>", "<unk>", "<s>", "</s>",
                                                  "<mask>"};
  return tokens;
}

inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class Vocab {
 public:
  Vocab() : Vocab(std::vector<std::string>{}) {}

  /// `words` excludes the reserved tokens, which always occupy ids 0..4.
  explicit Vocab(const std::vector<std::string>& words) {
    for (const auto& r : reserved_tokens()) insert(r);
    for (const auto& w : words) {
      if (index_.count(w)) throw DataError("Vocab: duplicate token '" + w + "'");
      insert(w);
    }
  }

  std::size_t size() const { return tokens_.size(); }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  std::size_t id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(std::size_t id) const {
    if (id >= tokens_.size()) {
      throw std::out_of_range("Vocab: id " + std::to_string(id) + " out of range");
    }
    return tokens_[id];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(token(i));
    return out;
  }

  /// Stable fingerprint of the id assignment, stored in checkpoints.
  std::string hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& t : tokens_) {
      h = fnv1a(t, h);
      h = fnv1a("\n", h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocab file " + path);
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocab file " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    const auto& reserved = reserved_tokens();
    if (lines.size() < reserved.size() ||
        !std::equal(reserved.begin(), reserved.end(), lines.begin())) {
      throw DataError("vocab file " + path + " does not start with the reserved tokens");
    }
    return Vocab(std::vector<std::string>(lines.begin() + reserved.size(), lines.end()));
  }

 private:
  void insert(const std::string& t) {
    index_.emplace(t, tokens_.size());
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps the most frequent tokens, ties broken lexicographically, so that the
/// vocabulary including reserved entries has at most `max_size` entries.
inline Vocab build_vocab_from_counts(const std::map<std::string, std::size_t>& counts,
                                     std::size_t max_size) {
  if (max_size <= kReservedCount) {
    throw DataError("build_vocab: max_size must exceed the " +
                    std::to_string(kReservedCount) + " reserved tokens");
  }
  if (counts.empty()) throw DataError("build_vocab: empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [tok, n] : counts) {
    if (std::find(reserved_tokens().begin(), reserved_tokens().end(), tok) ==
        reserved_tokens().end()) {
      ranked.emplace_back(tok, n);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), max_size - kReservedCount);
  std::vector<std::string> words;
  words.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) words.push_back(ranked[i].first);
  return Vocab(words);
}

}  // namespace docqg::corpus
