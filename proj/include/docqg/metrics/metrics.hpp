#pragma once

// Text-overlap metrics over token lists: corpus/sentence BLEU, ROUGE-L,
// METEOR-lite (exact + stem matching only) and attention coverage.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "docqg/corpus/dataset.hpp"

namespace docqg::metrics {

using Tokens = std::vector<std::string>;

inline constexpr int kMaxNgram = 4;
inline constexpr double kSentenceBleuEpsilon = 1e-9;
inline constexpr double kRougeBeta = 1.2;

inline std::map<Tokens, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<Tokens, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

/// Clipped n-gram matches and candidate n-gram total for one pair.
struct NgramMatch {
  std::size_t matches = 0;
  std::size_t total = 0;
};

inline NgramMatch clipped_matches(const Tokens& cand, const Tokens& ref, std::size_t n) {
  NgramMatch m;
  const auto ref_counts = ngram_counts(ref, n);
  for (const auto& [gram, count] : ngram_counts(cand, n)) {
    m.total += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) m.matches += std::min(count, it->second);
  }
  return m;
}

inline double modified_precision(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const auto m = clipped_matches(cand, ref, n);
  return m.total == 0 ? 0.0 : static_cast<double>(m.matches) / static_cast<double>(m.total);
}

inline void check_order(int max_n) {
  if (max_n < 1 || max_n > kMaxNgram) throw std::invalid_argument("bleu: max_n must be in 1..4");
}

/// Corpus BLEU with a single reference per candidate. Matches and totals are
/// pooled over the corpus and the brevity penalty is applied once.
inline double corpus_bleu(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs,
                          int max_n) {
  check_order(max_n);
  if (cands.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (cands.size() != refs.size()) {
    throw std::invalid_argument("bleu: candidate and reference counts differ");
  }
  std::array<std::size_t, kMaxNgram> matches{}, totals{};
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    c += cands[i].size();
    r += refs[i].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto m = clipped_matches(cands[i], refs[i], static_cast<std::size_t>(n));
      matches[n - 1] += m.matches;
      totals[n - 1] += m.total;
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

/// Sentence BLEU; zero precisions are replaced by a tiny epsilon.
inline double sentence_bleu(const Tokens& cand, const Tokens& ref, int max_n) {
  check_order(max_n);
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto m = clipped_matches(cand, ref, static_cast<std::size_t>(n));
    const double p = (m.total == 0 || m.matches == 0)
                         ? kSentenceBleuEpsilon
                         : static_cast<double>(m.matches) / static_cast<double>(m.total);
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// LCS F-measure; 0 when either side is empty.
inline double rouge_l(const Tokens& cand, const Tokens& ref, double beta = kRougeBeta) {
  if (cand.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  if (lcs == 0.0) return 0.0;
  const double r = lcs / static_cast<double>(ref.size());
  const double p = lcs / static_cast<double>(cand.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * r * p / (r + b2 * p);
}

/// Light suffix stripper: removes the first matching inflectional suffix
/// while keeping at least three characters.
inline std::string stem(const std::string& word) {
  struct Rule {
    const char* suffix;
    const char* replacement;
  };
  static const Rule rules[] = {{"ingly", ""}, {"edly", ""}, {"ies", "y"}, {"ing", ""},
                               {"ed", ""},    {"es", ""},   {"ly", ""},   {"s", ""}};
  for (const auto& rule : rules) {
    const std::string suffix = rule.suffix;
    if (word.size() < suffix.size() + 3) continue;
    if (word.compare(word.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    if (suffix == "s" && word[word.size() - 2] == 's') continue;
    return word.substr(0, word.size() - suffix.size()) + rule.replacement;
  }
  return word;
}

struct MeteorDetail {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

/// Alignment: exact matches first, then stem matches, each pass pairing
/// candidate tokens left to right with the first free reference token.
inline MeteorDetail meteor_lite_detail(const Tokens& cand, const Tokens& ref) {
  MeteorDetail d;
  if (cand.empty() || ref.empty()) return d;
  std::vector<long> ref_of(cand.size(), -1);
  std::vector<bool> used(ref.size(), false);
  auto pass = [&](auto&& same) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (ref_of[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!used[j] && same(cand[i], ref[j])) {
          ref_of[i] = static_cast<long>(j);
          used[j] = true;
          break;
        }
      }
    }
  };
  pass([](const std::string& a, const std::string& b) { return a == b; });
  pass([](const std::string& a, const std::string& b) { return stem(a) == stem(b); });

  long last = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (ref_of[i] < 0) {
      in_chunk = false;
      continue;
    }
    ++d.matches;
    if (!in_chunk || ref_of[i] != last + 1) ++d.chunks;
    in_chunk = true;
    last = ref_of[i];
  }
  if (d.matches == 0) return d;
  const double m = static_cast<double>(d.matches);
  d.precision = m / static_cast<double>(cand.size());
  d.recall = m / static_cast<double>(ref.size());
  d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
  d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
  d.score = d.fmean * (1.0 - d.penalty);
  return d;
}

inline double meteor_lite(const Tokens& cand, const Tokens& ref) {
  return meteor_lite_detail(cand, ref).score;
}

/// Attention mass on document positions outside the answer span whose token
/// occurs in the question.
inline double attention_coverage(const std::vector<double>& attention, const Tokens& doc_tokens,
                                 const Tokens& question_tokens, corpus::Span answer) {
  if (attention.size() != doc_tokens.size()) {
    throw std::invalid_argument("attention_coverage: attention length differs from document");
  }
  const std::unordered_set<std::string> q(question_tokens.begin(), question_tokens.end());
  double total = 0.0;
  for (std::size_t i = 0; i < doc_tokens.size(); ++i) {
    if (answer.contains(i)) continue;
    if (q.count(doc_tokens[i])) total += attention[i];
  }
  return total;
}

}  // namespace docqg::metrics
