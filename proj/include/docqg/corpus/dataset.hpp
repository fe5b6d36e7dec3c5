#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "docqg/corpus/tokenizer.hpp"
#include "docqg/corpus/vocab.hpp"

namespace docqg::corpus {

/// Inclusive, 0-based token span.
struct Span {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const { return last - first + 1; }
  bool contains(std::size_t i) const { return i >= first && i <= last; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Example {
  std::string id;
  std::vector<std::string> doc_tokens;
  Span answer;
  std::vector<std::string> question_tokens;  // empty at inference

  std::vector<std::string> answer_tokens() const {
    return {doc_tokens.begin() + static_cast<std::ptrdiff_t>(answer.first),
            doc_tokens.begin() + static_cast<std::ptrdiff_t>(answer.last) + 1};
  }
};

inline void validate(const Example& ex) {
  if (ex.doc_tokens.empty()) throw DataError("example " + ex.id + ": empty document");
  if (ex.answer.first > ex.answer.last || ex.answer.last >= ex.doc_tokens.size()) {
    throw DataError("example " + ex.id + ": answer span out of bounds");
  }
}

/// Finds the token span covering `answer_text`, which starts at byte
/// `answer_char_start` of the tokenized document. When the offset does not
/// land on a token boundary, the occurrence of the tokenized answer nearest
/// to the offset is used instead. Throws DataError when there is none.
inline Span align_answer_span(const TokenizedText& doc, std::string_view answer_text,
                              std::size_t answer_char_start) {
  const auto answer = tokenize(answer_text);
  if (answer.empty()) throw DataError("align_answer_span: empty answer text");
  const auto& toks = doc.tokens;
  if (answer.size() > toks.size()) {
    throw DataError("align_answer_span: answer longer than document");
  }
  auto matches_at = [&](std::size_t m) {
    return std::equal(answer.begin(), answer.end(), toks.begin() + static_cast<std::ptrdiff_t>(m));
  };

  std::optional<std::size_t> best;
  std::size_t best_dist = 0;
  for (std::size_t m = 0; m + answer.size() <= toks.size(); ++m) {
    if (!matches_at(m)) continue;
    const std::size_t b = doc.offsets[m].first;
    const std::size_t dist = b > answer_char_start ? b - answer_char_start : answer_char_start - b;
    if (!best || dist < best_dist) {
      best = m;
      best_dist = dist;
    }
  }
  if (!best) {
    throw DataError("align_answer_span: answer '" + std::string(answer_text) +
                    "' is not a token sub-span of the document");
  }
  return Span{*best, *best + answer.size() - 1};
}

/// Convenience form for already-tokenized documents whose tokens were joined
/// by single spaces (offsets are reconstructed from that layout).
inline Span align_answer_span(const std::vector<std::string>& doc_tokens,
                              std::string_view answer_text, std::size_t answer_char_start) {
  TokenizedText doc;
  std::size_t pos = 0;
  for (const auto& t : doc_tokens) {
    doc.tokens.push_back(t);
    doc.offsets.emplace_back(pos, pos + t.size());
    pos += t.size() + 1;
  }
  return align_answer_span(doc, answer_text, answer_char_start);
}

/// Cuts the document to at most `cap` tokens, keeping a window centered on
/// the answer span.
inline void truncate_around_answer(Example& ex, std::size_t cap) {
  const std::size_t n = ex.doc_tokens.size();
  if (n <= cap) return;
  const std::size_t len = ex.answer.length();
  if (len > cap) {
    throw DataError("example " + ex.id + ": answer longer than the document cap");
  }
  const std::size_t spare = cap - len;
  std::size_t begin = ex.answer.first >= spare / 2 ? ex.answer.first - spare / 2 : 0;
  begin = std::min(begin, n - cap);
  ex.doc_tokens = std::vector<std::string>(ex.doc_tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                           ex.doc_tokens.begin() + static_cast<std::ptrdiff_t>(begin + cap));
  ex.answer.first -= begin;
  ex.answer.last -= begin;
}

struct LoadOptions {
  std::size_t max_doc_tokens = 400;
  bool require_question = true;
};

struct LoadResult {
  std::vector<Example> examples;
  std::vector<std::string> rejected;  // one diagnostic per skipped example
};

/// Parses one JSONL record {id, document, question, answer_text,
/// answer_char_start}. Alignment failures throw DataError.
inline Example parse_record(const nlohmann::json& j, const LoadOptions& opts) {
  Example ex;
  ex.id = j.at("id").get<std::string>();
  const std::string document = j.at("document").get<std::string>();
  const auto doc = tokenize_with_offsets(document);
  if (doc.tokens.empty()) throw DataError("example " + ex.id + ": empty document");
  ex.answer = align_answer_span(doc, j.at("answer_text").get<std::string>(),
                                j.at("answer_char_start").get<std::size_t>());
  ex.doc_tokens = doc.tokens;
  if (j.contains("question") && !j.at("question").is_null()) {
    ex.question_tokens = tokenize(j.at("question").get<std::string>());
  }
  if (opts.require_question && ex.question_tokens.empty()) {
    throw DataError("example " + ex.id + ": empty question");
  }
  truncate_around_answer(ex, opts.max_doc_tokens);
  validate(ex);
  return ex;
}

inline LoadResult load_jsonl(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path);
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    try {
      result.examples.push_back(parse_record(j, opts));
    } catch (const DataError& e) {
      result.rejected.push_back(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return result;
}

/// Vocabulary over document and question tokens.
inline Vocab build_vocab(const std::vector<Example>& examples, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : examples) {
    for (const auto& t : ex.doc_tokens) ++counts[t];
    for (const auto& t : ex.question_tokens) ++counts[t];
  }
  return build_vocab_from_counts(counts, max_size);
}

struct DatasetStats {
  std::size_t count = 0;
  double avg_doc_tokens = 0.0;
  double avg_question_tokens = 0.0;
  double avg_answer_tokens = 0.0;
};

inline DatasetStats dataset_stats(const std::vector<Example>& examples) {
  DatasetStats s;
  s.count = examples.size();
  if (examples.empty()) return s;
  for (const auto& ex : examples) {
    s.avg_doc_tokens += static_cast<double>(ex.doc_tokens.size());
    s.avg_question_tokens += static_cast<double>(ex.question_tokens.size());
    s.avg_answer_tokens += static_cast<double>(ex.answer.length());
  }
  const double n = static_cast<double>(examples.size());
  s.avg_doc_tokens /= n;
  s.avg_question_tokens /= n;
  s.avg_answer_tokens /= n;
  return s;
}

}  // namespace docqg::corpus
