#pragma once

// Corpus-level evaluation report with per-example scores.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docqg/metrics/metrics.hpp"

namespace docqg::metrics {

struct ScoredPair {
  std::string id;
  Tokens candidate;
  Tokens reference;
  std::optional<double> coverage;  // set when attention was available
};

struct ExampleScore {
  std::string id;
  double bleu4 = 0.0;  // sentence-level, smoothed
  double rouge_l = 0.0;
  double meteor = 0.0;
};

struct EvalReport {
  std::size_t count = 0;
  double bleu[kMaxNgram] = {0, 0, 0, 0};  // corpus BLEU-1..4
  double meteor = 0.0;                     // mean over examples
  double rouge_l = 0.0;                    // mean over examples
  std::optional<double> coverage;          // mean over examples with attention
  std::vector<ExampleScore> examples;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["count"] = count;
    for (int n = 0; n < kMaxNgram; ++n) j["bleu" + std::to_string(n + 1)] = bleu[n];
    j["meteor"] = meteor;
    j["rougeL"] = rouge_l;
    j["coverage"] = coverage ? nlohmann::json(*coverage) : nlohmann::json(nullptr);
    j["warnings"] = warnings;
    return j;
  }

  void write_csv(std::ostream& os) const {
    os << "id,bleu4,rougeL,meteor\n";
    os.precision(17);
    for (const auto& e : examples) {
      os << csv_field(e.id) << ',' << e.bleu4 << ',' << e.rouge_l << ',' << e.meteor << '\n';
    }
  }

 private:
  static std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + '"';
  }
};

inline EvalReport evaluate(const std::vector<ScoredPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate: no examples");
  EvalReport r;
  r.count = pairs.size();
  std::vector<Tokens> cands, refs;
  double cov_sum = 0.0;
  std::size_t cov_n = 0;
  for (const auto& p : pairs) {
    cands.push_back(p.candidate);
    refs.push_back(p.reference);
    if (p.candidate.empty()) r.warnings.push_back(p.id + ": empty prediction scored 0");
    ExampleScore s{p.id, sentence_bleu(p.candidate, p.reference, 4),
                   rouge_l(p.candidate, p.reference), meteor_lite(p.candidate, p.reference)};
    r.rouge_l += s.rouge_l;
    r.meteor += s.meteor;
    r.examples.push_back(std::move(s));
    if (p.coverage) {
      cov_sum += *p.coverage;
      ++cov_n;
    }
  }
  for (int n = 1; n <= kMaxNgram; ++n) r.bleu[n - 1] = corpus_bleu(cands, refs, n);
  r.rouge_l /= static_cast<double>(pairs.size());
  r.meteor /= static_cast<double>(pairs.size());
  if (cov_n > 0) r.coverage = cov_sum / static_cast<double>(cov_n);
  return r;
}

}  // namespace docqg::metrics
