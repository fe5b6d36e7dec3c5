#pragma once

// Glue shared by the command-line tool and the ablation harness: experiment
// settings, model construction, generation and evaluation over a data set.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docqg/corpus/dataset.hpp"
#include "docqg/corpus/embeddings.hpp"
#include "docqg/infer/qg_model.hpp"
#include "docqg/infer/search.hpp"
#include "docqg/metrics/report.hpp"
#include "docqg/model/params.hpp"
#include "docqg/train/trainer.hpp"

namespace docqg::app {

inline constexpr std::size_t kDefaultVocabSize = 50000;

struct ExperimentConfig {
  std::size_t dim = 64;      // d
  std::size_t emb_dim = 64;  // word vector width
  int stages = 2;
  bool attention = true;
  bool masking = true;
  bool train_embeddings = false;
  std::size_t vocab_size = kDefaultVocabSize;
  std::size_t max_doc_tokens = 400;
  std::optional<std::string> glove;
  train::TrainConfig train;
  std::size_t eval_every = 100;

  model::ModelConfig model_config(std::size_t vocab) const {
    model::ModelConfig c;
    c.vocab_size = vocab;
    c.emb_dim = emb_dim;
    c.hidden = dim;
    c.stages = stages;
    c.attention = attention;
    c.masking = masking;
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    return {{"dim", dim},
            {"emb_dim", emb_dim},
            {"stages", stages},
            {"attention", attention},
            {"masking", masking},
            {"train_embeddings", train_embeddings},
            {"vocab_size", vocab_size},
            {"max_doc_tokens", max_doc_tokens},
            {"glove", glove ? nlohmann::json(*glove) : nlohmann::json(nullptr)},
            {"lr", train.lr},
            {"l2", train.l2},
            {"batch", train.batch},
            {"steps", train.steps},
            {"clip", train.clip},
            {"seed", train.seed},
            {"eval_every", eval_every}};
  }
};

template <typename T>
model::ModelParams<T> build_model(const ExperimentConfig& cfg, const corpus::Vocab& vocab) {
  const auto table = cfg.glove ? corpus::load_embeddings<T>(*cfg.glove, vocab, cfg.emb_dim)
                               : corpus::random_embeddings<T>(vocab, cfg.emb_dim);
  return model::init_params<T>(cfg.model_config(vocab.size()), table.matrix, cfg.train.seed,
                               !cfg.train_embeddings);
}

inline std::vector<model::PreparedExample> prepare_all(const std::vector<corpus::Example>& xs,
                                                       const corpus::Vocab& vocab) {
  std::vector<model::PreparedExample> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(model::prepare(x, vocab));
  return out;
}

struct GenerateOptions {
  std::size_t beam = 10;
  std::size_t max_len = infer::kDefaultMaxLen;
  bool greedy = false;
  bool length_normalize = true;
};

struct Generation {
  std::string id;
  std::vector<std::size_t> ids;
  std::vector<std::string> tokens;
  std::string question;
  double score = 0.0;  // the ranking score: normalized or raw log-probability
  double log_prob = 0.0;
  bool finished = false;
  std::vector<std::vector<double>> stage_attention;  // a^(1) .. a^(k)
  std::vector<std::vector<double>> step_attention;   // a^t per emitted step

  nlohmann::json to_json(bool with_attention) const {
    nlohmann::json j = {{"id", id}, {"question", question}, {"score", score}};
    if (with_attention) {
      j["stage_attention"] = stage_attention;
      j["step_attention"] = step_attention;
    }
    return j;
  }
};

inline std::vector<std::string> surface_tokens(const std::vector<std::size_t>& ids,
                                               const corpus::Vocab& vocab,
                                               const model::CopyMap& copy) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(infer::detokenize({id}, vocab, copy));
  return out;
}

template <typename T>
Generation generate(const model::ModelParams<T>& params, const corpus::Vocab& vocab,
                    const model::PreparedExample& ex, const GenerateOptions& opts) {
  infer::QgStepModel<T> m(params, ex);
  const auto d = opts.greedy
                     ? infer::greedy_decode(m, opts.max_len)
                     : infer::beam_search(m, {opts.beam, opts.max_len, opts.length_normalize});
  Generation g;
  g.id = ex.id;
  g.ids = d.tokens;
  g.tokens = surface_tokens(d.tokens, vocab, ex.copy);
  g.question = infer::detokenize(d.tokens, vocab, ex.copy);
  g.log_prob = d.log_prob;
  g.score = opts.length_normalize ? infer::normalized_score(d) : d.log_prob;
  g.finished = d.finished;
  g.stage_attention = m.stage_attention();
  g.step_attention = d.attention;
  return g;
}

struct ModelEvaluation {
  metrics::EvalReport report;
  std::vector<Generation> generations;
};

/// Generates for every example and scores against its reference question.
/// Coverage uses the last encoder stage's document attention.
template <typename T>
ModelEvaluation evaluate_model(const model::ModelParams<T>& params, const corpus::Vocab& vocab,
                               const std::vector<corpus::Example>& examples,
                               const GenerateOptions& opts) {
  ModelEvaluation out;
  std::vector<metrics::ScoredPair> pairs;
  for (const auto& ex : examples) {
    auto g = generate(params, vocab, model::prepare(ex, vocab), opts);
    std::optional<double> coverage;
    if (!g.stage_attention.empty()) {
      coverage = metrics::attention_coverage(g.stage_attention.back(), ex.doc_tokens,
                                             ex.question_tokens, ex.answer);
    }
    pairs.push_back({ex.id, g.tokens, ex.question_tokens, coverage});
    out.generations.push_back(std::move(g));
  }
  out.report = metrics::evaluate(pairs);
  return out;
}

}  // namespace docqg::app
