#pragma once

// Finite-difference check of the full encoder/decoder loss.

#include <cstdint>
#include <string>
#include <vector>

#include "docqg/corpus/embeddings.hpp"
#include "docqg/model/decoder.hpp"
#include "docqg/nd/grad_check.hpp"

namespace docqg::model {

/// Checks every trainable array of `params` on the teacher-forced loss of `ex`.
template <typename T>
nd::GradCheckReport check_model_gradients(ModelParams<T>& params, const PreparedExample& ex,
                                          T epsilon, double tolerance,
                                          nd::GradientTamper<T> tamper = nullptr) {
  std::vector<nd::NamedArray<T>> named;
  params.visit([&](const std::string& name, nd::Array<T>& a, bool trainable) {
    if (trainable) named.push_back({name, &a});
  });
  auto build = [&](Graph<T>& g, std::span<const Var<T>> vars) {
    std::size_t k = 0;
    const auto v = bind_with(params, [&](const nd::Array<T>& a, bool trainable) {
      return trainable ? vars[k++] : g.parameter(a, false);
    });
    return build_loss(v, ex).loss;
  };
  return nd::grad_check<T>(build, std::span<const nd::NamedArray<T>>(named), epsilon, tolerance,
                           tamper);
}

struct GradCheckCase {
  ModelParams<double> params;
  PreparedExample example;
};

/// Tiny self-contained model: d = 8, 6-token document with one out-of-vocabulary
/// word, 3-token question that copies it. Embeddings are trainable here so
/// they are covered too.
inline GradCheckCase gradcheck_case(int stages, std::uint64_t seed, bool attention = true,
                                    bool masking = true) {
  const corpus::Vocab vocab({"what", "did", "the", "cat", "eat", "fish", "?"});
  corpus::Example ex;
  ex.id = "gradcheck";
  ex.doc_tokens = {"the", "cat", "ate", "fish", "today", "?"};
  ex.answer = corpus::Span{3, 3};
  ex.question_tokens = {"what", "cat", "ate"};

  ModelConfig config;
  config.vocab_size = vocab.size();
  config.emb_dim = 5;
  config.hidden = 8;
  config.stages = stages;
  config.attention = attention;
  config.masking = masking;
  auto emb = corpus::random_embeddings<double>(vocab, config.emb_dim, seed);
  GradCheckCase c{init_params<double>(config, emb.matrix, seed, false), prepare(ex, vocab)};
  // Larger weights than the default init keep every path well away from zero.
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  c.params.visit([&](const std::string&, nd::Array<double>& a, bool) {
    for (auto& x : a.values()) x = dist(rng);
  });
  return c;
}

}  // namespace docqg::model
