#pragma once

// Copy/generate decoder: attention over C_final, recurrent state update,
// fixed-vocabulary distribution, generation gate and the mixed distribution
// over the extended vocabulary.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "docqg/corpus/dataset.hpp"
#include "docqg/corpus/vocab.hpp"
#include "docqg/model/encoder.hpp"

namespace docqg::model {

inline constexpr double kProbabilityFloor = 1e-12;

/// Per-example extended vocabulary: ids [0, |V|) are the fixed vocabulary,
/// ids |V| + j name the j-th distinct out-of-vocabulary document token.
struct CopyMap {
  std::size_t vocab_size = 0;
  std::vector<std::size_t> position_ids;  // extended id of each document position
  std::vector<std::string> oov_tokens;

  std::size_t extended_size() const { return vocab_size + oov_tokens.size(); }

  /// Copied out-of-vocabulary tokens are fed back as UNK.
  std::size_t embed_id(std::size_t ext) const { return ext >= vocab_size ? corpus::kUnk : ext; }
};

inline CopyMap make_copy_map(const std::vector<std::string>& doc_tokens,
                             const corpus::Vocab& vocab) {
  CopyMap m;
  m.vocab_size = vocab.size();
  std::unordered_map<std::string, std::size_t> oov;
  for (const auto& t : doc_tokens) {
    if (vocab.contains(t)) {
      m.position_ids.push_back(vocab.id(t));
      continue;
    }
    auto [it, inserted] = oov.emplace(t, m.vocab_size + m.oov_tokens.size());
    if (inserted) m.oov_tokens.push_back(t);
    m.position_ids.push_back(it->second);
  }
  return m;
}

/// Vocabulary id, else document-copy id, else UNK.
inline std::size_t extended_id(const std::string& token, const corpus::Vocab& vocab,
                               const CopyMap& copy) {
  if (vocab.contains(token)) return vocab.id(token);
  for (std::size_t j = 0; j < copy.oov_tokens.size(); ++j) {
    if (copy.oov_tokens[j] == token) return copy.vocab_size + j;
  }
  return corpus::kUnk;
}

/// An Example mapped to ids, ready for the encoder/decoder.
struct PreparedExample {
  std::string id;
  std::vector<std::size_t> doc_ids;  // fixed-vocab ids (UNK for OOV)
  corpus::Span span;
  CopyMap copy;
  std::vector<std::size_t> targets;  // question extended ids followed by EOS
};

inline PreparedExample prepare(const corpus::Example& ex, const corpus::Vocab& vocab) {
  corpus::validate(ex);
  PreparedExample p;
  p.id = ex.id;
  p.doc_ids = vocab.encode(ex.doc_tokens);
  p.span = ex.answer;
  p.copy = make_copy_map(ex.doc_tokens, vocab);
  for (const auto& t : ex.question_tokens) p.targets.push_back(extended_id(t, vocab, p.copy));
  if (!p.targets.empty()) p.targets.push_back(corpus::kEos);
  return p;
}

/// Per-graph constants shared by every decoding step of one example.
template <typename T>
struct DecoderContext {
  Var<T> memory;       // C_final, l_D x d
  Var<T> copy_matrix;  // l_D x E one-hot rows
  const CopyMap* copy = nullptr;
};

template <typename T>
DecoderContext<T> make_decoder_context(Var<T> memory, const CopyMap& copy) {
  if (copy.position_ids.size() != memory.rows()) {
    throw nd::ShapeError("decoder: copy map covers " + std::to_string(copy.position_ids.size()) +
                         " positions, memory has " + std::to_string(memory.rows()));
  }
  nd::Array<T> s({memory.rows(), copy.extended_size()});
  for (std::size_t i = 0; i < copy.position_ids.size(); ++i) s.at(i, copy.position_ids[i]) = T{1};
  return {memory, memory.graph->constant(std::move(s)), &copy};
}

template <typename T>
struct CopyAttention {
  Var<T> weights;  // a^t, 1 x l_D
  Var<T> context;  // r^t, 1 x d
};

/// e_i = u . tanh(C_i + h_prev); a = softmax(e); r = sum_i a_i C_i.
template <typename T>
CopyAttention<T> attend_copy(Var<T> memory, Var<T> h_prev, Var<T> u) {
  if (h_prev.cols() != memory.cols() || u.cols() != memory.cols() || h_prev.rows() != 1 ||
      u.rows() != 1) {
    throw nd::ShapeError("attend_copy: width mismatch memory " +
                         nd::shape_string(memory.shape()) + ", state " +
                         nd::shape_string(h_prev.shape()) + ", scorer " +
                         nd::shape_string(u.shape()));
  }
  Graph<T>& g = *memory.graph;
  const Var<T> scores = g.matmul(u, g.tanh(g.add(memory, h_prev)), true);
  const Var<T> a = g.softmax(scores);
  return {a, g.matmul(a, memory)};
}

template <typename T>
struct StepOutput {
  LstmState<T> state;  // h^t, c^t
  Var<T> attention;    // a^t
  Var<T> context;      // r^t
  Var<T> input;        // x^t = [r^t, W_e(y^{t-1})]
  Var<T> p_vocab;      // 1 x |V|
  Var<T> p_gen;        // 1 x 1
  Var<T> p_final;      // 1 x E
};

/// One decoding step from `prev` (an extended id). `forced_gate` replaces the
/// learned generation probability, for probing the mixture endpoints.
template <typename T>
StepOutput<T> decode_step(const ModelVars<T>& v, const DecoderContext<T>& ctx, std::size_t prev,
                          const LstmState<T>& prev_state,
                          std::optional<std::type_identity_t<T>> forced_gate = std::nullopt) {
  const CopyMap& copy = *ctx.copy;
  if (prev >= copy.extended_size()) {
    throw std::out_of_range("decode_step: token id " + std::to_string(prev) +
                            " outside extended vocabulary of " +
                            std::to_string(copy.extended_size()));
  }
  Graph<T>& g = *ctx.memory.graph;
  StepOutput<T> out;
  const auto att = attend_copy(ctx.memory, prev_state.h, v.copy_u);
  out.attention = att.weights;
  out.context = att.context;
  const Var<T> emb = g.embedding_lookup(v.embedding, {copy.embed_id(prev)});
  out.input = g.concat({att.context, emb}, 1);
  out.state = lstm_step(v.dec, out.input, prev_state);
  out.p_vocab = g.softmax(g.matmul(g.concat({out.state.h, att.context}, 1), v.out_proj));

  if (forced_gate) {
    out.p_gen = g.constant(nd::Array<T>({1, 1}, *forced_gate));
  } else {
    const Var<T> logit = g.add(g.add(g.matmul(att.context, v.gate_r), g.matmul(out.input, v.gate_x)),
                               g.matmul(out.state.h, v.gate_h));
    out.p_gen = g.sigmoid(logit);
  }

  Var<T> generated = g.mul(out.p_vocab, out.p_gen);
  if (!copy.oov_tokens.empty()) {
    generated = g.concat({generated, g.constant(nd::Array<T>({1, copy.oov_tokens.size()}))}, 1);
  }
  const Var<T> copied = g.matmul(att.weights, ctx.copy_matrix);
  const Var<T> copy_weight =
      g.add(g.constant(nd::Array<T>({1, 1}, T{1})), nd::scale(out.p_gen, T{-1}));
  out.p_final = g.add(generated, g.mul(copied, copy_weight));
  return out;
}

/// Mean negative log-likelihood of `targets` under teacher forcing.
/// `step(prev)` returns the 1 x E distribution for the next token given the
/// ground-truth previous token; the first call receives SOS.
template <typename T, typename StepFn>
Var<T> teacher_forced_nll(Graph<T>& g, std::size_t extended_size,
                          const std::vector<std::size_t>& targets, StepFn&& step) {
  if (targets.empty()) throw std::invalid_argument("sequence_loss: empty question");
  std::size_t prev = corpus::kSos;
  std::optional<Var<T>> total;
  for (const std::size_t y : targets) {
    if (y >= extended_size) {
      throw std::out_of_range("sequence_loss: target id outside extended vocabulary");
    }
    const Var<T> dist = step(prev);
    nd::Array<T> pick({extended_size, 1});
    pick[y] = T{1};
    const Var<T> p = g.matmul(dist, g.constant(std::move(pick)));
    const Var<T> lp = g.log_floor(p, static_cast<T>(kProbabilityFloor));
    total = total ? g.add(*total, lp) : lp;
    prev = y;
  }
  return nd::scale(*total, T{-1} / static_cast<T>(targets.size()));
}

/// Teacher-forced loss of the copy/generate decoder from a zero state.
template <typename T>
Var<T> sequence_loss(const ModelVars<T>& v, const DecoderContext<T>& ctx,
                     const std::vector<std::size_t>& targets) {
  Graph<T>& g = *ctx.memory.graph;
  LstmState<T> state = zero_state(g, v.config.hidden);
  return teacher_forced_nll(g, ctx.copy->extended_size(), targets, [&](std::size_t prev) {
    const auto step = decode_step(v, ctx, prev, state);
    state = step.state;
    return step.p_final;
  });
}

template <typename T>
struct LossRecord {
  Var<T> loss;
  EncodedInput<T> encoded;
};

template <typename T>
LossRecord<T> build_loss(const ModelVars<T>& v, const PreparedExample& ex) {
  LossRecord<T> r;
  r.encoded = encode(v, ex.doc_ids, ex.span);
  const auto ctx = make_decoder_context(r.encoded.final, ex.copy);
  r.loss = sequence_loss(v, ctx, ex.targets);
  return r;
}

}  // namespace docqg::model
