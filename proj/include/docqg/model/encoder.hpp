#pragma once

// Answer-aware document encoding: shared bidirectional recurrent layer,
// k-stage attention over the document and answer masking.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "docqg/corpus/dataset.hpp"
#include "docqg/model/params.hpp"
#include "docqg/nd/graph.hpp"

namespace docqg::model {

using nd::Graph;
using nd::Var;

template <typename T>
struct LstmVars {
  std::array<Var<T>, 4> W;
  std::array<Var<T>, 4> b;
  std::size_t hidden = 0;
};

template <typename T>
struct StageVars {
  Var<T> W;
  Var<T> b;
};

/// Graph-side handles for every model array.
template <typename T>
struct ModelVars {
  ModelConfig config;
  Var<T> embedding;
  LstmVars<T> enc_fwd;
  LstmVars<T> enc_bwd;
  std::vector<StageVars<T>> stages;
  Var<T> mask;
  LstmVars<T> dec;
  Var<T> out_proj;
  Var<T> gate_r;
  Var<T> gate_x;
  Var<T> gate_h;
  Var<T> copy_u;
};

/// Binds every array through `leaf(array, trainable) -> Var`, in visiting order.
template <typename T, typename Leaf>
ModelVars<T> bind_with(const ModelParams<T>& p, Leaf&& leaf) {
  std::vector<Var<T>> vars;
  p.visit([&](const std::string&, const nd::Array<T>& a, bool trainable) {
    vars.push_back(leaf(a, trainable));
  });
  std::size_t k = 0;
  auto next = [&] { return vars[k++]; };
  auto cell = [&](LstmVars<T>& c, const LstmParams<T>& src) {
    for (int i = 0; i < 4; ++i) {
      c.W[i] = next();
      c.b[i] = next();
    }
    c.hidden = src.hidden();
  };
  ModelVars<T> v;
  v.config = p.config;
  v.embedding = next();
  cell(v.enc_fwd, p.enc_fwd);
  cell(v.enc_bwd, p.enc_bwd);
  for (std::size_t s = 0; s < p.stages.size(); ++s) {
    const Var<T> W = next();
    v.stages.push_back({W, next()});
  }
  v.mask = next();
  cell(v.dec, p.dec);
  v.out_proj = next();
  v.gate_r = next();
  v.gate_x = next();
  v.gate_h = next();
  v.copy_u = next();
  return v;
}

/// Binds parameters as non-copying leaves; the params must outlive `g`.
template <typename T>
ModelVars<T> bind(Graph<T>& g, const ModelParams<T>& p) {
  return bind_with(p, [&](const nd::Array<T>& a, bool trainable) {
    return g.parameter(a, trainable);
  });
}

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

template <typename T>
LstmState<T> zero_state(Graph<T>& g, std::size_t hidden) {
  return {g.constant(nd::Array<T>({1, hidden})), g.constant(nd::Array<T>({1, hidden}))};
}

/// One gated recurrent step on a 1 x in input row.
template <typename T>
LstmState<T> lstm_step(const LstmVars<T>& cell, Var<T> x, const LstmState<T>& prev) {
  Graph<T>& g = *x.graph;
  const Var<T> xh = g.concat({x, prev.h}, 1);
  auto gate = [&](int k) { return g.add(g.matmul(xh, cell.W[k]), cell.b[k]); };
  const Var<T> i = g.sigmoid(gate(0));
  const Var<T> f = g.sigmoid(gate(1));
  const Var<T> o = g.sigmoid(gate(2));
  const Var<T> cand = g.tanh(gate(3));
  const Var<T> c = g.add(g.mul(f, prev.c), g.mul(i, cand));
  const Var<T> h = g.mul(o, g.tanh(c));
  return {h, c};
}

/// Hidden states in input order; with `reverse` the recurrence runs from the
/// last input to the first.
template <typename T>
std::vector<Var<T>> run_lstm(const LstmVars<T>& cell, const std::vector<Var<T>>& inputs,
                             bool reverse) {
  std::vector<Var<T>> out(inputs.size());
  if (inputs.empty()) return out;
  LstmState<T> state = zero_state(*inputs.front().graph, cell.hidden);
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    const std::size_t t = reverse ? inputs.size() - 1 - step : step;
    state = lstm_step(cell, inputs[t], state);
    out[t] = state.h;
  }
  return out;
}

/// l x d encoding: row t is [forward h_t, backward h_t].
template <typename T>
Var<T> encode_sequence(const ModelVars<T>& v, const std::vector<std::size_t>& ids) {
  if (ids.empty()) throw std::invalid_argument("encode_sequence: empty sequence");
  Graph<T>& g = *v.embedding.graph;
  std::vector<Var<T>> inputs;
  inputs.reserve(ids.size());
  for (auto id : ids) inputs.push_back(g.embedding_lookup(v.embedding, {id}));
  const auto fwd = run_lstm(v.enc_fwd, inputs, false);
  const auto bwd = run_lstm(v.enc_bwd, inputs, true);
  std::vector<Var<T>> rows;
  rows.reserve(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) rows.push_back(g.concat({fwd[t], bwd[t]}, 1));
  return g.concat(rows, 0);
}

template <typename T>
struct SequenceEncodings {
  Var<T> doc;     // l_D x d
  Var<T> answer;  // l_A x d
};

/// Both sequences pass through the same recurrent weights.
template <typename T>
SequenceEncodings<T> encode_sequences(const ModelVars<T>& v,
                                      const std::vector<std::size_t>& doc_ids,
                                      const std::vector<std::size_t>& answer_ids) {
  return {encode_sequence(v, doc_ids), encode_sequence(v, answer_ids)};
}

template <typename T>
Var<T> stage_transform(const StageVars<T>& s, Var<T> x) {
  Graph<T>& g = *x.graph;
  return g.sigmoid(g.add(g.matmul(x, s.W), s.b));
}

/// M[i][j] = F(left_i) . F(right_j)
template <typename T>
Var<T> affinity_matrix(const StageVars<T>& s, Var<T> left, Var<T> right) {
  if (left.cols() != right.cols() || left.cols() != s.W.rows()) {
    throw nd::ShapeError("affinity_matrix: width mismatch " + nd::shape_string(left.shape()) +
                         " vs " + nd::shape_string(right.shape()) + " for transform " +
                         nd::shape_string(s.W.shape()));
  }
  return nd::matmul(stage_transform(s, left), stage_transform(s, right), true);
}

/// Max over the answer axis per document position, then softmax over positions.
template <typename T>
Var<T> attention_from_affinity(Var<T> affinity) {
  Graph<T>& g = *affinity.graph;
  return g.softmax(g.max_over_axis(affinity, 1));
}

template <typename T>
Var<T> apply_attention(Var<T> doc, Var<T> attention) {
  return nd::scale_rows(doc, attention);
}

template <typename T>
struct StagedContext {
  Var<T> context;                  // C^(k)
  std::vector<Var<T>> attention;   // a^(1) .. a^(k)
};

/// Stage 1 attends the document against the answer; stage s >= 2 attends it
/// against the previous stage's context.
template <typename T>
StagedContext<T> multi_stage_context(const std::vector<StageVars<T>>& stages, Var<T> doc,
                                     Var<T> answer, int k) {
  if (k < 1) throw std::invalid_argument("multi_stage_context: stage count must be >= 1");
  if (stages.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("multi_stage_context: only " + std::to_string(stages.size()) +
                                " stage transforms for " + std::to_string(k) + " stages");
  }
  StagedContext<T> out;
  Var<T> other = answer;
  for (int s = 0; s < k; ++s) {
    const Var<T> a = attention_from_affinity(affinity_matrix(stages[s], doc, other));
    out.attention.push_back(a);
    out.context = apply_attention(doc, a);
    other = out.context;
  }
  return out;
}

/// Rows inside the span become the mask vector; all other rows pass through
/// unchanged (x * 1 + 0).
template <typename T>
Var<T> mask_answer(Var<T> context, corpus::Span span, Var<T> mask) {
  Graph<T>& g = *context.graph;
  const std::size_t n = context.rows();
  if (span.first > span.last || span.last >= n) {
    throw std::out_of_range("mask_answer: span [" + std::to_string(span.first) + ", " +
                            std::to_string(span.last) + "] outside " + std::to_string(n) +
                            " rows");
  }
  if (mask.cols() != context.cols()) {
    throw nd::ShapeError("mask_answer: mask " + nd::shape_string(mask.shape()) +
                         " vs context " + nd::shape_string(context.shape()));
  }
  nd::Array<T> keep({1, n}, T{1});
  nd::Array<T> indicator({n, 1});
  for (std::size_t i = span.first; i <= span.last; ++i) {
    keep[i] = T{0};
    indicator[i] = T{1};
  }
  const Var<T> kept = g.scale_rows(context, g.constant(std::move(keep)));
  const Var<T> masked = g.matmul(g.constant(std::move(indicator)), mask);
  return g.add(kept, masked);
}

template <typename T>
struct EncodedInput {
  Var<T> doc;                      // H_D
  Var<T> answer;                   // H_A
  std::vector<Var<T>> attention;   // per-stage a^(s); empty without attention
  Var<T> context;                  // C^(k), or H_D without attention
  Var<T> final;                    // C_final
  corpus::Span span;
};

template <typename T>
EncodedInput<T> encode(const ModelVars<T>& v, const std::vector<std::size_t>& doc_ids,
                       corpus::Span span) {
  if (doc_ids.empty()) throw std::invalid_argument("encode: empty document");
  if (span.first > span.last || span.last >= doc_ids.size()) {
    throw std::out_of_range("encode: answer span outside document");
  }
  const std::vector<std::size_t> answer_ids(doc_ids.begin() + static_cast<std::ptrdiff_t>(span.first),
                                            doc_ids.begin() + static_cast<std::ptrdiff_t>(span.last) + 1);
  EncodedInput<T> out;
  out.span = span;
  const auto enc = encode_sequences(v, doc_ids, answer_ids);
  out.doc = enc.doc;
  out.answer = enc.answer;
  if (v.config.attention) {
    auto staged = multi_stage_context(v.stages, enc.doc, enc.answer, v.config.stages);
    out.context = staged.context;
    out.attention = std::move(staged.attention);
  } else {
    out.context = enc.doc;
  }
  out.final = v.config.masking ? mask_answer(out.context, span, v.mask) : out.context;
  return out;
}

}  // namespace docqg::model
