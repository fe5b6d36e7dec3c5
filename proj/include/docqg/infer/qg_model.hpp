#pragma once

// Step-model adapter around the trained encoder/decoder, plus detokenization.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "docqg/corpus/vocab.hpp"
#include "docqg/infer/search.hpp"
#include "docqg/model/decoder.hpp"

namespace docqg::infer {

/// Encodes one example once; every step extends the same graph. The params
/// and example must outlive the adapter.
template <typename T>
class QgStepModel {
 public:
  using State = model::LstmState<T>;

  QgStepModel(const model::ModelParams<T>& params, const model::PreparedExample& ex)
      : vars_(model::bind(graph_, params)),
        encoded_(model::encode(vars_, ex.doc_ids, ex.span)),
        ctx_(model::make_decoder_context(encoded_.final, ex.copy)) {}

  QgStepModel(const QgStepModel&) = delete;
  QgStepModel& operator=(const QgStepModel&) = delete;

  State initial() { return model::zero_state(graph_, vars_.config.hidden); }

  StepResult<State> step(const State& state, std::size_t prev) {
    const auto out = model::decode_step(vars_, ctx_, prev, state);
    StepResult<State> r;
    r.next = out.state;
    r.probs = to_double(out.p_final.value());
    r.attention = to_double(out.attention.value());
    return r;
  }

  std::size_t sos() const { return corpus::kSos; }
  std::size_t eos() const { return corpus::kEos; }

  /// Per-stage document attention a^(1) .. a^(k); empty without attention.
  std::vector<std::vector<double>> stage_attention() const {
    std::vector<std::vector<double>> out;
    for (const auto& a : encoded_.attention) out.push_back(to_double(a.value()));
    return out;
  }

 private:
  static std::vector<double> to_double(const nd::Array<T>& a) {
    return std::vector<double>(a.values().begin(), a.values().end());
  }

  nd::Graph<T> graph_;
  model::ModelVars<T> vars_;
  model::EncodedInput<T> encoded_;
  model::DecoderContext<T> ctx_;
};

/// Maps extended ids to text: vocabulary ids through `vocab`, copy ids to
/// their document surface form, joined by single spaces.
inline std::string detokenize(const std::vector<std::size_t>& ids, const corpus::Vocab& vocab,
                              const model::CopyMap& copy) {
  std::string out;
  for (std::size_t id : ids) {
    if (!out.empty()) out += ' ';
    if (id < vocab.size()) {
      out += vocab.token(id);
    } else if (id - vocab.size() < copy.oov_tokens.size() && copy.vocab_size == vocab.size()) {
      out += copy.oov_tokens[id - vocab.size()];
    } else {
      throw std::out_of_range("detokenize: id " + std::to_string(id) +
                              " outside the extended vocabulary");
    }
  }
  return out;
}

}  // namespace docqg::infer
