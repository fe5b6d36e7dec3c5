#pragma once

// Greedy and beam search over any step-wise model.
//
// A model M provides
//   typename M::State
//   State initial();
//   StepResult<State> step(const State&, std::size_t prev);
//   std::size_t sos() const, eos() const;
// where the first step receives sos() as the previous token.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace docqg::infer {

inline constexpr std::size_t kDefaultMaxLen = 30;
inline constexpr double kLogFloor = 1e-12;

template <typename State>
struct StepResult {
  std::vector<double> probs;      // next-token distribution
  State next;
  std::vector<double> attention;  // optional per-step attention for dumps
};

template <typename M>
concept StepModel = requires(M& m, const typename M::State& s, std::size_t prev) {
  { m.initial() } -> std::convertible_to<typename M::State>;
  { m.step(s, prev) } -> std::convertible_to<StepResult<typename M::State>>;
  { m.sos() } -> std::convertible_to<std::size_t>;
  { m.eos() } -> std::convertible_to<std::size_t>;
};

inline double log_prob(double p) { return std::log(std::max(p, kLogFloor)); }

struct Decoded {
  std::vector<std::size_t> tokens;  // without the final EOS
  double log_prob = 0.0;            // includes the EOS step when finished
  bool finished = false;
  std::vector<std::vector<double>> attention;  // one entry per emitted step
};

/// Ranking score; the length counts the EOS step of finished hypotheses.
inline double normalized_score(const Decoded& d) {
  const std::size_t len = d.tokens.size() + (d.finished ? 1 : 0);
  return len == 0 ? d.log_prob : d.log_prob / static_cast<double>(len);
}

/// Lowest index among the maximal entries.
inline std::size_t argmax(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("argmax: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

template <StepModel M>
Decoded greedy_decode(M& model, std::size_t max_len = kDefaultMaxLen) {
  if (max_len == 0) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  Decoded out;
  auto state = model.initial();
  std::size_t prev = model.sos();
  for (std::size_t t = 0; t < max_len; ++t) {
    auto r = model.step(state, prev);
    const std::size_t w = argmax(r.probs);
    out.log_prob += log_prob(r.probs[w]);
    out.attention.push_back(std::move(r.attention));
    if (w == model.eos()) {
      out.finished = true;
      break;
    }
    out.tokens.push_back(w);
    state = std::move(r.next);
    prev = w;
  }
  return out;
}

struct BeamOptions {
  std::size_t beam_size = 10;
  std::size_t max_len = kDefaultMaxLen;
  bool length_normalize = true;
};

template <StepModel M>
Decoded beam_search(M& model, const BeamOptions& opts) {
  using State = typename M::State;
  if (opts.beam_size == 0) throw std::invalid_argument("beam_search: beam_size must be >= 1");
  if (opts.max_len == 0) throw std::invalid_argument("beam_search: max_len must be >= 1");
  struct Hyp {
    Decoded d;
    State state;
  };
  std::vector<Hyp> beam;
  beam.push_back({Decoded{}, model.initial()});

  for (std::size_t t = 0; t < opts.max_len; ++t) {
    if (std::all_of(beam.begin(), beam.end(), [](const Hyp& h) { return h.d.finished; })) break;
    // (score, token, hyp index); finished hypotheses carry over with their EOS.
    struct Cand {
      double score;
      std::size_t token;
      std::size_t hyp;
    };
    std::vector<Cand> cands;
    std::vector<StepResult<State>> results(beam.size());
    for (std::size_t h = 0; h < beam.size(); ++h) {
      const Decoded& d = beam[h].d;
      if (d.finished) {
        cands.push_back({d.log_prob, model.eos(), h});
        continue;
      }
      const std::size_t prev = d.tokens.empty() ? model.sos() : d.tokens.back();
      results[h] = model.step(beam[h].state, prev);
      for (std::size_t w = 0; w < results[h].probs.size(); ++w) {
        cands.push_back({d.log_prob + log_prob(results[h].probs[w]), w, h});
      }
    }
    const std::size_t keep = std::min(opts.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return std::tie(a.token, a.hyp) < std::tie(b.token, b.hyp);
                      });
    std::vector<Hyp> next;
    next.reserve(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      const Cand& cand = cands[c];
      const Hyp& src = beam[cand.hyp];
      if (src.d.finished) {
        next.push_back(src);
        continue;
      }
      Hyp h{src.d, results[cand.hyp].next};
      h.d.log_prob = cand.score;
      h.d.attention.push_back(results[cand.hyp].attention);
      if (cand.token == model.eos()) {
        h.d.finished = true;
      } else {
        h.d.tokens.push_back(cand.token);
      }
      next.push_back(std::move(h));
    }
    beam = std::move(next);
  }

  const bool any_finished =
      std::any_of(beam.begin(), beam.end(), [](const Hyp& h) { return h.d.finished; });
  // Equal scores fall back to the lexicographically smaller id sequence.
  auto ids = [&](const Decoded& d) {
    auto v = d.tokens;
    if (d.finished) v.push_back(model.eos());
    return v;
  };
  const Hyp* best = nullptr;
  double best_score = 0.0;
  for (const Hyp& h : beam) {
    if (any_finished && !h.d.finished) continue;
    const double s = opts.length_normalize ? normalized_score(h.d) : h.d.log_prob;
    if (!best || s > best_score || (s == best_score && ids(h.d) < ids(best->d))) {
      best = &h;
      best_score = s;
    }
  }
  return best->d;
}

}  // namespace docqg::infer
