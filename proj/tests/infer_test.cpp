#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "docqg/infer/qg_model.hpp"
#include "docqg/infer/search.hpp"
#include "test_support.hpp"

namespace infer = docqg::infer;
namespace model = docqg::model;
namespace corpus = docqg::corpus;
using Ids = std::vector<std::size_t>;

namespace {

// Distribution as a function of the emitted prefix.
struct PrefixStub {
  struct State {
    Ids prefix;
    bool started = false;
  };
  std::function<std::vector<double>(const Ids&)> dist;
  std::size_t eos_id = 2;
  std::size_t sos_id = 0;
  int calls = 0;

  State initial() { return {}; }
  infer::StepResult<State> step(const State& s, std::size_t prev) {
    ++calls;
    State next = s;
    if (s.started) next.prefix.push_back(prev);
    next.started = true;
    return {dist(next.prefix), next, {}};
  }
  std::size_t sos() const { return sos_id; }
  std::size_t eos() const { return eos_id; }
};

static_assert(infer::StepModel<PrefixStub>);
static_assert(infer::StepModel<infer::QgStepModel<float>>);

// Same stub as tests/oracles/beam_oracle.py.
std::vector<double> oracle_dist(const Ids& prefix) {
  double h = 0.0, w = 1.0;
  for (auto t : prefix) {
    h += static_cast<double>(t + 1) * w;
    w *= 4.0;
  }
  std::vector<double> z = {2 * std::sin(1.3 * h + 0.7), 2 * std::sin(2.1 * h + 0.1),
                           2 * std::sin(0.5 * h + 1.9) - 2.0};
  const double m = std::max({z[0], z[1], z[2]});
  double s = 0.0;
  for (auto& v : z) s += (v = std::exp(v - m));
  for (auto& v : z) v /= s;
  return z;
}

// Random stub: a seeded table of distributions keyed by prefix.
PrefixStub random_stub(std::uint64_t seed, std::size_t vocab, std::size_t eos) {
  PrefixStub s;
  s.eos_id = eos;
  s.dist = [seed, vocab](const Ids& prefix) {
    std::uint64_t key = seed * 1000003u;
    for (auto t : prefix) key = key * 31 + t + 1;
    std::mt19937_64 rng(key);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> p(vocab);
    double sum = 0.0;
    for (auto& v : p) sum += (v = u(rng) * u(rng));
    for (auto& v : p) v /= sum;
    return p;
  };
  return s;
}

struct Best {
  Ids tokens;
  double score = -1e300;
};

// Exhaustive search over every EOS-terminated sequence of at most max_len steps.
Best brute_force(PrefixStub& stub, std::size_t vocab, std::size_t max_len, bool normalize) {
  Best best;
  bool have = false;
  std::function<void(Ids&, double)> rec = [&](Ids& prefix, double lp) {
    if (prefix.size() >= max_len) return;
    const auto p = stub.dist(prefix);
    for (std::size_t w = 0; w < vocab; ++w) {
      const double total = lp + std::log(p[w]);
      if (w == stub.eos_id) {
        const double s = normalize ? total / static_cast<double>(prefix.size() + 1) : total;
        Ids full = prefix;
        full.push_back(w);
        Ids best_full = best.tokens;
        best_full.push_back(stub.eos_id);
        if (!have || s > best.score || (s == best.score && full < best_full)) {
          best = {prefix, s};
          have = true;
        }
      } else {
        prefix.push_back(w);
        rec(prefix, total);
        prefix.pop_back();
      }
    }
  };
  Ids empty;
  rec(empty, 0.0);
  return best;
}

}  // namespace

TEST(Greedy, StopsImmediatelyOnEos) {
  PrefixStub s;
  s.dist = [](const Ids&) { return std::vector<double>{0.05, 0.05, 0.9}; };
  const auto d = infer::greedy_decode(s, 10);
  EXPECT_TRUE(d.tokens.empty());
  EXPECT_TRUE(d.finished);
  EXPECT_EQ(s.calls, 1);
}

TEST(Greedy, ScriptedSequence) {
  PrefixStub s;
  s.dist = [](const Ids& p) {
    return p.empty() ? std::vector<double>{0.1, 0.7, 0.2} : std::vector<double>{0.1, 0.1, 0.8};
  };
  const auto d = infer::greedy_decode(s, 10);
  EXPECT_EQ(d.tokens, (Ids{1}));
  EXPECT_NEAR(d.log_prob, std::log(0.7) + std::log(0.8), 1e-15);
}

TEST(Greedy, TiesGoToLowestIdAndMaxLenStops) {
  PrefixStub s;
  s.dist = [](const Ids&) { return std::vector<double>{0.2, 0.4, 0.4}; };
  s.eos_id = 2;
  const auto d = infer::greedy_decode(s, 4);
  EXPECT_EQ(d.tokens, (Ids{1, 1, 1, 1}));
  EXPECT_FALSE(d.finished);
  EXPECT_THROW(infer::greedy_decode(s, 0), std::invalid_argument);
}

TEST(BeamSearch, MatchesEnumerationOracle) {
  // Frozen from tests/oracles/beam_oracle.py.
  struct Case {
    std::size_t max_len;
    bool normalize;
    Ids tokens;
    double score;
  };
  const std::vector<Case> cases = {
      {1, false, {}, -1.855950675277986},       {2, false, {}, -1.855950675277986},
      {3, false, {}, -1.855950675277986},       {1, true, {}, -1.855950675277986},
      {2, true, {1}, -1.5864051137648025},      {3, true, {0, 1}, -1.292470901526551},
  };
  for (const auto& c : cases) {
    PrefixStub s;
    s.dist = oracle_dist;
    const auto d = infer::beam_search(s, {20, c.max_len, c.normalize});
    EXPECT_EQ(d.tokens, c.tokens) << c.max_len << " " << c.normalize;
    EXPECT_TRUE(d.finished);
    const double score = c.normalize ? infer::normalized_score(d) : d.log_prob;
    EXPECT_NEAR(score, c.score, 1e-12);
  }
}

TEST(BeamSearch, SufficientWidthFindsGlobalArgmax) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (std::size_t max_len = 1; max_len <= 3; ++max_len) {
      for (bool normalize : {false, true}) {
        auto s = random_stub(seed, 3, seed % 3);
        const auto best = brute_force(s, 3, max_len, normalize);
        const auto d = infer::beam_search(s, {27, max_len, normalize});
        ASSERT_TRUE(d.finished);
        EXPECT_EQ(d.tokens, best.tokens) << seed << " " << max_len;
        const double score = normalize ? infer::normalized_score(d) : d.log_prob;
        EXPECT_NEAR(score, best.score, 1e-12);
      }
    }
  }
}

TEST(BeamSearch, WidthOneEqualsGreedy) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const std::size_t vocab = 2 + seed % 6;
    auto a = random_stub(seed, vocab, seed % vocab);
    auto b = random_stub(seed, vocab, seed % vocab);
    const std::size_t max_len = 1 + seed % 7;
    const auto g = infer::greedy_decode(a, max_len);
    const auto d = infer::beam_search(b, {1, max_len, true});
    EXPECT_EQ(d.tokens, g.tokens);
    EXPECT_EQ(d.finished, g.finished);
    EXPECT_DOUBLE_EQ(d.log_prob, g.log_prob);
  }
}

TEST(BeamSearch, UniformStubReturnsTieBreakLowest) {
  PrefixStub s;
  s.dist = [](const Ids&) { return std::vector<double>(3, 1.0 / 3.0); };
  // every finished sequence has the same per-step score; [0, 0, EOS] sorts first
  EXPECT_EQ(infer::beam_search(s, {27, 3, true}).tokens, (Ids{0, 0}));
  // raw scores favour the shortest sequence
  EXPECT_EQ(infer::beam_search(s, {27, 3, false}).tokens, (Ids{}));
}

TEST(BeamSearch, RawScoreIsMonotoneInWidthOnOracleStub) {
  for (std::size_t max_len = 1; max_len <= 3; ++max_len) {
    double prev = -1e300;
    for (std::size_t b = 1; b <= 16; ++b) {
      PrefixStub s;
      s.dist = oracle_dist;
      const auto d = infer::beam_search(s, {b, max_len, false});
      if (!d.finished) continue;
      EXPECT_GE(d.log_prob, prev) << "beam " << b << " max_len " << max_len;
      prev = d.log_prob;
    }
  }
}

TEST(BeamSearch, LogProbIsSumOfStepLogs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = random_stub(seed, 5, 4);
    const auto d = infer::beam_search(s, {4, 6, true});
    Ids prefix;
    double lp = 0.0;
    for (auto t : d.tokens) {
      EXPECT_NE(t, s.eos_id);
      lp += std::log(s.dist(prefix)[t]);
      prefix.push_back(t);
    }
    if (d.finished) lp += std::log(s.dist(prefix)[s.eos_id]);
    EXPECT_NEAR(d.log_prob, lp, 1e-12);
  }
}

TEST(BeamSearch, FinishedHypothesesAreNotExtended) {
  PrefixStub s;
  s.dist = [](const Ids& p) {
    EXPECT_TRUE(p.empty() || p.back() != 2) << "extended after EOS";
    return std::vector<double>{0.3, 0.3, 0.4};
  };
  infer::beam_search(s, {5, 4, true});
}

TEST(BeamSearch, RejectsZeroWidth) {
  PrefixStub s;
  s.dist = oracle_dist;
  EXPECT_THROW(infer::beam_search(s, {0, 3, true}), std::invalid_argument);
  EXPECT_THROW(infer::beam_search(s, {2, 0, true}), std::invalid_argument);
}

TEST(Detokenize, MapsVocabularyAndCopyIds) {
  const corpus::Vocab vocab({"what", "year", "?"});
  const auto copy = model::make_copy_map({"in", "1985", "?"}, vocab);
  const Ids ids = {vocab.id("what"), vocab.id("year"), copy.position_ids[1], vocab.id("?")};
  EXPECT_EQ(infer::detokenize(ids, vocab, copy), "what year 1985 ?");
  EXPECT_EQ(infer::detokenize({}, vocab, copy), "");
  EXPECT_EQ(infer::detokenize({vocab.id("what"), corpus::kUnk}, vocab, copy), "what <unk>");
  EXPECT_THROW(infer::detokenize({copy.extended_size()}, vocab, copy), std::out_of_range);
}

TEST(QgStepModel, BeamOneEqualsGreedyAndAttentionSumsToOne) {
  const auto vocab = docqg::testing::numbered_vocab(12);
  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.emb_dim = 6;
  c.hidden = 8;
  c.stages = 2;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto params = docqg::testing::random_model<float>(c, seed);
    const auto ex = model::prepare(
        docqg::testing::make_example("x", {"w1", "w3", "oov", "w5", "w2"}, corpus::Span{1, 2},
                                     {"w4", "oov"}),
        vocab);
    infer::QgStepModel<float> a(params, ex);
    infer::QgStepModel<float> b(params, ex);
    const auto g = infer::greedy_decode(a, 8);
    const auto d = infer::beam_search(b, {1, 8, true});
    EXPECT_EQ(g.tokens, d.tokens);
    for (const auto& stage : a.stage_attention()) {
      double s = 0.0;
      for (double v : stage) s += v;
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
    ASSERT_FALSE(g.attention.empty());
    for (const auto& att : g.attention) {
      EXPECT_EQ(att.size(), 5u);
      double s = 0.0;
      for (double v : att) s += v;
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}
