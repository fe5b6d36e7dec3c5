#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "docqg/nd/array.hpp"

namespace docqg::model {

using nd::Array;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t emb_dim = 64;
  std::size_t hidden = 64;  // d: encoder output width and decoder state width
  int stages = 2;
  bool attention = true;
  bool masking = true;

  void validate() const {
    if (vocab_size == 0) throw std::invalid_argument("config: vocab_size must be positive");
    if (emb_dim == 0) throw std::invalid_argument("config: emb_dim must be positive");
    if (hidden < 2 || hidden % 2 != 0) {
      throw std::invalid_argument("config: hidden size must be even and >= 2");
    }
    if (stages < 1) throw std::invalid_argument("config: stage count must be >= 1");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Gates in order input, forget, output, candidate. Each W maps the
/// concatenation [x, h] to one gate.
template <typename T>
struct LstmParams {
  std::array<Array<T>, 4> W;
  std::array<Array<T>, 4> b;

  std::size_t hidden() const { return b[0].cols(); }
};

/// F(x) = sigmoid(x W + b) for one attention stage, shared by both sides.
template <typename T>
struct StageParams {
  Array<T> W;
  Array<T> b;
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  Array<T> embedding;
  bool embedding_frozen = true;
  LstmParams<T> enc_fwd;
  LstmParams<T> enc_bwd;
  std::vector<StageParams<T>> stages;
  Array<T> mask;        // 1 x d
  LstmParams<T> dec;
  Array<T> out_proj;    // 2d x |V|
  Array<T> gate_r;      // d x 1
  Array<T> gate_x;      // (d + e) x 1
  Array<T> gate_h;      // d x 1
  Array<T> copy_u;      // 1 x d

  /// Visits every array as f(name, array, trainable) in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    static const char* gate_names[4] = {"i", "f", "o", "g"};
    auto lstm = [&](const std::string& prefix, auto& cell) {
      for (int k = 0; k < 4; ++k) {
        f(prefix + ".W_" + gate_names[k], cell.W[k], true);
        f(prefix + ".b_" + gate_names[k], cell.b[k], true);
      }
    };
    f(std::string("embedding"), self.embedding, !self.embedding_frozen);
    lstm("enc.fwd", self.enc_fwd);
    lstm("enc.bwd", self.enc_bwd);
    for (std::size_t s = 0; s < self.stages.size(); ++s) {
      const std::string p = "stage" + std::to_string(s + 1);
      f(p + ".W", self.stages[s].W, true);
      f(p + ".b", self.stages[s].b, true);
    }
    f(std::string("mask"), self.mask, true);
    lstm("dec", self.dec);
    f(std::string("out.V"), self.out_proj, true);
    f(std::string("gate.w_r"), self.gate_r, true);
    f(std::string("gate.w_x"), self.gate_x, true);
    f(std::string("gate.w_h"), self.gate_h, true);
    f(std::string("copy.u"), self.copy_u, true);
  }
};

namespace detail {

template <typename T>
Array<T> uniform(std::mt19937_64& rng, nd::Shape shape, double bound) {
  Array<T> a(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : a.values()) v = static_cast<T>(dist(rng));
  return a;
}

template <typename T>
LstmParams<T> init_lstm(std::mt19937_64& rng, std::size_t input, std::size_t hidden,
                        double bound) {
  LstmParams<T> cell;
  for (int k = 0; k < 4; ++k) {
    cell.W[k] = uniform<T>(rng, {input + hidden, hidden}, bound);
    cell.b[k] = Array<T>({1, hidden});
  }
  return cell;
}

}  // namespace detail

inline constexpr double kWeightInitBound = 0.08;
inline constexpr double kMaskInitBound = 0.1;

/// Fresh parameters: weights uniform(-0.08, 0.08), biases zero, mask vector
/// uniform(-0.1, 0.1). `embedding` must be |V| x emb_dim.
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, Array<T> embedding, std::uint64_t seed,
                           bool embedding_frozen = true) {
  config.validate();
  if (embedding.rows() != config.vocab_size || embedding.cols() != config.emb_dim ||
      embedding.rank() != 2) {
    throw std::invalid_argument("init_params: embedding shape " +
                                nd::shape_string(embedding.shape()) +
                                " does not match vocab/emb_dim");
  }
  const std::size_t d = config.hidden;
  const std::size_t e = config.emb_dim;
  std::mt19937_64 rng(seed);
  ModelParams<T> p;
  p.config = config;
  p.embedding = std::move(embedding);
  p.embedding_frozen = embedding_frozen;
  p.enc_fwd = detail::init_lstm<T>(rng, e, d / 2, kWeightInitBound);
  p.enc_bwd = detail::init_lstm<T>(rng, e, d / 2, kWeightInitBound);
  if (config.attention) {
    for (int s = 0; s < config.stages; ++s) {
      p.stages.push_back({detail::uniform<T>(rng, {d, d}, kWeightInitBound), Array<T>({1, d})});
    }
  }
  p.mask = detail::uniform<T>(rng, {1, d}, kMaskInitBound);
  p.dec = detail::init_lstm<T>(rng, d + e, d, kWeightInitBound);
  p.out_proj = detail::uniform<T>(rng, {2 * d, config.vocab_size}, kWeightInitBound);
  p.gate_r = detail::uniform<T>(rng, {d, 1}, kWeightInitBound);
  p.gate_x = detail::uniform<T>(rng, {d + e, 1}, kWeightInitBound);
  p.gate_h = detail::uniform<T>(rng, {d, 1}, kWeightInitBound);
  p.copy_u = detail::uniform<T>(rng, {1, d}, kWeightInitBound);
  return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& src) {
  ModelParams<To> dst;
  dst.config = src.config;
  dst.embedding_frozen = src.embedding_frozen;
  dst.stages.resize(src.stages.size());
  std::vector<const Array<From>*> from;
  src.visit([&](const std::string&, const Array<From>& a, bool) { from.push_back(&a); });
  std::size_t k = 0;
  dst.visit([&](const std::string&, Array<To>& a, bool) { a = nd::cast<To>(*from[k++]); });
  return dst;
}

}  // namespace docqg::model
