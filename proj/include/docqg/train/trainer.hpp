#pragma once

// Teacher-forced training: mini-batch gradients, global-norm clipping and Adam
// with decoupled weight decay.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "docqg/model/decoder.hpp"

namespace docqg::train {

using model::ModelParams;
using model::PreparedExample;
using nd::Array;

/// Loss or parameters stopped being finite.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr = 0.001;
  double l2 = 1e-6;
  std::size_t batch = 8;
  std::size_t steps = 2000;
  double clip = 5.0;
  std::uint64_t seed = 7;

  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train: lr must be >= 0");
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw std::invalid_argument("train: l2 must be >= 0");
    if (batch == 0) throw std::invalid_argument("train: batch size must be positive");
    if (steps == 0) throw std::invalid_argument("train: step count must be positive");
    if (!(clip > 0.0)) throw std::invalid_argument("train: clip norm must be > 0");
  }
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of arrays. Weight decay is applied directly to the
/// weights (w -= lr * l2 * w) rather than through the moment estimates.
template <typename T>
class Adam {
 public:
  Adam(double lr, double l2, AdamHyper h = {}) : lr_(lr), l2_(l2), h_(h) {}

  void step(const std::vector<Array<T>*>& params, const std::vector<Array<T>>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Adam: gradient count mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(h_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(h_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Array<T>& w = *params[k];
      const Array<T>& g = grads[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        const double m = h_.beta1 * static_cast<double>(m_[k][i]) + (1.0 - h_.beta1) * gi;
        const double v = h_.beta2 * static_cast<double>(v_[k][i]) + (1.0 - h_.beta2) * gi * gi;
        m_[k][i] = static_cast<T>(m);
        v_[k][i] = static_cast<T>(v);
        const double wi = static_cast<double>(w[i]);
        const double update = lr_ * (m / c1) / (std::sqrt(v / c2) + h_.eps) + lr_ * l2_ * wi;
        w[i] = static_cast<T>(wi - update);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  double lr_;
  double l2_;
  AdamHyper h_;
  std::size_t t_ = 0;
  std::vector<Array<T>> m_;
  std::vector<Array<T>> v_;
};

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_global_norm(std::vector<Array<T>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (T x : g.values()) sq += static_cast<double>(x) * static_cast<double>(x);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads) {
      for (auto& x : g.values()) x = static_cast<T>(static_cast<double>(x) * s);
    }
  }
  return norm;
}

template <typename T>
struct ExampleGradient {
  double loss = 0.0;
  std::vector<Array<T>> grads;  // one per trainable array, visiting order
};

/// Pointers to the trainable arrays, in visiting order.
template <typename T>
std::vector<Array<T>*> trainable_arrays(ModelParams<T>& params) {
  std::vector<Array<T>*> out;
  params.visit([&](const std::string&, Array<T>& a, bool trainable) {
    if (trainable) out.push_back(&a);
  });
  return out;
}

template <typename T>
ExampleGradient<T> example_gradient(const ModelParams<T>& params, const PreparedExample& ex) {
  nd::Graph<T> g;
  std::vector<nd::Var<T>> trainable;
  std::vector<const Array<T>*> values;
  const auto v = model::bind_with(params, [&](const Array<T>& a, bool t) {
    const auto var = g.parameter(a, t);
    if (t) {
      trainable.push_back(var);
      values.push_back(&a);
    }
    return var;
  });
  const auto loss = model::build_loss(v, ex).loss;
  auto grads = g.backward(loss);
  ExampleGradient<T> out;
  out.loss = static_cast<double>(loss.value()[0]);
  for (std::size_t k = 0; k < trainable.size(); ++k) {
    out.grads.push_back(grads.has(trainable[k]) ? grads.at(trainable[k])
                                                : Array<T>(values[k]->shape()));
  }
  return out;
}

template <typename T>
double example_loss(const ModelParams<T>& params, const PreparedExample& ex) {
  nd::Graph<T> g;
  const auto v = model::bind(g, params);
  return static_cast<double>(model::build_loss(v, ex).loss.value()[0]);
}

/// Token-weighted mean negative log-likelihood over a data set.
template <typename T>
double corpus_nll(const ModelParams<T>& params, const std::vector<PreparedExample>& data) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : data) {
    total += example_loss(params, ex) * static_cast<double>(ex.targets.size());
    tokens += ex.targets.size();
  }
  if (tokens == 0) throw std::invalid_argument("corpus_nll: no target tokens");
  return total / static_cast<double>(tokens);
}

struct StepLog {
  std::size_t step = 0;
  double loss = 0.0;       // mean over the batch
  double grad_norm = 0.0;  // before clipping
};

/// Cycles through the data in a fresh seeded permutation every epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    if (n == 0) throw std::invalid_argument("train: empty training set");
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t pos_ = 0;
};

template <typename T>
class Trainer {
 public:
  Trainer(ModelParams<T>& params, const TrainConfig& config)
      : params_(params), config_(config), adam_(config.lr, config.l2) {
    config.validate();
    arrays_ = trainable_arrays(params_);
  }

  /// One optimizer step on `batch`; returns the log entry for it.
  StepLog step(const std::vector<const PreparedExample*>& batch) {
    if (batch.empty()) throw std::invalid_argument("train: empty batch");
    const std::size_t step_no = adam_.steps() + 1;
    std::vector<Array<T>> sum;
    double loss = 0.0;
    for (const auto* ex : batch) {
      ExampleGradient<T> eg;
      try {
        eg = example_gradient(params_, *ex);
      } catch (const nd::NonFiniteError& e) {
        throw NumericalError("training diverged at step " + std::to_string(step_no) +
                             " (example " + ex->id + "): " + e.what());
      }
      if (!std::isfinite(eg.loss)) {
        throw NumericalError("training diverged at step " + std::to_string(step_no) +
                             ": loss is " + std::to_string(eg.loss));
      }
      loss += eg.loss;
      if (sum.empty()) {
        sum = std::move(eg.grads);
      } else {
        for (std::size_t k = 0; k < sum.size(); ++k) {
          auto s = sum[k].values();
          const auto g = eg.grads[k].values();
          for (std::size_t i = 0; i < s.size(); ++i) s[i] += g[i];
        }
      }
    }
    const T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
    for (auto& g : sum) {
      for (auto& x : g.values()) x *= inv;
    }
    StepLog log;
    log.step = step_no;
    log.loss = loss / static_cast<double>(batch.size());
    log.grad_norm = clip_global_norm(sum, config_.clip);
    if (!std::isfinite(log.grad_norm)) {
      throw NumericalError("training diverged at step " + std::to_string(step_no) +
                           ": gradient norm is not finite");
    }
    adam_.step(arrays_, sum);
    for (const auto* a : arrays_) {
      if (!a->all_finite()) {
        throw NumericalError("training diverged at step " + std::to_string(step_no) +
                             ": parameters are not finite");
      }
    }
    return log;
  }

  std::size_t steps_taken() const { return adam_.steps(); }

 private:
  ModelParams<T>& params_;
  TrainConfig config_;
  Adam<T> adam_;
  std::vector<Array<T>*> arrays_;
};

struct TrainOptions {
  std::size_t eval_every = 0;  // 0: never evaluate during training
  std::optional<double> target_nll;  // stop once the training NLL falls below
  std::function<void(const StepLog&)> on_step;
  std::function<void(std::size_t step, double train_nll, std::optional<double> dev_nll)> on_eval;
};

template <typename T>
struct TrainResult {
  std::vector<StepLog> log;
  std::size_t steps = 0;
  double train_nll = 0.0;  // at the last evaluation
  std::optional<double> best_dev_nll;
  std::size_t best_step = 0;
  ModelParams<T> best;  // lowest dev NLL, or the final parameters without dev data
  bool reached_target = false;
};

/// Runs up to config.steps optimizer steps. With dev data the parameters with
/// the lowest dev NLL seen at an evaluation point are kept in `best`.
template <typename T>
TrainResult<T> train(ModelParams<T>& params, const std::vector<PreparedExample>& data,
                     const TrainConfig& config, const TrainOptions& opts = {},
                     const std::vector<PreparedExample>* dev = nullptr) {
  config.validate();
  Trainer<T> trainer(params, config);
  BatchSampler sampler(data.size(), config.seed);
  TrainResult<T> result;
  auto evaluate = [&](std::size_t step) {
    result.train_nll = corpus_nll(params, data);
    std::optional<double> dev_nll;
    if (dev && !dev->empty()) {
      dev_nll = corpus_nll(params, *dev);
      if (!result.best_dev_nll || *dev_nll < *result.best_dev_nll) {
        result.best_dev_nll = dev_nll;
        result.best_step = step;
        result.best = params;
      }
    }
    if (opts.on_eval) opts.on_eval(step, result.train_nll, dev_nll);
    return opts.target_nll && result.train_nll < *opts.target_nll;
  };

  for (std::size_t s = 1; s <= config.steps; ++s) {
    std::vector<const PreparedExample*> batch;
    for (auto i : sampler.next(config.batch)) batch.push_back(&data[i]);
    result.log.push_back(trainer.step(batch));
    result.steps = s;
    if (opts.on_step) opts.on_step(result.log.back());
    const bool eval_now = (opts.eval_every > 0 && s % opts.eval_every == 0) || s == config.steps;
    if (eval_now && evaluate(s)) {
      result.reached_target = true;
      break;
    }
  }
  if (!result.best_dev_nll) {
    result.best = params;
    result.best_step = result.steps;
  }
  return result;
}

}  // namespace docqg::train
