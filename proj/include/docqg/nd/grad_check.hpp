#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "docqg/nd/graph.hpp"

namespace docqg::nd {

template <typename T>
struct NamedArray {
  std::string name;
  Array<T>* value = nullptr;
};

struct ParamCheck {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double tolerance = 0.0;

  bool passed() const {
    return std::all_of(params.begin(), params.end(),
                       [](const ParamCheck& p) { return p.passed; });
  }
  double worst() const {
    double w = 0.0;
    for (const auto& p : params) w = std::max(w, p.max_rel_error);
    return w;
  }
};

/// Relative error |a - n| / max(|a|, |n|, floor); the floor keeps entries
/// whose true gradient is zero from dividing round-off by round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Optional hook applied to each analytic gradient before comparison; used to
/// prove the checker notices a wrong gradient.
template <typename T>
using GradientTamper = void (*)(std::size_t param_index, Array<T>& grad);

/// Compares reverse-mode gradients of `build` against central differences.
/// `build(graph, vars)` must record a scalar loss from the parameter vars; the
/// record is replayed (not rebuilt) for each perturbation, so `build` must not
/// branch on parameter values.
template <typename T, typename Build>
GradCheckReport grad_check(Build&& build, std::span<const NamedArray<T>> params,
                           T epsilon, double tolerance,
                           GradientTamper<T> tamper = nullptr) {
  if (!(epsilon > T{0})) throw std::invalid_argument("grad_check: epsilon must be > 0");
  Graph<T> g;
  std::vector<Var<T>> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(g.parameter(*p.value));
  const Var<T> loss = build(g, std::span<const Var<T>>(vars));
  const Gradients<T> grads = g.backward(loss);

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Array<T>& value = *params[k].value;
    Array<T> analytic = grads.has(vars[k]) ? grads.at(vars[k]) : Array<T>(value.shape());
    if (tamper) tamper(k, analytic);

    ParamCheck check;
    check.name = params[k].name;
    check.elements = value.size();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T saved = value[i];
      value[i] = saved + epsilon;
      g.forward();
      const double plus = static_cast<double>(loss.value()[0]);
      value[i] = saved - epsilon;
      g.forward();
      const double minus = static_cast<double>(loss.value()[0]);
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * static_cast<double>(epsilon));
      const double a = static_cast<double>(analytic[i]);
      check.max_rel_error = std::max(check.max_rel_error, relative_error(a, numeric));
      check.max_abs_error = std::max(check.max_abs_error, std::abs(a - numeric));
    }
    check.passed = check.max_rel_error < tolerance;
    report.params.push_back(std::move(check));
  }
  g.forward();
  return report;
}

}  // namespace docqg::nd
