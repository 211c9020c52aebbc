// Copyright 2026 The QSD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qsd/errors.hpp"

namespace qsd {

using GradientVector = std::vector<double>;

/// Two-term shift rule: g_i = (C(theta + pi/2 e_i) - C(theta - pi/2 e_i)) / 2.
/// Exact for costs that are first-order trigonometric polynomials in each
/// angle, which holds when every angle drives one exp(-i theta sigma / 2).
/// Makes exactly 2 * thetas.size() calls to `cost_at`.
template <class CostFn>
GradientVector parameter_shift_gradient(CostFn&& cost_at, std::span<const double> thetas) {
  constexpr double shift = std::numbers::pi / 2.0;
  std::vector<double> shifted(thetas.begin(), thetas.end());
  GradientVector grad(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    shifted[i] = thetas[i] + shift;
    const double plus = cost_at(std::span<const double>(shifted));
    shifted[i] = thetas[i] - shift;
    const double minus = cost_at(std::span<const double>(shifted));
    shifted[i] = thetas[i];
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw EvaluationError("non-finite cost while shifting parameter " + std::to_string(i));
    }
    grad[i] = 0.5 * (plus - minus);
  }
  return grad;
}

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState fresh(std::size_t n, AdamConfig config = {}) {
    return AdamState{config, 0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  }
};

/// Bias-corrected Adam update. Returns the advanced state and new angles.
inline std::pair<AdamState, std::vector<double>> adam_step(AdamState state,
                                                           std::vector<double> thetas,
                                                           std::span<const double> grad) {
  if (thetas.size() != grad.size() || state.m.size() != grad.size() ||
      state.v.size() != grad.size()) {
    throw ShapeError("Adam state, parameters and gradient differ in length");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grad[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    const double denom = std::sqrt(v_hat) + c.epsilon;
    if (denom > 0.0) thetas[i] -= c.lr * m_hat / denom;
  }
  return {std::move(state), std::move(thetas)};
}

}  // namespace qsd
