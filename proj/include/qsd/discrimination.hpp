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

// Input-state families, sampling, the outcome-to-label map and the cost.

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsd/ansatz.hpp"
#include "qsd/engine.hpp"
#include "qsd/errors.hpp"

namespace qsd {

// Reference loss levels for the balanced task at mu_a = 0.25, sigma_a = 0.01.
inline constexpr double kOptimalUnambiguousLoss = 0.166;
inline constexpr double kEqualProbabilityLoss = 0.635;
inline constexpr double kRandomOutcomeLoss = 2.0 / 3.0;

enum class Label { A, B };

/// Finer-grained input class; B+ and B- both carry label B.
enum class InputClass { A, BPlus, BMinus };

inline Label label_of(InputClass c) { return c == InputClass::A ? Label::A : Label::B; }

inline std::string_view to_string(InputClass c) {
  switch (c) {
    case InputClass::A: return "a";
    case InputClass::BPlus: return "b+";
    case InputClass::BMinus: return "b-";
  }
  return "?";
}

struct StateFamilyParams {
  double mu_a = 0.5;
  double sigma_a = 0.15;

  void validate() const {
    if (!(mu_a > 0.0 && mu_a <= 1.0)) throw DomainError("mu_a must lie in (0, 1]");
    if (!(sigma_a >= 0.0) || !std::isfinite(sigma_a)) throw DomainError("sigma_a must be >= 0");
  }
};

/// (sqrt(1 - a^2), 0, a, 0).
inline std::array<Complex, 4> state_a(double a) {
  return {Complex(std::sqrt(1.0 - a * a)), 0.0, Complex(a), 0.0};
}

/// (0, +-1/sqrt(2), 1/sqrt(2), 0).
inline std::array<Complex, 4> state_b(int sign) {
  const double r = 1.0 / std::sqrt(2.0);
  return {0.0, Complex(sign >= 0 ? r : -r), Complex(r), 0.0};
}

struct LabeledInput {
  DensityMatrix rho;
  InputClass input_class;
  // Sampled a for class A, 0 otherwise.
  double a_value = 0.0;

  Label label() const { return label_of(input_class); }
};

inline LabeledInput make_input(InputClass c, double a = 0.0) {
  if (c == InputClass::A) return {pure_state(state_a(a)), c, a};
  return {pure_state(state_b(c == InputClass::BPlus ? 1 : -1)), c, 0.0};
}

/// a ~ Gaussian(mu_a, sigma_a) restricted to (0, 1] by rejection.
template <class Rng>
double sample_a(Rng& rng, const StateFamilyParams& params) {
  if (params.sigma_a == 0.0) return params.mu_a;
  std::normal_distribution<double> gauss(params.mu_a, params.sigma_a);
  for (;;) {
    const double a = gauss(rng);
    if (a > 0.0 && a <= 1.0) return a;
  }
}

/// Each of A, B+, B- with probability 1/3.
template <class Rng>
LabeledInput sample_input(Rng& rng, const StateFamilyParams& params) {
  std::uniform_int_distribution<int> pick(0, 2);
  switch (pick(rng)) {
    case 0: return make_input(InputClass::A, sample_a(rng, params));
    case 1: return make_input(InputClass::BPlus);
    default: return make_input(InputClass::BMinus);
  }
}

template <class Rng>
std::vector<LabeledInput> sample_inputs(Rng& rng, const StateFamilyParams& params,
                                        std::size_t count) {
  params.validate();
  std::vector<LabeledInput> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_input(rng, params));
  return out;
}

struct Classification {
  double p_correct = 0.0;
  double p_err = 0.0;
  double p_inc = 0.0;
};

/// Outcome labels: 00 -> a, 01 -> b, 10 -> a, 11 -> inconclusive.
inline Classification classify_outcomes(const OutcomeDistribution& d, Label label) {
  if (label == Label::A) return {d.p00 + d.p10, d.p01, d.p11};
  return {d.p01, d.p00 + d.p10, d.p11};
}

struct CostParams {
  double alpha_err = 40.0;
  double alpha_inc = 40.0;

  void validate() const {
    if (!(alpha_err > 0.0) || !(alpha_inc > 0.0)) {
      throw DomainError("cost weights must be positive");
    }
  }
};

struct CostBreakdown {
  double cost = 0.0;
  double p_err = 0.0;
  double p_inc = 0.0;
  double loss = 0.0;

  double success() const { return 1.0 - loss; }
  friend bool operator==(const CostBreakdown&, const CostBreakdown&) = default;
};

inline CostBreakdown make_breakdown(double p_err, double p_inc, const CostParams& cp) {
  return {cp.alpha_err * p_err + cp.alpha_inc * p_inc, p_err, p_inc, p_err + p_inc};
}

/// Batch-mean error and inconclusive probabilities and the weighted cost.
inline CostBreakdown batch_cost(std::span<const LabeledInput> inputs,
                                std::span<const OutcomeDistribution> dists, const CostParams& cp) {
  if (inputs.empty()) throw DomainError("batch is empty");
  if (inputs.size() != dists.size()) throw ShapeError("inputs and distributions differ in length");
  double err = 0.0, inc = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Classification c = classify_outcomes(dists[i], inputs[i].label());
    err += c.p_err;
    inc += c.p_inc;
  }
  const auto n = static_cast<double>(inputs.size());
  return make_breakdown(err / n, inc / n, cp);
}

/// batch_cost with distributions produced by a compiled measurement.
inline CostBreakdown batch_cost(std::span<const LabeledInput> inputs,
                                const EffectiveMeasurement& measurement, const CostParams& cp) {
  std::vector<OutcomeDistribution> dists;
  dists.reserve(inputs.size());
  for (const auto& in : inputs) dists.push_back(measurement(in.rho));
  return batch_cost(inputs, dists, cp);
}

}  // namespace qsd
