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


#include "qsd/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "qsd/ansatz.hpp"
#include "qsd/discrimination.hpp"

namespace qsd {
namespace {

TEST(ParameterShift, ConstantCost) {
  const std::vector<double> t = {0.1, 2.0, -3.0};
  const auto g = parameter_shift_gradient([](std::span<const double>) { return 4.2; }, t);
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(ParameterShift, Cosine) {
  for (double t0 : {0.0, 0.3, 1.2, -2.5, 4.0}) {
    const std::vector<double> t = {t0};
    const auto g = parameter_shift_gradient([](std::span<const double> x) { return std::cos(x[0]); }, t);
    EXPECT_NEAR(g[0], -std::sin(t0), 1e-15);
  }
}

TEST(ParameterShift, ExactOnSingleRotationCosts) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coef(-5.0, 5.0), ang(-6.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
    std::vector<double> t = {ang(rng), ang(rng), ang(rng)};
    const std::size_t i = static_cast<std::size_t>(trial) % 3;
    auto cost = [&](std::span<const double> x) {
      return c0 + c1 * std::cos(x[i]) + c2 * std::sin(x[i]);
    };
    const auto g = parameter_shift_gradient(cost, t);
    EXPECT_NEAR(g[i], -c1 * std::sin(t[i]) + c2 * std::cos(t[i]), 1e-12);
    for (std::size_t j = 0; j < 3; ++j)
      if (j != i) EXPECT_EQ(g[j], 0.0);
  }
}

TEST(ParameterShift, EvaluationCount) {
  for (std::size_t n : {1u, 5u, 12u, 30u}) {
    std::size_t calls = 0;
    const std::vector<double> t(n, 0.5);
    parameter_shift_gradient([&](std::span<const double>) { ++calls; return 0.0; }, t);
    EXPECT_EQ(calls, 2 * n);
  }
}

TEST(ParameterShift, ShiftsOneComponentAtATime) {
  const std::vector<double> t = {0.1, 0.2, 0.3, 0.4};
  parameter_shift_gradient(
      [&](std::span<const double> x) {
        int moved = 0;
        for (std::size_t j = 0; j < t.size(); ++j) {
          if (x[j] != t[j]) {
            ++moved;
            EXPECT_NEAR(std::abs(x[j] - t[j]), std::numbers::pi / 2, 1e-15);
          }
        }
        EXPECT_EQ(moved, 1);
        return 0.0;
      },
      t);
}

TEST(ParameterShift, NonFiniteCostIsAnError) {
  const std::vector<double> t = {0.0, 1.0};
  EXPECT_THROW(parameter_shift_gradient([](std::span<const double> x) { return x[1] > 1.5 ? NAN : 0.0; }, t),
               EvaluationError);
}

TEST(ParameterShift, MatchesFiniteDifferencesOnShortCircuit) {
  std::mt19937_64 rng(2);
  const auto inputs = sample_inputs(rng, StateFamilyParams{0.5, 0.15}, 30);
  const auto thetas = oracle::random_angles(12, rng);
  const MeasurementCompiler compiler(CircuitKind::Short, NoiseConfig(0.01));
  auto cost = [&](std::span<const double> x) {
    return batch_cost(inputs, compiler.compile(x).measurement, CostParams{}).cost;
  };
  const auto g = parameter_shift_gradient(cost, thetas);
  const double h = 1e-5;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    auto up = thetas, down = thetas;
    up[i] += h;
    down[i] -= h;
    EXPECT_NEAR(g[i], (cost(up) - cost(down)) / (2 * h), 1e-5) << i;
  }
}

TEST(Adam, ZeroGradientKeepsParameters) {
  const std::vector<double> t = {0.3, -1.0, 2.0};
  const std::vector<double> g(3, 0.0);
  auto [state, next] = adam_step(AdamState::fresh(3), t, g);
  EXPECT_EQ(next, t);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  const std::vector<double> t = {0.0, 0.0, 0.0, 0.0};
  const std::vector<double> g = {3.0, -0.2, 1e-3, -50.0};
  auto [state, next] = adam_step(AdamState::fresh(4), t, g);
  for (std::size_t i = 0; i < 4; ++i) {
    // m_hat / (sqrt(v_hat) + eps) = g / (|g| + eps).
    const double expected = -0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(next[i], expected, 1e-15);
    EXPECT_NEAR(next[i], -0.01 * std::copysign(1.0, g[i]), 1e-7);
  }
}

TEST(Adam, ScalarRecurrenceOracle) {
  // Hand-rolled scalar recurrence, g then -g.
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.7;
  double m = 0, v = 0, th = 1.0;
  const double grads[] = {g, -g};
  AdamState state = AdamState::fresh(1);
  std::vector<double> theta = {1.0};
  for (int t = 1; t <= 2; ++t) {
    const double gt = grads[t - 1];
    m = b1 * m + (1 - b1) * gt;
    v = b2 * v + (1 - b2) * gt * gt;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    th -= lr * mh / (std::sqrt(vh) + eps);
    const std::vector<double> gv = {gt};
    std::tie(state, theta) = adam_step(state, theta, gv);
    EXPECT_NEAR(state.m[0], m, 1e-15);
    EXPECT_NEAR(state.v[0], v, 1e-15);
    EXPECT_NEAR(theta[0], th, 1e-15);
  }
  // After g, -g: m = 0.9 * 0.1 g - 0.1 g = -0.01 g, on its way back to zero.
  EXPECT_NEAR(state.m[0], -0.01 * g, 1e-15);
  EXPECT_GE(state.v[0], 0.0);
}

TEST(Adam, InvariantUnderGradientRescaling) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  AdamConfig cfg;
  cfg.epsilon = 0.0;
  AdamState a = AdamState::fresh(5, cfg), b = AdamState::fresh(5, cfg);
  std::vector<double> ta(5, 0.2), tb(5, 0.2);
  const double c = 37.5;
  for (int step = 0; step < 50; ++step) {
    std::vector<double> g(5), cg(5);
    for (std::size_t i = 0; i < 5; ++i) {
      g[i] = n01(rng);
      cg[i] = c * g[i];
    }
    std::tie(a, ta) = adam_step(a, ta, g);
    std::tie(b, tb) = adam_step(b, tb, cg);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(ta[i], tb[i], 1e-13);
  }
}

TEST(Adam, QuadraticBowl) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> start(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 6;
    std::vector<double> t(n);
    for (auto& x : t) x = start(rng);
    AdamState s = AdamState::fresh(n);
    auto cost = [](const std::vector<double>& x) {
      double c = 0;
      for (double v : x) c += v * v;
      return c;
    };
    for (int step = 0; step < 2000 && cost(t) >= 1e-4; ++step) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = 2 * t[i];
      std::tie(s, t) = adam_step(s, t, g);
    }
    EXPECT_LT(cost(t), 1e-4);
  }
}

TEST(Adam, ShapeMismatch) {
  const std::vector<double> g = {1.0, 2.0};
  EXPECT_THROW(adam_step(AdamState::fresh(3), std::vector<double>(3), g), ShapeError);
}

}  // namespace
}  // namespace qsd
