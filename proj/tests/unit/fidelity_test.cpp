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


#include "qsd/fidelity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "qsd/experiments.hpp"

namespace qsd {
namespace {

// Closed forms for n rounds of single-qubit depolarizing on both qubits; s is
// the Bloch shrink factor (1 - p)^n of the composed channel.
double shrink(double p, int n) { return std::pow(1.0 - p, n); }

// Product state of two pure qubits: ((1 + s) / 2)^2.
double exact_a_noisya(double p, int n) {
  const double s = shrink(p, n);
  return std::pow((1 + s) / 2, 2);
}

// Maximally entangled state: s^2 + (1 - s^2) / 4.
double exact_b_noisyb(double p, int n) {
  const double s = shrink(p, n);
  return s * s + (1 - s * s) / 4;
}

// <a| noisy b |a> with |<a|b>|^2 = mu^2 / 2.
double exact_a_noisyb(double mu, double p, int n) {
  const double s = shrink(p, n);
  return s * s * mu * mu / 2 + (1 - s * s) / 4;
}

std::vector<Complex> vec(const std::array<Complex, 4>& a) { return {a.begin(), a.end()}; }

TEST(Uhlmann, SelfFidelityIsOne) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 30; ++i) {
    const DensityMatrix rho = DensityMatrix::from_matrix(oracle::random_density(1 + i % 3, rng));
    EXPECT_NEAR(uhlmann_fidelity(rho, rho), 1.0, 1e-9);
  }
}

TEST(Uhlmann, FamilyOverlapAtZeroNoise) {
  for (double mu : {0.25, 0.5, 0.75}) {
    EXPECT_NEAR(uhlmann_fidelity(pure_state(state_a(mu)), pure_state(state_b(+1))), mu * mu / 2, 1e-9);
  }
}

TEST(Uhlmann, OrthogonalStates) {
  EXPECT_NEAR(uhlmann_fidelity(DensityMatrix::basis_state(2, 1), DensityMatrix::basis_state(2, 2)), 0.0, 1e-12);
}

TEST(Uhlmann, SymmetricAndBounded) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const DensityMatrix r = DensityMatrix::from_matrix(oracle::random_density(2, rng, 1 + i % 4));
    const DensityMatrix s = DensityMatrix::from_matrix(oracle::random_density(2, rng, 1 + (i / 4) % 4));
    const double f = uhlmann_fidelity(r, s);
    EXPECT_NEAR(f, uhlmann_fidelity(s, r), 1e-9);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0 + 1e-9);
  }
}

TEST(Uhlmann, PureStatesGiveSquaredOverlap) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto phi = oracle::random_pure(2, rng), psi = oracle::random_pure(2, rng);
    Complex ov = 0.0;
    for (std::size_t k = 0; k < 4; ++k) ov += std::conj(phi[k]) * psi[k];
    EXPECT_NEAR(uhlmann_fidelity(pure_state(phi), pure_state(psi)), std::norm(ov), 1e-9);
  }
}

TEST(Uhlmann, Errors) {
  EXPECT_THROW(uhlmann_fidelity(DensityMatrix::maximally_mixed(1), DensityMatrix::maximally_mixed(2)),
               ShapeError);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.1;
  neg(1, 1) = -0.1;
  EXPECT_THROW(uhlmann_fidelity(DensityMatrix::maximally_mixed(1), DensityMatrix::unchecked(neg)),
               InvariantError);
}

TEST(NoisyState, ZeroRoundsIsIdentity) {
  const auto psi = vec(state_a(0.4));
  EXPECT_LT((noisy_state(psi, 0.3, 0).matrix() - pure_state(psi).matrix()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(noisy_state(psi, 0.1, -1), DomainError);
  EXPECT_THROW(noisy_state(std::vector<Complex>{1.0, 0.0}, 0.1, 1), ShapeError);
}

TEST(NoisyState, ProductStateFidelity) {
  const auto a = vec(state_a(0.5));
  const double f = uhlmann_fidelity(pure_state(a), noisy_state(a, 0.01, 3));
  EXPECT_NEAR(f, exact_a_noisya(0.01, 3), 1e-12);
  // First-order value 1 - np = 0.97; the exact value sits 5.2e-4 above it,
  // i.e. the second-order term 3 (np)^2 / 4 minus higher orders.
  EXPECT_NEAR(f, 0.97, 0.75 * 0.03 * 0.03);
}

TEST(NoisyState, EntangledStateFidelity) {
  const auto b = vec(state_b(+1));
  const double f = uhlmann_fidelity(pure_state(b), noisy_state(b, 0.01, 3));
  EXPECT_NEAR(f, exact_b_noisyb(0.01, 3), 1e-12);
  // First-order value 1 - 3np/2 = 0.955; second order adds 3 (np)^2 / 2.
  EXPECT_NEAR(f, 0.955, 1.5 * 0.03 * 0.03);
}

TEST(NoisyState, PurityDecaysWithRounds) {
  for (double p : {0.001, 0.01, 0.1, 0.5}) {
    for (const auto& psi : {vec(state_a(0.3)), vec(state_b(-1))}) {
      double last = 1.0 + 1e-12;
      for (int n = 0; n <= 6; ++n) {
        const double purity = noisy_state(psi, p, n).purity();
        EXPECT_LE(purity, last + 1e-12);
        last = purity;
      }
    }
  }
}

TEST(Expansion, NoiselessValues) {
  for (double mu : {0.25, 0.5, 1.0}) {
    const ExpansionInput in{mu, 0.0, 3};
    EXPECT_EQ(expansion(FidelityKind::AANoisy, in), 1.0);
    EXPECT_EQ(expansion(FidelityKind::BBNoisy, in), 1.0);
    EXPECT_DOUBLE_EQ(expansion(FidelityKind::ANoisyB, in), mu * mu / 2);
    EXPECT_DOUBLE_EQ(expansion(FidelityKind::NoisyANoisyB, in), mu * mu / 2);
  }
}

TEST(Expansion, Arithmetic) {
  EXPECT_NEAR(expansion(FidelityKind::AANoisy, {0.5, 0.1, 3}), 0.7, 1e-15);
  for (double p : {0.001, 0.01, 0.1}) {
    EXPECT_NEAR(expansion(FidelityKind::NoisyANoisyB, {0.5, p, 3}),
                0.125 + 3 * p * (1 + 0.5 / std::sqrt(2.0) - 0.5 + std::sqrt(0.875)), 1e-15);
  }
  // 1 + 0.5/sqrt 2 - 0.5 + sqrt(0.875) = 1.78897 (to 5 places).
  EXPECT_NEAR(model_check(0.5, 0.01), 0.125 + 0.03 * 1.78897, 1e-6);
}

TEST(Expansion, Validation) {
  EXPECT_THROW(expansion(FidelityKind::AANoisy, {0.5, 0.1, 4}), DomainError);
  EXPECT_THROW(expansion(FidelityKind::AANoisy, {0.5, 0.1, -1}), DomainError);
  EXPECT_THROW(expansion(FidelityKind::AANoisy, {0.0, 0.1, 1}), DomainError);
  EXPECT_THROW(expansion(FidelityKind::AANoisy, {0.5, 1.2, 1}), DomainError);
}

TEST(Expansion, NoisyPairIncreasesWithRounds) {
  for (double mu : {0.1, 0.25, 0.5, 0.75, 1.0})
    for (double p : {0.001, 0.01, 0.1})
      for (int n = 0; n < 3; ++n)
        EXPECT_LT(expansion(FidelityKind::NoisyANoisyB, {mu, p, n}),
                  expansion(FidelityKind::NoisyANoisyB, {mu, p, n + 1}));
}

TEST(ModelCheck, NoiselessPredictions) {
  EXPECT_DOUBLE_EQ(model_check(0.5, 0.0), 0.125);
  EXPECT_DOUBLE_EQ(model_check(0.25, 0.0), 0.03125);
}

TEST(NumericFidelity, MatchesClosedForms) {
  for (double mu : {0.25, 0.5, 0.75})
    for (double p : {0.001, 0.01, 0.1})
      for (int n = 0; n <= 3; ++n) {
        const ExpansionInput in{mu, p, n};
        EXPECT_NEAR(numeric_fidelity(FidelityKind::AANoisy, in), exact_a_noisya(p, n), 1e-10);
        EXPECT_NEAR(numeric_fidelity(FidelityKind::BBNoisy, in), exact_b_noisyb(p, n), 1e-10);
        EXPECT_NEAR(numeric_fidelity(FidelityKind::ANoisyB, in), exact_a_noisyb(mu, p, n), 1e-10);
      }
}

TEST(NumericFidelity, NoisyPairAgainstFrozenValues) {
  // Independent dense computation (Kraus sums, scipy sqrtm).
  EXPECT_NEAR(numeric_fidelity(FidelityKind::NoisyANoisyB, {0.5, 0.01, 3}), 0.1791344586640301, 1e-9);
  EXPECT_NEAR(numeric_fidelity(FidelityKind::NoisyANoisyB, {0.25, 0.1, 2}), 0.41389042365631973, 1e-9);
  EXPECT_NEAR(numeric_fidelity(FidelityKind::NoisyANoisyB, {0.75, 0.001, 1}), 0.2825163864054408, 1e-9);
  EXPECT_NEAR(numeric_fidelity(FidelityKind::NoisyANoisyB, {0.5, 0.1, 3}), 0.5789410079311124, 1e-9);
}

TEST(NumericFidelity, FirstOrderSlopesAgree) {
  // d/dp at p = 0, by a one-sided difference, equals the expansion's slope.
  const double h = 1e-6;
  for (double mu : {0.25, 0.5, 0.75})
    for (FidelityKind k : kAllFidelityKinds)
      for (int n = 1; n <= 3; ++n) {
        const double num = (numeric_fidelity(k, {mu, h, n}) - numeric_fidelity(k, {mu, 0.0, n})) / h;
        const double model = (expansion(k, {mu, h, n}) - expansion(k, {mu, 0.0, n})) / h;
        EXPECT_NEAR(num, model, 0.02 * std::abs(model) + 0.02) << to_string(k) << " mu=" << mu << " n=" << n;
      }
}

TEST(NumericFidelity, ResidualIsHigherOrder) {
  // The noisy-pair fidelity carries a (np)^(3/2) term (square roots of O(p)
  // eigenvalues), the others a (np)^2 term.
  for (const auto& row : fidelity_table({0.25, 0.5, 0.75}, {0.001, 0.01, 0.1})) {
    const double np = row.n * row.p;
    EXPECT_LE(row.abs_diff, 0.6 * std::pow(np, 1.5) + 1.5 * np * np + 1e-9)
        << to_string(row.kind) << " mu=" << row.mu_a << " p=" << row.p << " n=" << row.n;
  }
}

}  // namespace
}  // namespace qsd
