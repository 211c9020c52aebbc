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

// Uhlmann fidelity and the first-order noise model for the overlap between
// the two input families as they pass through noisy gates.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "qsd/discrimination.hpp"
#include "qsd/engine.hpp"
#include "qsd/errors.hpp"
#include "qsd/noise.hpp"

namespace qsd {

namespace detail {

/// A with rho = A A^dagger, built from the eigendecomposition. Eigenvalues at
/// round-off level are dropped: their square roots (~1e-8) would otherwise
/// leak into the fidelity of rank-deficient states.
inline Matrix psd_factor(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  Eigen::VectorXd ev = solver.eigenvalues();
  if (ev.minCoeff() < -1e-8) {
    throw InvariantError("square root of a matrix with eigenvalue " + std::to_string(ev.minCoeff()));
  }
  const double cutoff = 64.0 * std::numeric_limits<double>::epsilon() * std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > cutoff ? std::sqrt(ev(i)) : 0.0;
  return solver.eigenvectors() * ev.asDiagonal();
}

}  // namespace detail

/// F = (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2, evaluated as the squared
/// trace norm of A^dagger B with rho = A A^dagger and sigma = B B^dagger.
inline double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ShapeError("fidelity of states with different dimension");
  const Matrix overlap = detail::psd_factor(rho.matrix()).adjoint() * detail::psd_factor(sigma.matrix());
  const double tr = Eigen::JacobiSVD<Matrix>(overlap).singularValues().sum();
  return tr * tr;
}

/// Single-qubit depolarizing channel with probability p applied to both
/// qubits of a 2-qubit pure state, repeated n times.
inline DensityMatrix noisy_state(std::span<const Complex> psi, double p, int n) {
  if (n < 0) throw DomainError("channel application count must be >= 0");
  DensityMatrix rho = pure_state(psi);
  if (rho.num_qubits() != 2) throw ShapeError("noisy_state expects a 2-qubit state");
  const KrausChannel channel = depolarizing_1q(p);
  for (int i = 0; i < n; ++i) {
    rho = apply_channel(rho, channel, {0});
    rho = apply_channel(rho, channel, {1});
  }
  return rho;
}

enum class FidelityKind {
  AANoisy,       // F(a, noisy a)
  BBNoisy,       // F(b, noisy b)
  ANoisyB,       // F(a, noisy b) = F(b, noisy a)
  NoisyANoisyB,  // F(noisy a, noisy b)
};

inline constexpr std::array<FidelityKind, 4> kAllFidelityKinds = {
    FidelityKind::AANoisy, FidelityKind::BBNoisy, FidelityKind::ANoisyB,
    FidelityKind::NoisyANoisyB};

inline std::string_view to_string(FidelityKind k) {
  switch (k) {
    case FidelityKind::AANoisy: return "a_noisya";
    case FidelityKind::BBNoisy: return "b_noisyb";
    case FidelityKind::ANoisyB: return "a_noisyb";
    case FidelityKind::NoisyANoisyB: return "noisya_noisyb";
  }
  return "?";
}

struct ExpansionInput {
  double mu_a = 0.5;
  double p = 0.0;
  int n = 0;

  void validate() const {
    if (n < 0 || n > 3) throw DomainError("n must lie in 0..3");
    check_probability(p, "p");
    if (!(mu_a > 0.0 && mu_a <= 1.0)) throw DomainError("mu_a must lie in (0, 1]");
  }
};

/// Lowest-order expansion in p of each fidelity.
inline double expansion(FidelityKind kind, const ExpansionInput& in) {
  in.validate();
  const double mu2 = in.mu_a * in.mu_a;
  const double np = in.n * in.p;
  switch (kind) {
    case FidelityKind::AANoisy: return 1.0 - np;
    case FidelityKind::BBNoisy: return 1.0 - 1.5 * np;
    case FidelityKind::ANoisyB: return 0.5 * mu2 + 0.5 * np * (1.0 - 2.0 * mu2);
    case FidelityKind::NoisyANoisyB:
      return 0.5 * mu2 +
             np * (1.0 + in.mu_a / std::sqrt(2.0) - 2.0 * mu2 + std::sqrt(1.0 - 0.5 * mu2));
  }
  return 0.0;
}

/// The same quantity evaluated numerically with a = mu_a and the b+ state.
inline double numeric_fidelity(FidelityKind kind, const ExpansionInput& in) {
  in.validate();
  const auto a = state_a(in.mu_a);
  const auto b = state_b(+1);
  switch (kind) {
    case FidelityKind::AANoisy:
      return uhlmann_fidelity(pure_state(a), noisy_state(a, in.p, in.n));
    case FidelityKind::BBNoisy:
      return uhlmann_fidelity(pure_state(b), noisy_state(b, in.p, in.n));
    case FidelityKind::ANoisyB:
      return uhlmann_fidelity(pure_state(a), noisy_state(b, in.p, in.n));
    case FidelityKind::NoisyANoisyB:
      return uhlmann_fidelity(noisy_state(a, in.p, in.n), noisy_state(b, in.p, in.n));
  }
  return 0.0;
}

/// Three noisy channel applications per data qubit in the short circuit.
inline constexpr int kDataQubitChannelCount = 3;

/// Predicted minimal loss of the trained short circuit: F(noisy a, noisy b)
/// at n = 3.
inline double model_check(double mu_a, double p) {
  return expansion(FidelityKind::NoisyANoisyB, {mu_a, p, kDataQubitChannelCount});
}

}  // namespace qsd
