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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qsd/engine.hpp"
#include "qsd/errors.hpp"
#include "qsd/linalg.hpp"

namespace qsd {

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

/// A CPTP map on one or two qubits in operator-sum form.
class KrausChannel {
 public:
  KrausChannel(int arity, double probability, std::vector<Matrix> operators)
      : arity_(arity), probability_(probability), operators_(std::move(operators)) {
    if (arity_ != 1 && arity_ != 2) throw ShapeError("channel arity must be 1 or 2");
    const Eigen::Index d = Eigen::Index{1} << arity_;
    if (operators_.empty()) throw ShapeError("channel needs at least one Kraus operator");
    for (const auto& e : operators_) {
      if (e.rows() != d || e.cols() != d) {
        throw ShapeError("Kraus operator has wrong dimension for arity " +
                         std::to_string(arity_));
      }
    }
    if (completeness_error() > 1e-10) {
      throw InvariantError("Kraus operators do not satisfy sum E^dagger E = I");
    }
  }

  int arity() const { return arity_; }
  double probability() const { return probability_; }
  const std::vector<Matrix>& operators() const { return operators_; }

  /// max |sum_k E_k^dagger E_k - I|.
  double completeness_error() const {
    const Eigen::Index d = Eigen::Index{1} << arity_;
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& e : operators_) sum += e.adjoint() * e;
    return (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }

 private:
  int arity_;
  double probability_;
  std::vector<Matrix> operators_;
};

/// {sqrt(1 - 3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}.
inline KrausChannel depolarizing_1q(double p) {
  check_probability(p, "depolarizing probability");
  const double a = std::sqrt(1.0 - 0.75 * p);
  const double b = std::sqrt(0.25 * p);
  return KrausChannel(1, p,
                      {Matrix(a * pauli::identity()), Matrix(b * pauli::x()),
                       Matrix(b * pauli::y()), Matrix(b * pauli::z())});
}

/// The 16 tensor products E_i (x) E_j of the single-qubit operators.
inline KrausChannel depolarizing_2q(double p) {
  const KrausChannel single = depolarizing_1q(p);
  std::vector<Matrix> ops;
  ops.reserve(16);
  for (const auto& ei : single.operators()) {
    for (const auto& ej : single.operators()) {
      Matrix k(4, 4);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) k.block(2 * r, 2 * c, 2, 2) = ei(r, c) * ej;
      ops.push_back(std::move(k));
    }
  }
  return KrausChannel(2, p, std::move(ops));
}

/// In-place sum_k E_k m E_k^dagger on `targets`.
inline void apply_channel_inplace(Matrix& m, const KrausChannel& channel,
                                  std::span<const int> targets, int n) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  Matrix term;
  for (const auto& e : channel.operators()) {
    term = m;
    kernels::conjugate(term, e, targets, n);
    out += term;
  }
  m = std::move(out);
}

inline DensityMatrix apply_channel(const DensityMatrix& rho, const KrausChannel& channel,
                                   std::span<const int> targets) {
  if (static_cast<int>(targets.size()) != channel.arity()) {
    throw ShapeError("channel of arity " + std::to_string(channel.arity()) + " given " +
                     std::to_string(targets.size()) + " target(s)");
  }
  check_targets(targets, rho.num_qubits());
  Matrix m = rho.matrix();
  apply_channel_inplace(m, channel, targets, rho.num_qubits());
  return DensityMatrix::unchecked(std::move(m));
}

inline DensityMatrix apply_channel(const DensityMatrix& rho, const KrausChannel& channel,
                                   std::initializer_list<int> targets) {
  const std::vector<int> t(targets);
  return apply_channel(rho, channel, std::span<const int>(t));
}

/// Gate-noise levels. The one-qubit probability is always 4/5 of the
/// two-qubit one.
class NoiseConfig {
 public:
  NoiseConfig() = default;
  explicit NoiseConfig(double p_2q) : p_2q_(p_2q) { check_probability(p_2q, "p_2q"); }

  static NoiseConfig noiseless() { return NoiseConfig(); }

  double two_qubit() const { return p_2q_; }
  double one_qubit() const { return 0.8 * p_2q_; }
  bool is_noiseless() const { return p_2q_ == 0.0; }

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;

 private:
  double p_2q_ = 0.0;
};

/// Gate followed by its depolarizing channel (two-qubit after CNOT,
/// single-qubit after each rotation), using the closed-form map. With
/// `adjoint` the Heisenberg-picture action is applied instead: channel
/// first, then U^dagger . U.
inline void apply_noisy_gate_inplace(Matrix& m, const GateOp& g, const NoiseConfig& noise, int n,
                                     bool adjoint = false) {
  const bool noisy = g.noisy && !noise.is_noiseless();
  const double p = g.is_rotation() ? noise.one_qubit() : noise.two_qubit();
  if (!adjoint) apply_gate_inplace(m, g, n);
  if (noisy) {
    for (int q : g.targets) kernels::depolarize(m, q, p, n);
  }
  if (adjoint) apply_gate_inplace(m, g, n, true);
}

}  // namespace qsd
