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

// The two discriminator circuits and the measure-and-branch pipeline.
//
// Register layout (4 qubits): qubits 0 and 1 are measurement qubits starting
// in |0>, qubits 2 and 3 hold the two-qubit input. The pipeline is
//
//   U  ->  measure qubit 0 (m0)  ->  V1 if m0 = 1, V2 if m0 = 0  ->  measure qubit 1 (m1)
//
// with every gate followed by its depolarizing channel.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsd/engine.hpp"
#include "qsd/errors.hpp"
#include "qsd/linalg.hpp"
#include "qsd/noise.hpp"

namespace qsd {

inline constexpr int kRegisterQubits = 4;
inline constexpr int kMidQubit = 0;
inline constexpr int kFinalQubit = 1;

enum class CircuitKind { Long, Short };

inline constexpr std::size_t parameter_count(CircuitKind kind) {
  return kind == CircuitKind::Long ? 30 : 12;
}

inline std::string_view to_string(CircuitKind kind) {
  return kind == CircuitKind::Long ? "long" : "short";
}

inline std::optional<CircuitKind> parse_circuit_kind(std::string_view s) {
  if (s == "long") return CircuitKind::Long;
  if (s == "short") return CircuitKind::Short;
  return std::nullopt;
}

using ParameterVector = std::vector<double>;

/// Parameter slots [begin, end) feeding one circuit block.
struct ParamRange {
  std::size_t begin;
  std::size_t end;
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

inline ParamRange u_params(CircuitKind kind) {
  return kind == CircuitKind::Long ? ParamRange{0, 12} : ParamRange{0, 6};
}

/// which = 1 (applied after m0 = 1) or 2 (after m0 = 0).
inline ParamRange v_params(CircuitKind kind, int which) {
  if (which != 1 && which != 2) throw DomainError("V block index must be 1 or 2");
  if (kind == CircuitKind::Long) return which == 1 ? ParamRange{12, 21} : ParamRange{21, 30};
  return which == 1 ? ParamRange{6, 9} : ParamRange{9, 12};
}

inline void check_parameter_count(CircuitKind kind, std::size_t n) {
  if (n != parameter_count(kind)) {
    throw ParameterCountError(std::string(to_string(kind)) + " circuit takes " +
                              std::to_string(parameter_count(kind)) + " parameters, got " +
                              std::to_string(n));
  }
}

namespace detail {

inline void push_rotation(std::vector<GateOp>& gates, GateKind kind, int qubit,
                          std::span<const double> thetas, std::size_t slot) {
  gates.push_back(GateOp::rotation(kind, qubit, thetas[slot], slot));
}

// RX, RY, RZ on `qubit` from three consecutive slots.
inline void push_xyz(std::vector<GateOp>& gates, int qubit, std::span<const double> thetas,
                     std::size_t first) {
  push_rotation(gates, GateKind::RX, qubit, thetas, first);
  push_rotation(gates, GateKind::RY, qubit, thetas, first + 1);
  push_rotation(gates, GateKind::RZ, qubit, thetas, first + 2);
}

// RX, RZ, RX on `qubit` from three consecutive slots.
inline void push_xzx(std::vector<GateOp>& gates, int qubit, std::span<const double> thetas,
                     std::size_t first) {
  push_rotation(gates, GateKind::RX, qubit, thetas, first);
  push_rotation(gates, GateKind::RZ, qubit, thetas, first + 1);
  push_rotation(gates, GateKind::RX, qubit, thetas, first + 2);
}

}  // namespace detail

/// The U block.
inline std::vector<GateOp> build_u(CircuitKind kind, std::span<const double> thetas) {
  check_parameter_count(kind, thetas.size());
  std::vector<GateOp> gates;
  if (kind == CircuitKind::Short) {
    gates.push_back(GateOp::cnot(3, 0));
    gates.push_back(GateOp::cnot(3, 1));
    gates.push_back(GateOp::cnot(2, 0));
    gates.push_back(GateOp::cnot(2, 1));
    detail::push_xzx(gates, 0, thetas, 0);
    detail::push_xzx(gates, 1, thetas, 3);
  } else {
    for (int q = 0; q < 4; ++q) detail::push_xyz(gates, q, thetas, 3 * static_cast<std::size_t>(q));
    gates.push_back(GateOp::cnot(0, 1));
    gates.push_back(GateOp::cnot(0, 2));
    gates.push_back(GateOp::cnot(0, 3));
    gates.push_back(GateOp::cnot(3, 0));
  }
  return gates;
}

/// The V1 (which = 1) or V2 (which = 2) block on qubits {1, 2, 3}.
inline std::vector<GateOp> build_v(CircuitKind kind, int which, std::span<const double> thetas) {
  check_parameter_count(kind, thetas.size());
  const ParamRange r = v_params(kind, which);
  std::vector<GateOp> gates;
  if (kind == CircuitKind::Short) {
    gates.push_back(GateOp::cnot(3, 1));
    gates.push_back(GateOp::cnot(2, 1));
    detail::push_xzx(gates, 1, thetas, r.begin);
  } else {
    detail::push_xyz(gates, 1, thetas, r.begin);
    detail::push_xyz(gates, 2, thetas, r.begin + 3);
    detail::push_xyz(gates, 3, thetas, r.begin + 6);
    gates.push_back(GateOp::cnot(1, 2));
    gates.push_back(GateOp::cnot(1, 3));
    gates.push_back(GateOp::cnot(3, 1));
  }
  return gates;
}

/// Joint distribution of (m0, m1).
struct OutcomeDistribution {
  double p00 = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;

  double at(int m0, int m1) const {
    if (m0 == 0) return m1 == 0 ? p00 : p01;
    return m1 == 0 ? p10 : p11;
  }
  double& at(int m0, int m1) {
    if (m0 == 0) return m1 == 0 ? p00 : p01;
    return m1 == 0 ? p10 : p11;
  }
  double sum() const { return p00 + p01 + p10 + p11; }

  friend bool operator==(const OutcomeDistribution&, const OutcomeDistribution&) = default;
};

/// One branch of the mid-circuit measurement.
struct BranchTrace {
  int m0 = 0;
  double weight = 0.0;
  // Post-measurement state after V; empty for a zero-weight branch.
  std::optional<DensityMatrix> state;
};

struct DiscriminatorTrace {
  DensityMatrix after_u;
  std::array<BranchTrace, 2> branches;
  OutcomeDistribution distribution;
};

namespace detail {

inline DensityMatrix run_block(DensityMatrix rho, const std::vector<GateOp>& gates,
                               const KrausChannel& one_qubit, const KrausChannel& two_qubit,
                               bool noisy) {
  for (const auto& g : gates) {
    rho = apply_unitary(rho, g);
    if (noisy && g.noisy) {
      rho = apply_channel(rho, g.is_rotation() ? one_qubit : two_qubit, g.targets);
    }
  }
  return rho;
}

}  // namespace detail

/// Runs the full pipeline forward with explicit branching and Kraus sums,
/// keeping the intermediate states.
inline DiscriminatorTrace trace_discriminator(const DensityMatrix& rho_in, CircuitKind kind,
                                              std::span<const double> thetas,
                                              const NoiseConfig& noise) {
  if (rho_in.num_qubits() != 2) throw ShapeError("discriminator input must be a 2-qubit state");
  if (!rho_in.invariants().ok(1e-9)) throw InvariantError("discriminator input is not a valid state");
  check_parameter_count(kind, thetas.size());

  const KrausChannel one_qubit = depolarizing_1q(noise.one_qubit());
  const KrausChannel two_qubit = depolarizing_2q(noise.two_qubit());
  const bool noisy = !noise.is_noiseless();

  const DensityMatrix start = DensityMatrix::basis_state(2, 0).tensor(rho_in);
  DiscriminatorTrace out{detail::run_block(start, build_u(kind, thetas), one_qubit, two_qubit, noisy),
                         {},
                         {}};

  for (int m0 = 0; m0 < 2; ++m0) {
    BranchTrace& branch = out.branches[static_cast<std::size_t>(m0)];
    branch.m0 = m0;
    auto projected = project(out.after_u, kMidQubit, m0);
    if (!projected) continue;
    branch.weight = projected->probability;
    const int which = m0 == 1 ? 1 : 2;
    branch.state = detail::run_block(std::move(projected->state), build_v(kind, which, thetas),
                                     one_qubit, two_qubit, noisy);
    for (int m1 = 0; m1 < 2; ++m1) {
      out.distribution.at(m0, m1) = branch.weight * outcome_probability(*branch.state, kFinalQubit, m1);
    }
  }
  return out;
}

inline OutcomeDistribution run_discriminator(const DensityMatrix& rho_in, CircuitKind kind,
                                             std::span<const double> thetas,
                                             const NoiseConfig& noise) {
  return trace_discriminator(rho_in, kind, thetas, noise).distribution;
}

using Matrix4 = Eigen::Matrix4cd;

/// The whole pipeline folded into four effect operators on the 2-qubit
/// input: p_{m0 m1} = Tr(E_{m0 m1} rho_in). Exact because every stage is
/// linear in the input state.
struct EffectiveMeasurement {
  // Indexed by 2 * m0 + m1.
  std::array<Matrix4, 4> effects;

  OutcomeDistribution operator()(const Matrix& rho_in) const {
    OutcomeDistribution d;
    for (int k = 0; k < 4; ++k) {
      d.at(k / 2, k % 2) = (effects[static_cast<std::size_t>(k)].cwiseProduct(rho_in.transpose()))
                               .sum()
                               .real();
    }
    return d;
  }
  OutcomeDistribution operator()(const DensityMatrix& rho_in) const {
    return (*this)(rho_in.matrix());
  }
};

/// Builds EffectiveMeasurement by propagating the final projectors backwards
/// through the adjoint (Heisenberg-picture) circuit. Intermediate block
/// results are kept so that re-compiling at a parameter vector differing
/// only in one block redoes only the affected passes.
class MeasurementCompiler {
 public:
  struct Compiled {
    ParameterVector thetas;
    // P0_{m0} V_{m0}^*(P1_0) P0_{m0}, per m0.
    std::array<Matrix, 2> sandwiched;
    // U^* of the above, restricted to the input block.
    std::array<Matrix4, 2> first_effect;
    // U^*(P0_0) restricted to the input block.
    Matrix4 mid_zero;
    EffectiveMeasurement measurement;
  };

  MeasurementCompiler(CircuitKind kind, NoiseConfig noise) : kind_(kind), noise_(noise) {}

  CircuitKind kind() const { return kind_; }
  const NoiseConfig& noise() const { return noise_; }

  Compiled compile(std::span<const double> thetas) const {
    check_parameter_count(kind_, thetas.size());
    Compiled c;
    c.thetas.assign(thetas.begin(), thetas.end());
    const auto u = build_u(kind_, thetas);
    for (int m0 = 0; m0 < 2; ++m0) {
      c.sandwiched[static_cast<std::size_t>(m0)] = sandwich(m0, thetas);
      c.first_effect[static_cast<std::size_t>(m0)] =
          pull_back(u, c.sandwiched[static_cast<std::size_t>(m0)]);
    }
    c.mid_zero = pull_back(u, projector(kMidQubit, 0));
    c.measurement = assemble(c.first_effect, c.mid_zero);
    return c;
  }

  /// Same result as compile(thetas).measurement, reusing blocks of `base`
  /// whose parameters are unchanged.
  EffectiveMeasurement compile_near(std::span<const double> thetas, const Compiled& base) const {
    check_parameter_count(kind_, thetas.size());
    const bool u_changed = differs(thetas, base.thetas, u_params(kind_));
    std::array<Matrix4, 2> first = base.first_effect;
    std::optional<std::vector<GateOp>> u;
    for (int m0 = 0; m0 < 2; ++m0) {
      const auto i = static_cast<std::size_t>(m0);
      const bool v_changed = differs(thetas, base.thetas, v_params(kind_, m0 == 1 ? 1 : 2));
      if (!u_changed && !v_changed) continue;
      if (!u) u = build_u(kind_, thetas);
      first[i] = pull_back(*u, v_changed ? sandwich(m0, thetas) : base.sandwiched[i]);
    }
    Matrix4 mid = base.mid_zero;
    if (u_changed) mid = pull_back(*u, projector(kMidQubit, 0));
    return assemble(first, mid);
  }

 private:
  static Matrix projector(int qubit, int outcome) {
    const Eigen::Index dim = Eigen::Index{1} << kRegisterQubits;
    Matrix p = Matrix::Identity(dim, dim);
    kernels::project(p, qubit, outcome, kRegisterQubits);
    return p;
  }

  static bool differs(std::span<const double> a, const ParameterVector& b, ParamRange r) {
    for (std::size_t i = r.begin; i < r.end; ++i)
      if (a[i] != b[i]) return true;
    return false;
  }

  void pull_back_inplace(const std::vector<GateOp>& gates, Matrix& op) const {
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
      apply_noisy_gate_inplace(op, *it, noise_, kRegisterQubits, /*adjoint=*/true);
    }
  }

  Matrix4 pull_back(const std::vector<GateOp>& gates, Matrix op) const {
    pull_back_inplace(gates, op);
    return op.topLeftCorner<4, 4>();
  }

  Matrix sandwich(int m0, std::span<const double> thetas) const {
    Matrix op = projector(kFinalQubit, 0);
    pull_back_inplace(build_v(kind_, m0 == 1 ? 1 : 2, thetas), op);
    kernels::project(op, kMidQubit, m0, kRegisterQubits);
    return op;
  }

  static EffectiveMeasurement assemble(const std::array<Matrix4, 2>& first, const Matrix4& mid_zero) {
    EffectiveMeasurement m;
    m.effects[0] = first[0];
    m.effects[1] = mid_zero - first[0];
    m.effects[2] = first[1];
    m.effects[3] = (Matrix4::Identity() - mid_zero) - first[1];
    return m;
  }

  CircuitKind kind_;
  NoiseConfig noise_;
};

inline EffectiveMeasurement compile_measurement(CircuitKind kind, std::span<const double> thetas,
                                                const NoiseConfig& noise) {
  return MeasurementCompiler(kind, noise).compile(thetas).measurement;
}

}  // namespace qsd
