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

// Density-matrix state, gates and projective measurement.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsd/errors.hpp"
#include "qsd/linalg.hpp"

namespace qsd {

inline constexpr double kStateTolerance = 1e-10;

struct InvariantReport {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;

  bool ok(double tol = kStateTolerance) const {
    return hermiticity_error <= tol && trace_error <= tol && min_eigenvalue >= -tol;
  }
};

inline InvariantReport check_invariants(const Matrix& m) {
  InvariantReport r;
  r.hermiticity_error = hermiticity_error(m);
  r.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
  r.min_eigenvalue = hermitian_eigenvalues(m).minCoeff();
  return r;
}

/// A normalized n-qubit density matrix. Immutable once built.
class DensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and positivity at `tol`.
  static DensityMatrix from_matrix(Matrix m, double tol = kStateTolerance) {
    if (m.rows() != m.cols()) throw ShapeError("density matrix must be square");
    const int n = qubits_for_dimension(m.rows());
    const InvariantReport r = check_invariants(m);
    if (!r.ok(tol)) {
      throw InvariantError("not a density matrix: hermiticity error " +
                           std::to_string(r.hermiticity_error) + ", trace error " +
                           std::to_string(r.trace_error) + ", min eigenvalue " +
                           std::to_string(r.min_eigenvalue));
    }
    return DensityMatrix(std::move(m), n);
  }

  /// Wraps a matrix produced by a trace-preserving operation on a valid
  /// state. Only the shape is checked.
  static DensityMatrix unchecked(Matrix m) {
    if (m.rows() != m.cols()) throw ShapeError("density matrix must be square");
    const int n = qubits_for_dimension(m.rows());
    return DensityMatrix(std::move(m), n);
  }

  static DensityMatrix basis_state(int num_qubits, std::size_t index) {
    const Eigen::Index dim = Eigen::Index{1} << num_qubits;
    Matrix m = Matrix::Zero(dim, dim);
    m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
    return unchecked(std::move(m));
  }

  static DensityMatrix maximally_mixed(int num_qubits) {
    const Eigen::Index dim = Eigen::Index{1} << num_qubits;
    return unchecked(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  int num_qubits() const { return num_qubits_; }
  Eigen::Index dim() const { return data_.rows(); }
  const Matrix& matrix() const { return data_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }
  double trace() const { return data_.trace().real(); }
  double purity() const { return (data_ * data_).trace().real(); }
  InvariantReport invariants() const { return check_invariants(data_); }

  /// this (x) other, with this on the leading (most significant) qubits.
  DensityMatrix tensor(const DensityMatrix& other) const {
    const Eigen::Index da = dim(), db = other.dim();
    Matrix out(da * db, da * db);
    for (Eigen::Index i = 0; i < da; ++i)
      for (Eigen::Index j = 0; j < da; ++j)
        out.block(i * db, j * db, db, db) = data_(i, j) * other.data_;
    return unchecked(std::move(out));
  }

 private:
  DensityMatrix(Matrix m, int n) : num_qubits_(n), data_(std::move(m)) {}

  int num_qubits_;
  Matrix data_;
};

enum class GateKind { RX, RY, RZ, CNOT };

inline std::string_view to_string(GateKind k) {
  switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

/// A gate bound to qubits. For CNOT, targets = {control, target}.
struct GateOp {
  GateKind kind = GateKind::RX;
  double angle = 0.0;
  std::vector<int> targets;
  std::optional<std::size_t> param_index;
  // Whether the placement rule follows this gate with a depolarizing channel.
  bool noisy = true;

  static GateOp rotation(GateKind kind, int qubit, double angle,
                         std::optional<std::size_t> param = std::nullopt) {
    return GateOp{kind, angle, {qubit}, param, true};
  }
  static GateOp cnot(int control, int target) {
    return GateOp{GateKind::CNOT, 0.0, {control, target}, std::nullopt, true};
  }

  bool is_rotation() const { return kind != GateKind::CNOT; }
  std::size_t arity() const { return is_rotation() ? 1 : 2; }
};

/// R_k(theta) = exp(-i theta sigma_k / 2).
inline Matrix2 rotation_matrix(GateKind kind, double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  Matrix2 m;
  switch (kind) {
    case GateKind::RX:
      m << c, Complex(0, -s), Complex(0, -s), c;
      break;
    case GateKind::RY:
      m << c, -s, s, c;
      break;
    case GateKind::RZ:
      m << Complex(c, -s), 0, 0, Complex(c, s);
      break;
    case GateKind::CNOT:
      throw DomainError("CNOT is not a rotation");
  }
  return m;
}

/// Local unitary of a gate: 2x2 for rotations, 4x4 (control-major) for CNOT.
inline Matrix gate_matrix(const GateOp& g) {
  if (g.is_rotation()) return rotation_matrix(g.kind, g.angle);
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

inline void validate_gate(const GateOp& g, int num_qubits) {
  if (g.targets.size() != g.arity()) {
    throw IndexError(std::string(to_string(g.kind)) + " expects " + std::to_string(g.arity()) +
                     " qubit(s)");
  }
  check_targets(g.targets, num_qubits);
}

/// In-place rho <- U rho U^dagger (or U^dagger rho U when `adjoint`).
inline void apply_gate_inplace(Matrix& m, const GateOp& g, int n, bool adjoint = false) {
  if (g.kind == GateKind::CNOT) {
    kernels::apply_cnot(m, g.targets[0], g.targets[1], n);
  } else {
    kernels::conjugate_1q(m, rotation_matrix(g.kind, adjoint ? -g.angle : g.angle),
                          g.targets[0], n);
  }
}

/// Pure state |psi><psi| from unit-norm amplitudes.
inline DensityMatrix pure_state(std::span<const Complex> amplitudes) {
  const auto dim = static_cast<Eigen::Index>(amplitudes.size());
  qubits_for_dimension(dim);
  const Eigen::Map<const Vector> psi(amplitudes.data(), dim);
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw NormalizationError("state vector has norm " + std::to_string(norm));
  }
  return DensityMatrix::unchecked(psi * psi.adjoint());
}

inline DensityMatrix pure_state(std::initializer_list<Complex> amplitudes) {
  const std::vector<Complex> v(amplitudes);
  return pure_state(std::span<const Complex>(v));
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const GateOp& gate) {
  validate_gate(gate, rho.num_qubits());
  Matrix m = rho.matrix();
  apply_gate_inplace(m, gate, rho.num_qubits());
  return DensityMatrix::unchecked(std::move(m));
}

/// Tr(P rho), P projecting `qubit` onto |outcome>.
inline double outcome_probability(const Matrix& m, int qubit, int outcome) {
  const int n = qubits_for_dimension(m.rows());
  const int q[] = {qubit};
  check_targets(q, n);
  const auto mask = static_cast<Eigen::Index>(qubit_mask(n, qubit));
  double p = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (((i & mask) != 0) == (outcome == 1)) p += m(i, i).real();
  }
  return p;
}

inline double outcome_probability(const DensityMatrix& rho, int qubit, int outcome) {
  return std::clamp(outcome_probability(rho.matrix(), qubit, outcome), 0.0, 1.0);
}

struct Projection {
  double probability;
  DensityMatrix state;
};

inline constexpr double kZeroBranchThreshold = 1e-12;

/// Projective measurement of one qubit. Returns std::nullopt (the zero-branch
/// signal) when the outcome probability is below kZeroBranchThreshold.
inline std::optional<Projection> project(const DensityMatrix& rho, int qubit, int outcome) {
  const double p = outcome_probability(rho, qubit, outcome);
  if (p < kZeroBranchThreshold) return std::nullopt;
  Matrix m = rho.matrix();
  kernels::project(m, qubit, outcome, rho.num_qubits());
  m /= p;
  return Projection{p, DensityMatrix::unchecked(std::move(m))};
}

}  // namespace qsd
