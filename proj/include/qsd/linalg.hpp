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

// Dense complex matrix types and in-place kernels that act on a subset of
// qubits of a 2^n x 2^n operator without forming the lifted matrix.
//
// Bit convention: qubit 0 is the most significant bit of a basis index, so
// for n qubits qubit q owns the mask 1 << (n - 1 - q).

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qsd/errors.hpp"

namespace qsd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;

inline constexpr int kMaxQubits = 6;

/// Number of qubits for a power-of-two dimension; throws ShapeError otherwise.
inline int qubits_for_dimension(Eigen::Index dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0) {
    throw ShapeError("dimension " + std::to_string(dim) + " is not a power of two >= 2");
  }
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if (n > kMaxQubits) {
    throw ShapeError("at most " + std::to_string(kMaxQubits) + " qubits are supported");
  }
  return n;
}

inline std::size_t qubit_mask(int num_qubits, int qubit) {
  return std::size_t{1} << (num_qubits - 1 - qubit);
}

inline void check_targets(std::span<const int> targets, int num_qubits) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= num_qubits) {
      throw IndexError("qubit " + std::to_string(targets[i]) + " out of range for " +
                       std::to_string(num_qubits) + " qubits");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (targets[i] == targets[j]) {
        throw IndexError("qubit " + std::to_string(targets[i]) + " targeted twice");
      }
    }
  }
}

/// Largest |m_ij - conj(m_ji)|.
inline double hermiticity_error(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Eigenvalues (ascending) of the Hermitian part of m.
inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

namespace pauli {
inline Matrix2 identity() { return Matrix2::Identity(); }
inline Matrix2 x() {
  Matrix2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix2 y() {
  Matrix2 m;
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
inline Matrix2 z() {
  Matrix2 m;
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

namespace kernels {

namespace detail {

// Global indices of the 2^k local basis states sharing `base`; targets[0]
// is the most significant local bit.
inline void local_indices(std::size_t base, std::span<const int> targets, int n,
                          std::array<std::size_t, 1 << kMaxQubits>& out) {
  const std::size_t local_dim = std::size_t{1} << targets.size();
  for (std::size_t a = 0; a < local_dim; ++a) {
    std::size_t idx = base;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (a & (std::size_t{1} << (targets.size() - 1 - t))) idx |= qubit_mask(n, targets[t]);
    }
    out[a] = idx;
  }
}

inline std::size_t target_mask(std::span<const int> targets, int n) {
  std::size_t mask = 0;
  for (int t : targets) mask |= qubit_mask(n, t);
  return mask;
}

}  // namespace detail

/// m <- L m, with L acting on `targets`.
inline void left_multiply(Matrix& m, const Matrix& local, std::span<const int> targets, int n) {
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t local_dim = std::size_t{1} << targets.size();
  const std::size_t mask = detail::target_mask(targets, n);
  std::array<std::size_t, 1 << kMaxQubits> idx{};
  std::array<Complex, 1 << kMaxQubits> tmp{};
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & mask) continue;
    detail::local_indices(base, targets, n, idx);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (std::size_t a = 0; a < local_dim; ++a) {
        Complex acc = 0;
        for (std::size_t b = 0; b < local_dim; ++b) acc += local(a, b) * m(idx[b], c);
        tmp[a] = acc;
      }
      for (std::size_t a = 0; a < local_dim; ++a) m(idx[a], c) = tmp[a];
    }
  }
}

/// m <- m L^dagger, with L acting on `targets`.
inline void right_multiply_adjoint(Matrix& m, const Matrix& local, std::span<const int> targets,
                                   int n) {
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t local_dim = std::size_t{1} << targets.size();
  const std::size_t mask = detail::target_mask(targets, n);
  std::array<std::size_t, 1 << kMaxQubits> idx{};
  std::array<Complex, 1 << kMaxQubits> tmp{};
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & mask) continue;
    detail::local_indices(base, targets, n, idx);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (std::size_t a = 0; a < local_dim; ++a) {
        Complex acc = 0;
        for (std::size_t b = 0; b < local_dim; ++b) acc += m(r, idx[b]) * std::conj(local(a, b));
        tmp[a] = acc;
      }
      for (std::size_t a = 0; a < local_dim; ++a) m(r, idx[a]) = tmp[a];
    }
  }
}

/// m <- L m L^dagger.
inline void conjugate(Matrix& m, const Matrix& local, std::span<const int> targets, int n) {
  left_multiply(m, local, targets, n);
  right_multiply_adjoint(m, local, targets, n);
}

/// m <- U m U^dagger for a single-qubit U; specialised for the hot path.
inline void conjugate_1q(Matrix& m, const Matrix2& u, int qubit, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::Index mask = static_cast<Eigen::Index>(qubit_mask(n, qubit));
  const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  for (Eigen::Index c = 0; c < dim; ++c) {
    Complex* col = m.col(c).data();
    for (Eigen::Index i0 = 0; i0 < dim; ++i0) {
      if (i0 & mask) continue;
      const Complex a = col[i0], b = col[i0 | mask];
      col[i0] = u00 * a + u01 * b;
      col[i0 | mask] = u10 * a + u11 * b;
    }
  }
  const Complex c00 = std::conj(u00), c01 = std::conj(u01), c10 = std::conj(u10),
                c11 = std::conj(u11);
  for (Eigen::Index j0 = 0; j0 < dim; ++j0) {
    if (j0 & mask) continue;
    Complex* a = m.col(j0).data();
    Complex* b = m.col(j0 | mask).data();
    for (Eigen::Index r = 0; r < dim; ++r) {
      const Complex x = a[r], y = b[r];
      a[r] = x * c00 + y * c01;
      b[r] = x * c10 + y * c11;
    }
  }
}

/// m <- C m C for the CNOT permutation C.
inline void apply_cnot(Matrix& m, int control, int target, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  const auto cmask = static_cast<Eigen::Index>(qubit_mask(n, control));
  const auto tmask = static_cast<Eigen::Index>(qubit_mask(n, target));
  for (Eigen::Index i = 0; i < dim; ++i) {
    if ((i & cmask) && !(i & tmask)) m.row(i).swap(m.row(i | tmask));
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    if ((j & cmask) && !(j & tmask)) m.col(j).swap(m.col(j | tmask));
  }
}

/// Single-qubit depolarizing map in closed form:
/// m <- (1 - p) m + (p / 2) I_q (x) Tr_q(m).
/// The map is self-adjoint, so this is also its Heisenberg-picture action.
inline void depolarize(Matrix& m, int qubit, double p, int n) {
  if (p == 0.0) return;
  const Eigen::Index dim = Eigen::Index{1} << n;
  const auto mask = static_cast<Eigen::Index>(qubit_mask(n, qubit));
  const double keep = 1.0 - p;
  const double mix = 0.5 * p;
  for (Eigen::Index j0 = 0; j0 < dim; ++j0) {
    if (j0 & mask) continue;
    Complex* c0 = m.col(j0).data();
    Complex* c1 = m.col(j0 | mask).data();
    for (Eigen::Index i0 = 0; i0 < dim; ++i0) {
      if (i0 & mask) continue;
      const Complex s = c0[i0] + c1[i0 | mask];
      c0[i0] = keep * c0[i0] + mix * s;
      c1[i0 | mask] = keep * c1[i0 | mask] + mix * s;
      c0[i0 | mask] *= keep;
      c1[i0] *= keep;
    }
  }
}

/// m <- P m P where P projects `qubit` onto |outcome>.
inline void project(Matrix& m, int qubit, int outcome, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  const auto mask = static_cast<Eigen::Index>(qubit_mask(n, qubit));
  for (Eigen::Index i = 0; i < dim; ++i) {
    const bool bit = (i & mask) != 0;
    if (bit != (outcome == 1)) {
      m.row(i).setZero();
      m.col(i).setZero();
    }
  }
}

}  // namespace kernels

/// Dense lift of a local operator to the full register (explicit index
/// embedding). Used where the full 2^n x 2^n matrix is wanted.
inline Matrix lift_operator(const Matrix& local, std::span<const int> targets, int n) {
  check_targets(targets, n);
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix full = Matrix::Identity(dim, dim);
  kernels::left_multiply(full, local, targets, n);
  return full;
}

}  // namespace qsd
