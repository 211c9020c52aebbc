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


#include "qsd/ansatz.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracle.hpp"
#include "qsd/discrimination.hpp"

namespace qsd {
namespace {

std::size_t count_kind(const std::vector<GateOp>& gates, bool cnot) {
  return static_cast<std::size_t>(std::count_if(gates.begin(), gates.end(), [&](const GateOp& g) {
    return (g.kind == GateKind::CNOT) == cnot;
  }));
}

std::size_t cnots_touching(const std::vector<GateOp>& gates, int q) {
  return static_cast<std::size_t>(std::count_if(gates.begin(), gates.end(), [&](const GateOp& g) {
    return g.kind == GateKind::CNOT && (g.targets[0] == q || g.targets[1] == q);
  }));
}

void expect_matches(const OutcomeDistribution& d, const std::array<double, 4>& ref, double tol) {
  EXPECT_NEAR(d.p00, ref[0], tol);
  EXPECT_NEAR(d.p01, ref[1], tol);
  EXPECT_NEAR(d.p10, ref[2], tol);
  EXPECT_NEAR(d.p11, ref[3], tol);
}

TEST(Ansatz, ParameterCounts) {
  EXPECT_EQ(parameter_count(CircuitKind::Long), 30u);
  EXPECT_EQ(parameter_count(CircuitKind::Short), 12u);
  EXPECT_THROW(build_u(CircuitKind::Short, ParameterVector(11)), ParameterCountError);
  EXPECT_THROW(build_u(CircuitKind::Long, ParameterVector(12)), ParameterCountError);
  EXPECT_THROW(build_v(CircuitKind::Short, 1, ParameterVector(30)), ParameterCountError);
  EXPECT_THROW(build_v(CircuitKind::Short, 3, ParameterVector(12)), DomainError);
}

TEST(Ansatz, ShortUWiring) {
  const auto u = build_u(CircuitKind::Short, ParameterVector(12, 0.0));
  EXPECT_EQ(count_kind(u, true), 4u);
  EXPECT_EQ(count_kind(u, false), 6u);
  EXPECT_EQ(cnots_touching(u, 2), 2u);
  EXPECT_EQ(cnots_touching(u, 3), 2u);
  EXPECT_EQ(u[0].targets, (std::vector<int>{3, 0}));
  EXPECT_EQ(u[1].targets, (std::vector<int>{3, 1}));
  EXPECT_EQ(u[2].targets, (std::vector<int>{2, 0}));
  EXPECT_EQ(u[3].targets, (std::vector<int>{2, 1}));
  const GateKind xzx[] = {GateKind::RX, GateKind::RZ, GateKind::RX};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(u[4 + i].kind, xzx[i % 3]);
    EXPECT_EQ(u[4 + i].targets[0], i < 3 ? 0 : 1);
    EXPECT_EQ(u[4 + i].param_index, i);
  }
}

TEST(Ansatz, LongUWiring) {
  const auto u = build_u(CircuitKind::Long, ParameterVector(30, 0.0));
  EXPECT_EQ(count_kind(u, true), 4u);
  EXPECT_EQ(count_kind(u, false), 12u);
  const GateKind xyz[] = {GateKind::RX, GateKind::RY, GateKind::RZ};
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(u[i].kind, xyz[i % 3]);
    EXPECT_EQ(u[i].targets[0], static_cast<int>(i / 3));
    EXPECT_EQ(u[i].param_index, i);
  }
  EXPECT_EQ(u[12].targets, (std::vector<int>{0, 1}));
  EXPECT_EQ(u[15].targets, (std::vector<int>{3, 0}));
}

TEST(Ansatz, ShortVBlocks) {
  ParameterVector t(12);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(i);
  const auto v1 = build_v(CircuitKind::Short, 1, t), v2 = build_v(CircuitKind::Short, 2, t);
  ASSERT_EQ(v1.size(), v2.size());
  for (std::size_t i = 0; i < v1.size(); ++i) {
    EXPECT_EQ(v1[i].kind, v2[i].kind);
    EXPECT_EQ(v1[i].targets, v2[i].targets);
    for (int q : v1[i].targets) EXPECT_GE(q, 1);
  }
  EXPECT_EQ(v1[2].param_index, 6u);
  EXPECT_EQ(v1[4].param_index, 8u);
  EXPECT_EQ(v2[2].param_index, 9u);
  EXPECT_EQ(v2[4].param_index, 11u);
  EXPECT_EQ(cnots_touching(v1, 2), 1u);
  EXPECT_EQ(cnots_touching(v1, 3), 1u);
}

TEST(Ansatz, LongVBlocks) {
  const ParameterVector t(30, 0.0);
  const auto v1 = build_v(CircuitKind::Long, 1, t), v2 = build_v(CircuitKind::Long, 2, t);
  std::set<std::size_t> s1, s2;
  for (const auto& g : v1)
    if (g.param_index) s1.insert(*g.param_index);
  for (const auto& g : v2)
    if (g.param_index) s2.insert(*g.param_index);
  EXPECT_EQ(*s1.begin(), 12u);
  EXPECT_EQ(*s1.rbegin(), 20u);
  EXPECT_EQ(s1.size(), 9u);
  EXPECT_EQ(*s2.begin(), 21u);
  EXPECT_EQ(*s2.rbegin(), 29u);
  EXPECT_EQ(count_kind(v1, true), 3u);
  EXPECT_EQ(v1.back().targets, (std::vector<int>{3, 1}));
}

TEST(Ansatz, SlotInjectivity) {
  for (CircuitKind kind : {CircuitKind::Short, CircuitKind::Long}) {
    const std::size_t n = parameter_count(kind);
    ParameterVector t(n, 0.0);
    std::vector<GateOp> all = build_u(kind, t);
    for (int w : {1, 2}) {
      const auto v = build_v(kind, w, t);
      all.insert(all.end(), v.begin(), v.end());
    }
    std::vector<int> uses(n, 0);
    for (const auto& g : all) {
      if (g.is_rotation()) {
        ASSERT_TRUE(g.param_index.has_value());
        ++uses[*g.param_index];
      }
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(uses[i], 1) << i;

    // Perturbing one slot changes exactly the gate bound to it.
    for (std::size_t i = 0; i < n; ++i) {
      ParameterVector p = t;
      p[i] = 0.5;
      std::vector<GateOp> moved = build_u(kind, p);
      for (int w : {1, 2}) {
        const auto v = build_v(kind, w, p);
        moved.insert(moved.end(), v.begin(), v.end());
      }
      for (std::size_t g = 0; g < all.size(); ++g) {
        const bool bound = all[g].param_index == i;
        EXPECT_EQ(moved[g].angle != all[g].angle, bound);
      }
    }
  }
}

TEST(Discriminator, NormalisedAndBranchConsistent) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const CircuitKind kind = trial % 2 ? CircuitKind::Long : CircuitKind::Short;
    const auto thetas = oracle::random_angles(parameter_count(kind), rng);
    const DensityMatrix rho = DensityMatrix::from_matrix(oracle::random_density(2, rng));
    const NoiseConfig noise(trial % 3 == 0 ? 0.0 : 0.05);
    const DiscriminatorTrace tr = trace_discriminator(rho, kind, thetas, noise);
    EXPECT_NEAR(tr.distribution.sum(), 1.0, 1e-9);
    EXPECT_NEAR(tr.branches[0].weight + tr.branches[1].weight, 1.0, 1e-9);
    for (int m0 = 0; m0 < 2; ++m0)
      for (int m1 = 0; m1 < 2; ++m1) EXPECT_GE(tr.distribution.at(m0, m1), -1e-12);
  }
}

TEST(Discriminator, ZeroAnglesOnGroundStateMatchesOracle) {
  const ParameterVector thetas(12, 0.0);
  const DensityMatrix rho = DensityMatrix::basis_state(2, 0);
  const auto d = run_discriminator(rho, CircuitKind::Short, thetas, NoiseConfig());
  expect_matches(d, oracle::discriminate(rho.matrix(), false, thetas, 0.0), 1e-10);
  EXPECT_NEAR(d.p00, 1.0, 1e-12);
}

TEST(Discriminator, ZeroBranchContributesNothing) {
  // Qubit 0 stays |0>, so the m0 = 1 branch is impossible.
  const DiscriminatorTrace tr = trace_discriminator(DensityMatrix::basis_state(2, 0),
                                                    CircuitKind::Short, ParameterVector(12, 0.0),
                                                    NoiseConfig());
  EXPECT_FALSE(tr.branches[1].state.has_value());
  EXPECT_EQ(tr.branches[1].weight, 0.0);
  EXPECT_EQ(tr.distribution.p10, 0.0);
  EXPECT_EQ(tr.distribution.p11, 0.0);
}

TEST(Discriminator, MatchesDenseOracle) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 16; ++trial) {
    const bool is_long = trial % 2 == 1;
    const CircuitKind kind = is_long ? CircuitKind::Long : CircuitKind::Short;
    const auto thetas = oracle::random_angles(parameter_count(kind), rng);
    const double p = (trial / 2) % 4 == 0 ? 0.0 : 0.01 * ((trial / 2) % 4) * 3;
    const Matrix rho = oracle::random_density(2, rng, 1 + trial % 2);
    const auto ref = oracle::discriminate(rho, is_long, thetas, p);
    const auto d = run_discriminator(DensityMatrix::from_matrix(rho), kind, thetas, NoiseConfig(p));
    expect_matches(d, ref, 1e-10);
    const auto fast = compile_measurement(kind, thetas, NoiseConfig(p))(rho);
    expect_matches(fast, ref, 1e-10);
  }
}

TEST(Discriminator, DeferredMeasurementEquivalence) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const bool is_long = trial % 2 == 1;
    const CircuitKind kind = is_long ? CircuitKind::Long : CircuitKind::Short;
    const auto thetas = oracle::random_angles(parameter_count(kind), rng);
    const auto psi = oracle::random_pure(2, rng);
    const DensityMatrix rho = pure_state(psi);
    expect_matches(run_discriminator(rho, kind, thetas, NoiseConfig()),
                   oracle::discriminate_deferred(rho.matrix(), is_long, thetas), 1e-9);
  }
}

TEST(Discriminator, NoiselessBranchesStayPure) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const CircuitKind kind = trial % 2 ? CircuitKind::Long : CircuitKind::Short;
    const auto thetas = oracle::random_angles(parameter_count(kind), rng);
    const DensityMatrix rho = pure_state(oracle::random_pure(2, rng));
    const DiscriminatorTrace tr = trace_discriminator(rho, kind, thetas, NoiseConfig());
    for (const auto& b : tr.branches) {
      if (!b.state) continue;
      const Eigen::VectorXd ev = hermitian_eigenvalues(b.state->matrix());
      EXPECT_LE(ev(ev.size() - 2), 1e-9);
      EXPECT_NEAR(b.state->purity(), 1.0, 1e-9);
    }
  }
}

TEST(Discriminator, RejectsInvalidInput) {
  const ParameterVector t(12, 0.0);
  EXPECT_THROW(run_discriminator(DensityMatrix::maximally_mixed(3), CircuitKind::Short, t, NoiseConfig()),
               ShapeError);
  Matrix bad = Matrix::Identity(4, 4) / 2.0;
  EXPECT_THROW(run_discriminator(DensityMatrix::unchecked(bad), CircuitKind::Short, t, NoiseConfig()),
               InvariantError);
  EXPECT_THROW(run_discriminator(DensityMatrix::maximally_mixed(2), CircuitKind::Short,
                                 ParameterVector(30, 0.0), NoiseConfig()),
               ParameterCountError);
}

TEST(EffectiveMeasurement, EffectsFormAPovm) {
  std::mt19937_64 rng(59);
  for (CircuitKind kind : {CircuitKind::Short, CircuitKind::Long})
    for (double p : {0.0, 0.01, 0.1}) {
      const auto m = compile_measurement(kind, oracle::random_angles(parameter_count(kind), rng), NoiseConfig(p));
      Matrix4 sum = Matrix4::Zero();
      for (const auto& e : m.effects) {
        sum += e;
        EXPECT_LE((e - e.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GE(hermitian_eigenvalues(e).minCoeff(), -1e-12);
      }
      EXPECT_LE((sum - Matrix4::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(EffectiveMeasurement, CompileNearMatchesFullCompile) {
  std::mt19937_64 rng(61);
  for (CircuitKind kind : {CircuitKind::Short, CircuitKind::Long}) {
    const MeasurementCompiler compiler(kind, NoiseConfig(0.02));
    const auto thetas = oracle::random_angles(parameter_count(kind), rng);
    const auto base = compiler.compile(thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      auto shifted = thetas;
      shifted[i] += 0.37;
      const auto near = compiler.compile_near(shifted, base);
      const auto full = compiler.compile(shifted).measurement;
      for (std::size_t k = 0; k < 4; ++k)
        EXPECT_LE((near.effects[k] - full.effects[k]).cwiseAbs().maxCoeff(), 1e-13) << i;
    }
  }
}

TEST(EffectiveMeasurement, FamilyInputsAgreeWithForwardPipeline) {
  std::mt19937_64 rng(67);
  const auto thetas = oracle::random_angles(12, rng);
  const auto m = compile_measurement(CircuitKind::Short, thetas, NoiseConfig(0.01));
  for (const auto& input : {make_input(InputClass::A, 0.3), make_input(InputClass::BPlus),
                            make_input(InputClass::BMinus)}) {
    const auto fwd = run_discriminator(input.rho, CircuitKind::Short, thetas, NoiseConfig(0.01));
    const auto fast = m(input.rho);
    expect_matches(fast, {fwd.p00, fwd.p01, fwd.p10, fwd.p11}, 1e-12);
  }
}

}  // namespace
}  // namespace qsd
