#include <cmath>

#include <gtest/gtest.h>

#include "sogl/dual.hpp"
#include "sogl/oracle.hpp"
#include "support/random_instances.hpp"

using namespace sogl;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

SolveReport run_dual(const ProxInstance& inst, const GroupStructure& gs, DualConfig cfg = {}) {
  try {
    return solve_dual(inst, gs, cfg);
  } catch (const DualCycleError& e) {
    return e.best();
  }
}

}  // namespace

TEST(DualZStep, Examples) {
  const GroupStructure gs(2, {{0, 1}});
  ProxInstance inst{vec({0.5, 2}), 1.0, 0.0, 0.7, 0.0};
  const BlockVector y0(gs);
  EXPECT_EQ(dual_z_step(y0, inst, gs), inst.v);

  inst.lambda0 = 0.5;
  EXPECT_EQ(dual_z_step(y0, inst, gs), vec({0, 2}));

  inst.lambda0 = 1e6;
  EXPECT_TRUE(dual_z_step(y0, inst, gs).isZero(0.0));
}

TEST(DualZStep, MinimizesPsiPerCoordinate) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  testing_support::InstanceRanges r;
  r.l0_min = 0.05;
  r.l0_max = 1.0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto ri = testing_support::random_instance(rng, r);
    BlockVector y(ri.gs);
    for (Index j = 0; j < y.stacked().size(); ++j) y.stacked()[j] = normal(rng);
    const Vector z = dual_z_step(y, ri.inst, ri.gs);
    const Vector a = ri.inst.v + ri.inst.s * scatter_add(y, ri.gs);
    for (Index j = 0; j < z.size(); ++j) {
      // Two candidates per coordinate: 0 and the unpenalized minimizer a_j.
      const double f0 = a[j] * a[j] / (2.0 * ri.inst.s);
      const double fa = ri.inst.lambda0;
      const double fz = (z[j] - a[j]) * (z[j] - a[j]) / (2.0 * ri.inst.s) + (z[j] != 0.0 ? ri.inst.lambda0 : 0.0);
      EXPECT_LE(fz, std::min(f0, fa) + 1e-14);
    }
  }
}

TEST(DualYStep, Examples) {
  const GroupStructure gs(2, {{0, 1}});
  ProxInstance inst{vec({1, 1}), 1.0, 0.0, 2.0, 0.0};
  EXPECT_TRUE(dual_y_step(2.0 * inst.v, inst, gs).stacked().isZero(0.0));

  // z - 2v = (3, 4)
  const BlockVector y = dual_y_step(vec({5, 6}), inst, gs);
  EXPECT_NEAR(y.block(0)[0], 1.2, 1e-15);
  EXPECT_NEAR(y.block(0)[1], 1.6, 1e-15);

  inst.lambda1 = 0.0;
  EXPECT_TRUE(dual_y_step(vec({5, 6}), inst, gs).stacked().isZero(0.0));
}

TEST(DualYStep, BeatsSampledBoundaryPoints) {
  const GroupStructure gs(2, {{0, 1}});
  const ProxInstance inst{vec({1, 1}), 1.0, 0.0, 2.0, 0.0};
  const BlockVector y = dual_y_step(vec({5, 6}), inst, gs);
  const double best = y.block(0).dot(vec({3, 4}));
  for (int k = 0; k < 3600; ++k) {
    const double th = 2.0 * M_PI * k / 3600.0;
    EXPECT_LE(2.0 * (3.0 * std::cos(th) + 4.0 * std::sin(th)), best + 1e-12);
  }
}

TEST(DualYStep, SubstitutedDirectionUsesZ) {
  const GroupStructure gs(2, {{0, 1}});
  const ProxInstance inst{vec({1, 1}), 1.0, 0.0, 1.0, 0.0};
  const BlockVector y = dual_y_step(vec({3, 4}), inst, gs, DualDirection::substituted);
  EXPECT_NEAR(y.block(0)[0], 0.6, 1e-15);
  EXPECT_NEAR(y.block(0)[1], 0.8, 1e-15);
}

TEST(DualObjective, Examples) {
  const GroupStructure gs(2, {{0, 1}});
  const ProxInstance inst{vec({1, 2}), 2.0, 0.0, 1.0, 0.0};
  const BlockVector y0(gs);
  EXPECT_DOUBLE_EQ(dual_objective(inst.v, y0, inst, gs), -5.0 / 4.0);
  EXPECT_DOUBLE_EQ(dual_objective(Vector::Zero(2), y0, inst, gs), 0.0);
}

TEST(DualObjective, MatchesLagrangianExpansion) {
  // psi(z, y) = 1/(2s)||z||^2 - (1/s) z^T v - z^T G^T y + lambda0 ||z||_0
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  testing_support::InstanceRanges r;
  r.l0_max = 0.5;
  for (int trial = 0; trial < 30; ++trial) {
    const auto ri = testing_support::random_instance(rng, r);
    BlockVector y(ri.gs);
    for (Index j = 0; j < y.stacked().size(); ++j) y.stacked()[j] = normal(rng);
    Vector z(ri.gs.n());
    for (Index j = 0; j < z.size(); ++j) z[j] = trial % 3 == 0 && j == 0 ? 0.0 : normal(rng);
    const double s = ri.inst.s;
    const double expansion = z.squaredNorm() / (2.0 * s) - z.dot(ri.inst.v) / s -
                             gather(z, ri.gs).stacked().dot(y.stacked()) +
                             ri.inst.lambda0 * static_cast<double>(l0_norm(z));
    EXPECT_NEAR(dual_objective(z, y, ri.inst, ri.gs), expansion, 1e-12 * (1.0 + std::abs(expansion)));
  }
}

TEST(SolveDual, NoGroupPenaltyIsHardThreshold) {
  const GroupStructure gs(3, {{0, 1}, {1, 2}});
  const ProxInstance inst{vec({0.5, -2, 1.2}), 1.0, 0.5, 0.0, 0.0};
  const SolveReport rep = solve_dual(inst, gs);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iters, 1);
  EXPECT_EQ(rep.x_final, hard_threshold(inst.v, 1.0));

  const ProxInstance plain{vec({0.5, -2, 1.2}), 1.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(solve_dual(plain, gs).x_final, plain.v);
}

TEST(SolveDual, IteratesStayFeasible) {
  std::mt19937_64 rng(21);
  testing_support::InstanceRanges r;
  r.l0_max = 0.5;
  r.random_weights = true;
  for (int trial = 0; trial < 30; ++trial) {
    const auto ri = testing_support::random_instance(rng, r);
    DualConfig cfg;
    cfg.max_iters = 200;
    cfg.on_iterate = [&](const DualState& st) {
      for (Index i = 0; i < ri.gs.m(); ++i) {
        EXPECT_LE(st.y_tilde.block(i).norm(), ri.inst.lambda1 * ri.gs.weight(i) * (1.0 + 1e-12));
      }
    };
    const SolveReport rep = run_dual(ri.inst, ri.gs, cfg);
    EXPECT_GE(rep.objective, oracle_prox_l0_ogl(ri.inst, ri.gs).value - 1e-9);
    EXPECT_NEAR(rep.objective, objective_f(rep.x_final, ri.inst, ri.gs), 1e-12);
  }
}

TEST(SolveDual, CycleDetectorIgnoresStalls) {
  using P = std::vector<std::int8_t>;
  const std::vector<P> history = {{1, 0}, {0, 1}, {1, 1}};
  EXPECT_FALSE(detail::revisited_pattern({}, P{1, 0}).has_value());
  EXPECT_FALSE(detail::revisited_pattern(history, P{1, 1}).has_value());
  EXPECT_FALSE(detail::revisited_pattern(history, P{-1, 1}).has_value());
  EXPECT_EQ(detail::revisited_pattern(history, P{1, 0}), 0u);
  EXPECT_EQ(detail::revisited_pattern(history, P{0, 1}), 1u);
}

TEST(SolveDual, SeededDrawsTerminate) {
  std::mt19937_64 rng(99);
  testing_support::InstanceRanges r;
  r.l0_min = 0.05;
  r.l0_max = 0.6;
  for (int trial = 0; trial < 200; ++trial) {
    const auto ri = testing_support::random_instance(rng, r);
    DualConfig cfg;
    cfg.trace = true;
    const SolveReport rep = run_dual(ri.inst, ri.gs, cfg);
    EXPECT_NE(rep.termination, Termination::max_iters);
    EXPECT_EQ(static_cast<int>(rep.trace.size()), rep.iters);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : rep.trace) best = std::min(best, row.objective);
    if (rep.termination == Termination::cycle_detected) EXPECT_EQ(rep.objective, best);
  }
}
