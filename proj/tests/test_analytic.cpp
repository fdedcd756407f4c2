#include <cmath>

#include <gtest/gtest.h>

#include "cdtopt/analytic.hpp"
#include "cdtopt/error.hpp"

namespace {

using namespace cdtopt;
using namespace cdtopt::analytic;

TEST(Buridan, TieHasTwoOptima) {
  const auto r = buridan(2.0, 0.0);
  EXPECT_FALSE(r.report.unique);
  EXPECT_EQ(r.report.degenerate_indices.size(), 2u);
  EXPECT_EQ(r.brute.optimal_subsets.size(), 2u);
  // The perturbed answer is one of them.
  EXPECT_TRUE(r.solution.certificate.perturbed);
  EXPECT_DOUBLE_EQ(r.solution.density.rho.sum(), 1.0);
}

TEST(Buridan, SmallPreferenceIsUnique) {
  const auto r = buridan(2.0, 0.05);
  EXPECT_TRUE(r.report.unique);
  EXPECT_EQ(r.solution.density.rho, Eigen::Vector2d(1.0, 0.0));
  EXPECT_DOUBLE_EQ(r.report.tau_lower, 2.0);
  EXPECT_DOUBLE_EQ(r.report.tau_upper, 2.05);
  EXPECT_LE(r.report.tau_lower, 2.0184);
  EXPECT_GE(r.report.tau_upper, 2.0184);
  EXPECT_EQ(r.brute.optimal_subsets.size(), 1u);
}

TEST(Buridan, RelabelingFlipsTheChoice) {
  EXPECT_EQ(buridan(2.0, 0.05, 1).solution.density.rho, Eigen::Vector2d(0.0, 1.0));
  EXPECT_EQ(buridan(2.0, -0.05).solution.density.rho, Eigen::Vector2d(0.0, 1.0));
  EXPECT_THROW(buridan(0.0, 0.1), Error);
}

TEST(Buridan, PerturbedOptimumIsAnUnperturbedOptimum) {
  const auto tie = buridan(2.0, 0.0);
  for (double eps : {1e-9, 1e-6, 1e-3}) {
    const auto r = buridan(2.0, eps);
    bool found = false;
    for (const auto& subset : tie.brute.optimal_subsets) {
      Eigen::Vector2d rho = Eigen::Vector2d::Zero();
      for (auto e : subset) rho[e] = 1.0;
      found = found || rho == r.solution.density.rho;
    }
    EXPECT_TRUE(found) << eps;
  }
}

const double kTrussPotential = -0.5 * (1.0 / ((2.0 - std::sqrt(2.0)) / 2.0) +
                                       1.0 / ((4.0 + std::sqrt(2.0)) / 2.0));

TEST(SymmetricTruss, PotentialConstant) {
  EXPECT_NEAR(kTrussPotential, -1.8918058124456125, 1e-15);
  EXPECT_NEAR(kTrussPotential, -0.5 * (2.0 + std::sqrt(2.0) + (8.0 - 2.0 * std::sqrt(2.0)) / 14.0),
              1e-14);
}

TEST(SymmetricTruss, PositivePerturbationKeepsSecondGroup) {
  TrussSpec spec;
  spec.epsilon = 0.01;
  const auto r = symmetric_truss(spec);
  EXPECT_EQ(r.rho, Eigen::Vector2d(0.0, 1.0));
  EXPECT_NEAR(r.potential, kTrussPotential, 1e-12);
  EXPECT_NEAR(r.perturbed_potential, kTrussPotential, 1e-2);
  EXPECT_EQ(r.history[1], Eigen::Vector2d(0.0, 1.0));
}

TEST(SymmetricTruss, NegativePerturbationKeepsFirstGroup) {
  TrussSpec spec;
  spec.epsilon = -0.01;
  const auto r = symmetric_truss(spec);
  EXPECT_EQ(r.rho, Eigen::Vector2d(1.0, 0.0));
  EXPECT_NEAR(r.potential, kTrussPotential, 1e-12);
}

TEST(SymmetricTruss, AlternationFlipsAndIsDetected) {
  const auto r = symmetric_truss({});
  EXPECT_TRUE(r.cycled);
  ASSERT_GE(r.history.size(), 4u);
  EXPECT_NE(r.history[1], r.history[2]);
  EXPECT_EQ(r.history[1], r.history[3]);
}

TEST(SymmetricTruss, PerturbedPotentialApproachesTheLimit) {
  double previous = 1.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    TrussSpec spec;
    spec.epsilon = eps;
    const double gap = std::abs(symmetric_truss(spec).perturbed_potential - kTrussPotential);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(SymmetricTruss, ExactTieWithoutPerturbationIsDegenerate) {
  TrussSpec spec;
  spec.epsilon = 0.0;
  spec.perturb_ties = false;
  try {
    symmetric_truss(spec);
    FAIL() << "expected DegenerateInstance";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInstance);
  }
}

CounterexampleSpec counterexample(double a, double p) {
  CounterexampleSpec s;
  s.a = a;
  s.penal = p;
  return s;
}

TEST(SimpCounterexample, QuadraticPenaltyMinimizesAtCentre) {
  const auto r = simp_counterexample(counterexample((2.0 - std::sqrt(2.0)) / 2.0, 2.0));
  ASSERT_EQ(r.global_minima.size(), 1u);
  EXPECT_NEAR(r.global_minima[0].rho[0], 0.5, 1e-6);
  // 1 / (a + b) = 1/3 per term at the centre with p = 2.
  EXPECT_NEAR(r.global_minima[0].value, 4.0 / 3.0, 1e-10);
}

TEST(SimpCounterexample, CubicPenaltyMinimizesAtCorners) {
  const auto r = simp_counterexample(counterexample((2.0 - std::sqrt(2.0)) / 2.0, 3.0));
  ASSERT_EQ(r.global_minima.size(), 2u);
  EXPECT_NEAR(r.global_minima[0].value, -kTrussPotential, 1e-12);
  bool first = false, second = false;
  for (const auto& m : r.global_minima) {
    first = first || (m.rho - Eigen::Vector2d(1.0, 0.0)).norm() <= 1e-3;
    second = second || (m.rho - Eigen::Vector2d(0.0, 1.0)).norm() <= 1e-3;
  }
  EXPECT_TRUE(first && second);
  // The centre survives as a local minimum with 2 / (a + b) / 4 * 8 = 8/3.
  ASSERT_EQ(r.local_minima.size(), 3u);
  EXPECT_NEAR(r.local_minima[2].rho[0], 0.5, 1e-6);
  EXPECT_NEAR(r.local_minima[2].value, 8.0 / 3.0, 1e-10);
}

TEST(SimpCounterexample, SofterGroupMovesMinimumBackToCentre) {
  const auto r = simp_counterexample(counterexample((2.0 - std::sqrt(2.0)) / 4.0, 3.0));
  ASSERT_EQ(r.global_minima.size(), 1u);
  EXPECT_NEAR(r.global_minima[0].rho[0], 0.5, 1e-6);
  const auto s = counterexample((2.0 - std::sqrt(2.0)) / 4.0, 3.0);
  EXPECT_LT(r.global_minima[0].value, penalized_compliance(s, 1.0, 0.0));
}

TEST(SimpCounterexample, SurfaceIsSwapSymmetric) {
  const auto spec = counterexample((2.0 - std::sqrt(2.0)) / 2.0, 3.0);
  const auto r = simp_counterexample(spec);
  const int n = spec.surface_samples;
  ASSERT_EQ(r.surface.rows(), n * n);
  EXPECT_DOUBLE_EQ(r.surface(0, 0), 1.0 / n);
  EXPECT_DOUBLE_EQ(r.surface(n * n - 1, 1), 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      EXPECT_DOUBLE_EQ(r.surface(i * n + j, 2), r.surface(j * n + i, 2));
  EXPECT_EQ(r.boundary.rows(), spec.boundary_samples);
}

TEST(SimpCounterexample, Validation) {
  EXPECT_THROW(simp_counterexample(counterexample(-1.0, 3.0)), Error);
  EXPECT_THROW(simp_counterexample(counterexample(0.3, 0.5)), Error);
}

TEST(DoubleWell, ThreeRootsMatchOracle) {
  const auto r = double_well_triality({});
  ASSERT_EQ(r.criticals.size(), 3u);
  EXPECT_FALSE(r.symmetric);
  const double roots[] = {0.2364169544976278, -0.26870078851261264, -1.967716165985014};
  const double xs[] = {2.114907541477, -1.860805853112, -0.254101688365};
  const double pis[] = {-1.029507282551, 0.966502983430, 2.063004299122};
  const CriticalKind kinds[] = {CriticalKind::GlobalMinimizer, CriticalKind::LocalMinimizer,
                                CriticalKind::LocalMaximizer};
  for (int i = 0; i < 3; ++i) {
    const auto& c = r.criticals[i];
    EXPECT_NEAR(c.dual, roots[i], 1e-12);
    EXPECT_NEAR(c.x[0], xs[i], 1e-9);
    EXPECT_NEAR(c.primal_value, pis[i], 1e-9);
    EXPECT_EQ(c.kind, kinds[i]);
  }
  // Two-digit values.
  EXPECT_NEAR(r.criticals[0].dual, 0.24, 0.02);
  EXPECT_NEAR(r.criticals[0].x[0], 2.1, 0.02);
  EXPECT_NEAR(r.criticals[0].primal_value, -1.02951, 1e-3);
}

TEST(DoubleWell, TrialityIdentityAndStationarity) {
  for (double f : {0.5, -0.3, 1.0, 3.0}) {
    DoubleWellSpec spec;
    spec.load[0] = f;
    const auto r = double_well_triality(spec);
    ASSERT_FALSE(r.criticals.empty());
    for (const auto& c : r.criticals) {
      EXPECT_LE(std::abs(c.primal_value - c.dual_value), 1e-8 * std::max(1.0, std::abs(c.primal_value)));
      const double residual = (c.dual / spec.beta + spec.lambda) * c.dual * c.dual - 0.5 * f * f;
      EXPECT_LE(std::abs(residual), 1e-10);
      // x = f / s is a critical point of the primal.
      const double grad = spec.beta * (0.5 * c.x.squaredNorm() - spec.lambda) * c.x[0] - f;
      EXPECT_LE(std::abs(grad), 1e-9);
    }
    // The positive root is the lowest primal value.
    for (const auto& c : r.criticals) EXPECT_LE(r.criticals[0].primal_value, c.primal_value + 1e-12);
  }
}

TEST(DoubleWell, LargeLoadHasOneRoot) {
  // Three roots need |f|^2 / 2 < 4 beta^2 lambda^3 / 27.
  DoubleWellSpec spec;
  spec.load[0] = 3.0;
  const auto r = double_well_triality(spec);
  ASSERT_EQ(r.criticals.size(), 1u);
  EXPECT_EQ(r.criticals[0].kind, CriticalKind::GlobalMinimizer);
}

TEST(DoubleWell, VectorLoad) {
  DoubleWellSpec spec;
  spec.load = Eigen::Vector3d(0.3, -0.2, 0.1);
  const auto r = double_well_triality(spec);
  ASSERT_EQ(r.criticals.size(), 3u);
  for (const auto& c : r.criticals)
    EXPECT_LE(std::abs(c.primal_value - c.dual_value), 1e-8 * std::max(1.0, std::abs(c.primal_value)));
}

TEST(DoubleWell, ZeroLoadIsSymmetric) {
  DoubleWellSpec spec;
  spec.load[0] = 0.0;
  const auto r = double_well_triality(spec);
  EXPECT_TRUE(r.symmetric);
  ASSERT_EQ(r.criticals.size(), 1u);
  EXPECT_EQ(r.criticals[0].dual, -2.0);
  EXPECT_EQ(r.criticals[0].x[0], 0.0);
  EXPECT_EQ(r.criticals[0].kind, CriticalKind::LocalMaximizer);
  EXPECT_DOUBLE_EQ(r.criticals[0].primal_value, r.criticals[0].dual_value);
  ASSERT_EQ(r.perturbed_minimizers.size(), 2u);
  EXPECT_NEAR(r.perturbed_minimizers[0][0], 2.0, 1e-6);
  EXPECT_NEAR(r.perturbed_minimizers[1][0], -2.0, 1e-6);
}

TEST(DoubleWell, Validation) {
  DoubleWellSpec spec;
  spec.beta = 0.0;
  EXPECT_THROW(double_well_triality(spec), Error);
  spec = {};
  spec.load = Eigen::VectorXd();
  EXPECT_THROW(double_well_triality(spec), Error);
}

}  // namespace
