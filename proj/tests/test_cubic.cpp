#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cdtopt/cubic.hpp"

namespace {

using cdtopt::eval_cubic;
using cdtopt::solve_real_cubic;

TEST(Cubic, ThreeDistinctRoots) {
  // (x - 1)(x - 2)(x + 3) = x^3 - 7x + 6
  const auto roots = solve_real_cubic(1.0, 0.0, -7.0, 6.0);
  ASSERT_EQ(roots.size(), 3u);
  EXPECT_NEAR(roots[0], 2.0, 1e-14);
  EXPECT_NEAR(roots[1], 1.0, 1e-14);
  EXPECT_NEAR(roots[2], -3.0, 1e-14);
}

TEST(Cubic, SingleRealRoot) {
  // x^3 + x + 1 has one real root near -0.6823
  const auto roots = solve_real_cubic(1.0, 0.0, 1.0, 1.0);
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_NEAR(roots[0], -0.68232780382801932, 1e-14);
}

TEST(Cubic, TripleRoot) {
  // 2 (x - 1.5)^3
  const auto roots = solve_real_cubic(2.0, -9.0, 13.5, -6.75);
  ASSERT_EQ(roots.size(), 3u);
  for (double r : roots) EXPECT_NEAR(r, 1.5, 1e-5);
}

TEST(Cubic, DoubleWellDualEquation) {
  // (s + 2) s^2 = 0.125
  const auto roots = solve_real_cubic(1.0, 2.0, 0.0, -0.125);
  ASSERT_EQ(roots.size(), 3u);
  EXPECT_NEAR(roots[0], 0.2364169544976278, 1e-13);
  EXPECT_NEAR(roots[1], -0.26870078851261264, 1e-13);
  EXPECT_NEAR(roots[2], -1.967716165985014, 1e-13);
}

TEST(Cubic, RandomResiduals) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-10.0, 10.0);
  for (int i = 0; i < 20000; ++i) {
    const double c3 = coef(rng) + (i % 2 ? 11.0 : -11.0);
    const double c2 = coef(rng), c1 = coef(rng), c0 = coef(rng);
    const auto roots = solve_real_cubic(c3, c2, c1, c0);
    ASSERT_GE(roots.size(), 1u);
    for (double r : roots) {
      const double scale = std::abs(c3 * r * r * r) + std::abs(c2 * r * r) +
                           std::abs(c1 * r) + std::abs(c0);
      EXPECT_LE(std::abs(eval_cubic(c3, c2, c1, c0, r)), 1e-12 * scale);
    }
  }
}

TEST(Cubic, FloatInstantiation) {
  const auto roots = solve_real_cubic(1.0f, 0.0f, -7.0f, 6.0f);
  ASSERT_EQ(roots.size(), 3u);
  EXPECT_NEAR(roots[0], 2.0f, 1e-5f);
}

}  // namespace
