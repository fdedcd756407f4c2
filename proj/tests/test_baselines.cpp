#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cdtopt/baselines.hpp"
#include "cdtopt/error.hpp"
#include "cdtopt/knapsack.hpp"
#include "cdtopt/problems.hpp"

namespace {

using namespace cdtopt;
using baselines::beso_select;
using fem::VectorXd;

TEST(DensityFilter, UnitRadiusIsIdentity) {
  const auto mesh = fem::Mesh::grid2d(6, 4);
  const baselines::DensityFilter filter(mesh, 1.0);
  VectorXd x = VectorXd::LinSpaced(mesh.num_elements(), 0.1, 0.9);
  EXPECT_LT((filter.apply(x) - x).norm(), 1e-15);
  const VectorXd dc = -VectorXd::LinSpaced(mesh.num_elements(), 1.0, 2.0);
  EXPECT_LT((filter.sensitivity(x, dc) - dc).norm(), 1e-14);
}

TEST(DensityFilter, PreservesConstantsAndTransposes) {
  for (const auto& mesh : {fem::Mesh::grid2d(7, 5), fem::Mesh::grid3d(4, 3, 3)}) {
    const baselines::DensityFilter filter(mesh, 1.5);
    const VectorXd c = VectorXd::Constant(mesh.num_elements(), 0.37);
    EXPECT_LT((filter.apply(c) - c).cwiseAbs().maxCoeff(), 1e-15);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VectorXd x(mesh.num_elements()), g(mesh.num_elements());
    for (auto& v : x) v = u(rng);
    for (auto& v : g) v = u(rng);
    EXPECT_NEAR(filter.apply(x).dot(g), x.dot(filter.transpose_apply(g)), 1e-12);
  }
}

TEST(SimpConfig, Validation) {
  baselines::SimpConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rmin = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.penal = 0.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Simp, FullVolumeStaysSolid) {
  const auto model = problems::build_mbb(12, 4);
  const auto r = baselines::run_simp(model, 1.0);
  EXPECT_GT(r.run.rho.minCoeff(), 0.999);
}

TEST(Simp, MbbHasGrayElements) {
  const auto model = problems::build_mbb(60, 20);
  const auto r = baselines::run_simp(model, 0.5);
  EXPECT_EQ(r.status, baselines::SimpStatus::Converged);
  EXPECT_GT(baselines::gray_fraction(r.run.rho), 0.0);
  EXPECT_NEAR(r.run.rho.sum() / r.run.rho.size(), 0.5, 1e-4);
  EXPECT_GE(r.run.rho.minCoeff(), 1e-3);
  EXPECT_LE(r.run.rho.maxCoeff(), 1.0);
  // Regression value for 1/2 f^T u; twice it is the 88-line code's objective.
  EXPECT_NEAR(r.run.compliance, 101.647321, 1e-4);
  EXPECT_NEAR(r.run.compliance, r.run.strain_energy, 1e-8 * r.run.compliance);
}

TEST(Simp, DensityFilterKeepsVolume) {
  const auto model = problems::build_cantilever2d(20, 10);
  baselines::SimpConfig c;
  c.filter = baselines::FilterType::Density;
  const auto r = baselines::run_simp(model, 0.4, c);
  EXPECT_NEAR(r.run.rho.sum() / r.run.rho.size(), 0.4, 1e-4);
  EXPECT_GT(baselines::gray_fraction(r.run.rho), 0.0);
}

TEST(Simp, IterationLimitIsAStatus) {
  const auto model = problems::build_mbb(20, 8);
  baselines::SimpConfig c;
  c.max_iters = 3;
  const auto r = baselines::run_simp(model, 0.5, c);
  EXPECT_EQ(r.status, baselines::SimpStatus::MaxIterations);
  EXPECT_FALSE(r.run.converged);
  EXPECT_EQ(r.run.record.entries.size(), 3u);
}

TEST(GrayFraction, Counts) {
  VectorXd rho(5);
  rho << 0.0, 0.005, 0.5, 0.995, 1.0;
  EXPECT_DOUBLE_EQ(baselines::gray_fraction(rho), 0.2);
  EXPECT_DOUBLE_EQ(baselines::gray_fraction(VectorXd::Ones(4)), 0.0);
}

TEST(BesoSelect, TopGainsWithinBudget) {
  VectorXd w(5), v = VectorXd::Constant(5, 0.2), prev = VectorXd::Zero(5);
  w << 0.3, 0.9, 0.1, 0.5, 0.7;
  const VectorXd rho = beso_select(w, v, 0.65, prev);
  VectorXd expected(5);
  expected << 0, 1, 0, 1, 1;
  EXPECT_EQ(rho, expected);
}

TEST(BesoSelect, TiesPreferSolidThenLowerIndex) {
  VectorXd w = VectorXd::Constant(4, 1.0), v = VectorXd::Constant(4, 0.25), prev(4);
  prev << 0, 0, 1, 0;
  VectorXd expected(4);
  expected << 1, 0, 1, 0;
  EXPECT_EQ(beso_select(w, v, 0.5, prev), expected);
}

TEST(BesoSelect, MatchesBruteForceOnEqualVolumes) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(1e-6, 1.0);
  std::uniform_int_distribution<int> size(3, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    knapsack::KnapsackInstance<double> inst;
    inst.gains.resize(n);
    for (auto& g : inst.gains) g = unit(rng);
    inst.volumes = VectorXd::Constant(n, 1.0 / n);
    inst.budget = unit(rng);
    const auto brute = knapsack::brute_force(inst);
    const VectorXd rho = beso_select(inst.gains, inst.volumes, inst.budget, VectorXd::Zero(n));
    EXPECT_NEAR(inst.gains.dot(rho), brute.objective, 1e-12) << "trial " << trial;
  }
}

TEST(Beso, FullVolumeAllOnes) {
  const auto model = problems::build_mbb(10, 4);
  baselines::BesoConfig c;
  const auto r = baselines::run_beso(model, 1.0, c);
  EXPECT_TRUE((r.rho.array() == 1.0).all());
}

TEST(Beso, BinaryFeasibleAndAgreesWithKnapsackEachStep) {
  const auto model = problems::build_cantilever2d(20, 8);
  driver::ScheduleParams schedule{0.5, 0.95, 1e-2, 500, driver::GainModel::CurrentModulus};
  int steps = 0;
  driver::Selector select = [&](const VectorXd& g, const VectorXd& v, double budget,
                                const VectorXd& previous) {
    driver::Selection s;
    s.rho = beso_select(g, v, budget, previous);
    const auto exact = knapsack::solve(knapsack::KnapsackInstance<double>{g, v, budget}, budget);
    EXPECT_EQ(s.rho, exact.density.rho) << "step " << steps;
    EXPECT_LE(v.dot(s.rho), budget + 1e-12);
    ++steps;
    return s;
  };
  const auto r = driver::run_binary_schedule(model, schedule, select);
  EXPECT_GT(steps, 5);
  EXPECT_TRUE(((r.rho.array() == 0.0) || (r.rho.array() == 1.0)).all());
}

TEST(CostProbe, CyclingRunIsReportedNotThrown) {
  // The 12 x 4 beam alternates between two designs at the target volume.
  baselines::ProbeSettings settings;
  settings.max_outer = 60;
  const auto rows = baselines::per_iteration_cost_probe({"beso"}, {{12, 4}}, settings);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].converged);
  EXPECT_EQ(rows[0].outer_iters, 60);
}

TEST(CostProbe, OneRowPerMethodAndMesh) {
  baselines::ProbeSettings settings;
  settings.max_outer = 300;
  const auto rows =
      baselines::per_iteration_cost_probe({"cdt", "beso"}, {{16, 6}, {20, 8}}, settings);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].method, "cdt");
  EXPECT_EQ(rows[1].method, "beso");
  EXPECT_EQ(rows[2].elements, 160);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged) << r.method << " " << r.nelx;
    EXPECT_GT(r.outer_iters, 0);
    EXPECT_GE(r.total_ms, 0.0);
  }
  std::ostringstream csv;
  baselines::write_cost_csv(csv, rows);
  const std::string text = csv.str();
  EXPECT_EQ(text.rfind("method,nelx,nely,elements,outer_iters,total_ms,ms_per_iter,", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_THROW(baselines::per_iteration_cost_probe({"annealing"}, {{4, 2}}), Error);
}

}  // namespace
