#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cdtopt/driver.hpp"
#include "cdtopt/error.hpp"
#include "cdtopt/problems.hpp"

namespace {

using namespace cdtopt;
using driver::CdtConfig;
using driver::RunEntry;
using fem::VectorXd;

bool is_binary(const VectorXd& rho) {
  return ((rho.array() == 0.0) || (rho.array() == 1.0)).all();
}

TEST(VolumeSchedule, Examples) {
  EXPECT_DOUBLE_EQ(driver::volume_schedule(1.0, 0.9, 0.5), 0.9);
  EXPECT_DOUBLE_EQ(driver::volume_schedule(0.52, 0.9, 0.5), 0.5);
}

TEST(VolumeSchedule, ReachesTargetInExpectedSteps) {
  // ceil(ln 0.4 / ln 0.975) = 37
  double v = 1.0;
  int steps = 0;
  while (v > 0.4) {
    const double next = driver::volume_schedule(v, 0.975, 0.4);
    EXPECT_LE(next, v);
    EXPECT_GE(next, 0.4);
    v = next;
    ++steps;
  }
  EXPECT_EQ(steps, 37);
}

TEST(CdtConfig, Validation) {
  CdtConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mu = 0.4;
  c.volfrac = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = CdtConfig{};
  c.volfrac = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = CdtConfig{};
  c.omega2 = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = CdtConfig{};
  c.volfrac = 1.0;
  EXPECT_NO_THROW(c.validate());
}

TEST(GainModel, ParseAndPrint) {
  EXPECT_EQ(driver::parse_gain_model("current"), driver::GainModel::CurrentModulus);
  EXPECT_EQ(driver::parse_gain_model("full"), driver::GainModel::FullModulus);
  EXPECT_STREQ(driver::to_string(driver::GainModel::FullModulus), "full");
  EXPECT_THROW(driver::parse_gain_model("half"), Error);
}

TEST(GainModel, CurrentModulusScalesVoidElements) {
  const auto model = problems::build_mbb(8, 4);
  VectorXd rho = VectorXd::Ones(model.num_elements());
  rho.segment(13, 3).setZero();  // interior, away from the load and supports
  const auto u = fem::solve_equilibrium(model, rho).u;
  const VectorXd full = driver::step_gains(model, rho, u, driver::GainModel::FullModulus);
  const VectorXd current = driver::step_gains(model, rho, u, driver::GainModel::CurrentModulus);
  const double e_min = model.material().E_min;
  for (fem::Index e = 0; e < rho.size(); ++e) {
    const double scale = rho[e] == 1.0 ? 1.0 : e_min;
    EXPECT_NEAR(current[e], scale * full[e], 1e-12 * std::max(1.0, full[e]));
  }
  // Summed over the design they give the stored energy.
  const double stored = fem::strain_energy(model, rho, u);
  EXPECT_NEAR(current.sum(), stored, 1e-10 * stored);
}

TEST(PrimalUpperObjective, Examples) {
  const auto model = problems::build_mbb(10, 5);
  const VectorXd ones = VectorXd::Ones(model.num_elements());
  const auto u = fem::solve_equilibrium(model, ones).u;
  const double fu = model.load().dot(u);
  EXPECT_DOUBLE_EQ(driver::primal_upper_objective(model, VectorXd::Zero(ones.size()), u), fu);
  EXPECT_NEAR(driver::primal_upper_objective(model, ones, u), 0.5 * fu, 1e-10 * fu);
  EXPECT_THROW(driver::primal_upper_objective(model, VectorXd::Ones(3), u), Error);
}

TEST(RunCdt, FullVolumeStopsAfterOneStep) {
  const auto model = problems::build_mbb(12, 4);
  CdtConfig c;
  c.volfrac = 1.0;
  const auto r = driver::run_cdt(model, c);
  ASSERT_EQ(r.record.entries.size(), 1u);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE((r.rho.array() == 1.0).all());
}

class MbbRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new fem::StructuralModel(problems::build_mbb(30, 10));
    CdtConfig c;
    c.volfrac = 0.5;
    c.mu = 0.95;
    result_ = new driver::TopOptResult(driver::run_cdt(*model_, c, [](const RunEntry& e) {
      observed_.push_back(e.gamma);
    }));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete model_;
  }
  static inline fem::StructuralModel* model_ = nullptr;
  static inline driver::TopOptResult* result_ = nullptr;
  static inline std::vector<int> observed_;
};

TEST_F(MbbRun, BinaryAndWithinBudget) {
  const auto& r = *result_;
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(is_binary(r.rho));
  const double n = static_cast<double>(r.rho.size());
  EXPECT_LE(r.rho.sum() / n, 0.5 + 1.0 / n);
  EXPECT_LE(r.displacement.relative_residual, 1e-10);
  EXPECT_NEAR(r.compliance, r.strain_energy, 1e-8 * r.compliance);
  EXPECT_TRUE(std::isfinite(r.compliance));
}

TEST_F(MbbRun, ScheduleAndBudgetPerStep) {
  const auto& entries = result_->record.entries;
  const double max_v = 1.0 / static_cast<double>(model_->num_elements());
  double previous = 1.0;
  for (const auto& e : entries) {
    EXPECT_LE(e.volume, previous);
    EXPECT_GE(e.volume, 0.5 - 1e-15);
    EXPECT_LE(e.design_volume, e.volume + max_v);
    EXPECT_TRUE(std::isfinite(e.P_dual));
    previous = e.volume;
  }
  EXPECT_NEAR(entries.back().volume, 0.5, 1e-14);
}

TEST_F(MbbRun, WarmStartFromPreviousMultiplier) {
  const auto& entries = result_->record.entries;
  ASSERT_GT(entries.size(), 2u);
  EXPECT_EQ(entries.front().tau0, 1.0);
  for (std::size_t i = 1; i < entries.size(); ++i)
    EXPECT_EQ(entries[i].tau0, entries[i - 1].tau) << "gamma " << entries[i].gamma;
}

TEST_F(MbbRun, ObserverSeesEveryStep) {
  ASSERT_EQ(observed_.size(), result_->record.entries.size());
  for (std::size_t i = 0; i < observed_.size(); ++i) EXPECT_EQ(observed_[i], static_cast<int>(i) + 1);
}

TEST_F(MbbRun, Deterministic) {
  CdtConfig c;
  c.volfrac = 0.5;
  c.mu = 0.95;
  const auto again = driver::run_cdt(*model_, c);
  ASSERT_EQ(again.record.entries.size(), result_->record.entries.size());
  EXPECT_EQ(again.rho, result_->rho);
  for (std::size_t i = 0; i < again.record.entries.size(); ++i) {
    const auto& a = again.record.entries[i];
    const auto& b = result_->record.entries[i];
    EXPECT_EQ(a.inner_iters, b.inner_iters);
    EXPECT_EQ(a.compliance, b.compliance);
    EXPECT_EQ(a.P_u, b.P_u);
    EXPECT_EQ(a.P_dual, b.P_dual);
    EXPECT_EQ(a.tau, b.tau);
    EXPECT_EQ(a.beta, b.beta);
  }
}

TEST(RunCdt, OuterLimitFailsLoudly) {
  const auto model = problems::build_mbb(12, 4);
  CdtConfig c;
  c.volfrac = 0.5;
  c.mu = 0.9;
  c.max_outer = 2;
  std::vector<RunEntry> seen;
  try {
    driver::run_cdt(model, c, [&](const RunEntry& e) { seen.push_back(e); });
    FAIL() << "expected MaxOuterExceeded";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::MaxOuterExceeded);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(RunCdt, MbbRegressionBaseline) {
  // Frozen from the 60 x 20, volfrac 0.4, mu 0.97 run.
  const auto model = problems::build_mbb(60, 20);
  CdtConfig c;
  c.volfrac = 0.4;
  c.mu = 0.97;
  const auto r = driver::run_cdt(model, c);
  EXPECT_TRUE(is_binary(r.rho));
  EXPECT_EQ(r.record.entries.size(), 31u);
  EXPECT_NEAR(r.compliance, 133.7276938676, 1e-6);
}

}  // namespace
