#include "cdtopt/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cdtopt/error.hpp"
#include "cdtopt/knapsack.hpp"

namespace cdtopt::driver {

namespace {

void check_schedule(double volfrac, double mu, double omega2, int max_outer) {
  if (!(volfrac > 0.0 && volfrac <= 1.0))
    throw Error(ErrorCode::InvalidInstance, "volfrac must lie in (0, 1]", std::nullopt, volfrac);
  if (!(mu > 0.0 && mu < 1.0))
    throw Error(ErrorCode::InvalidInstance, "mu must lie in (0, 1)", std::nullopt, mu);
  if (volfrac < 1.0 && !(mu > volfrac))
    throw Error(ErrorCode::InvalidInstance, "mu must exceed volfrac", std::nullopt, mu);
  if (!(omega2 > 0.0))
    throw Error(ErrorCode::InvalidInstance, "omega2 must be positive", std::nullopt, omega2);
  if (max_outer < 1) throw Error(ErrorCode::InvalidInstance, "max_outer must be at least 1");
}

}  // namespace

void CdtConfig::validate() const {
  check_schedule(volfrac, mu, omega2, max_outer);
  if (!(omega1 > 0.0)) throw Error(ErrorCode::InvalidInstance, "omega1 must be positive");
  if (max_inner < 1) throw Error(ErrorCode::InvalidInstance, "max_inner must be at least 1");
  if (!std::isfinite(tau0) || tau0 < 0.0)
    throw Error(ErrorCode::InvalidInstance, "tau0 must be finite and non-negative");
  if (beta && !(*beta > 0.0 && std::isfinite(*beta)))
    throw Error(ErrorCode::InvalidInstance, "beta must be positive");
  if (!(beta_cap_factor >= 1.0)) throw Error(ErrorCode::InvalidInstance, "beta cap factor < 1");
}

const char* to_string(GainModel model) {
  return model == GainModel::CurrentModulus ? "current" : "full";
}

GainModel parse_gain_model(const std::string& name) {
  if (name == "current") return GainModel::CurrentModulus;
  if (name == "full") return GainModel::FullModulus;
  throw Error(ErrorCode::Usage, "unknown gain model '" + name + "' (current, full)");
}

VectorXd step_gains(const fem::StructuralModel& model, const VectorXd& rho, const VectorXd& u,
                    GainModel gain_model) {
  return gain_model == GainModel::CurrentModulus ? fem::element_energies(model, rho, u)
                                                 : fem::element_energies(model, u);
}

double volume_schedule(double v_prev, double mu, double v_c) { return std::max(v_c, mu * v_prev); }

double primal_upper_objective(const fem::StructuralModel& model, const VectorXd& rho,
                              const VectorXd& u) {
  if (rho.size() != model.num_elements())
    throw Error(ErrorCode::DimensionMismatch, "design length differs from element count");
  return model.load().dot(u) - fem::element_energies(model, u).dot(rho);
}

TopOptResult run_binary_schedule(const fem::StructuralModel& model, const ScheduleParams& params,
                                 const Selector& select, const Observer& observer) {
  using Clock = std::chrono::steady_clock;
  check_schedule(params.volfrac, params.mu, params.omega2, params.max_outer);

  const VectorXd volumes = model.element_volumes();
  const double v_c = params.volfrac * volumes.sum();
  fem::EquilibriumSolver solver(model);

  TopOptResult out;
  VectorXd rho = VectorXd::Ones(model.num_elements());
  double budget = volumes.sum();

  for (int gamma = 1; gamma <= params.max_outer; ++gamma) {
    const auto start = Clock::now();
    const fem::Displacement state = solver.solve(rho);
    const VectorXd gains = step_gains(model, rho, state.u, params.gains);
    budget = volume_schedule(budget, params.mu, v_c);

    const auto select_start = Clock::now();
    Selection next = select(gains, volumes, budget, rho);
    const double select_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - select_start).count();
    if (next.rho.size() != rho.size())
      throw Error(ErrorCode::DimensionMismatch, "selector returned a design of the wrong length");

    RunEntry entry;
    entry.gamma = gamma;
    entry.inner_iters = next.inner_iters;
    entry.volume = budget;
    entry.design_volume = volumes.dot(next.rho);
    entry.compliance = fem::compliance(state.u, model.load());
    entry.strain_energy = fem::strain_energy(solver.stiffness(), model.reduce(state.u));
    entry.P_u = -gains.dot(next.rho);
    entry.P_dual = next.dual;
    entry.tau0 = next.tau0;
    entry.tau = next.tau;
    entry.beta = next.beta;
    entry.perturbed = next.perturbed;
    entry.budget_tightened = next.budget_tightened;

    const double previous_objective = -gains.dot(rho);
    const bool settled = std::abs(entry.P_u - previous_objective) <= params.omega2 &&
                         budget <= v_c + 1e-12 * std::max(1.0, v_c);
    rho = std::move(next.rho);
    entry.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    entry.select_ms = select_ms;
    out.record.entries.push_back(entry);
    if (observer) observer(entry);

    if (settled) {
      out.converged = true;
      break;
    }
  }

  if (!out.converged) {
    const RunEntry& last = out.record.entries.back();
    throw Error(ErrorCode::MaxOuterExceeded,
                "no convergence after " + std::to_string(params.max_outer) +
                    " outer iterations (last P_u " + std::to_string(last.P_u) + ")",
                std::nullopt, last.P_u);
  }

  out.displacement = solver.solve(rho);
  out.compliance = fem::compliance(out.displacement.u, model.load());
  out.strain_energy = fem::strain_energy(solver.stiffness(), model.reduce(out.displacement.u));
  out.rho = std::move(rho);
  return out;
}

TopOptResult run_cdt(const fem::StructuralModel& model, const CdtConfig& config,
                     const Observer& observer) {
  config.validate();

  knapsack::SolveParams<double> params;
  params.beta0 = config.beta;
  params.beta_cap_factor = config.beta_cap_factor;
  params.tau0 = config.tau0;
  params.omega1 = config.omega1;
  params.max_iters = config.max_inner;
  params.binary_tol = config.binary_tol;
  params.perturbation_rel = config.perturbation_rel;

  double tau_start = config.tau0;
  Selector select = [&](const VectorXd& gains, const VectorXd& volumes, double budget,
                        const VectorXd&) {
    knapsack::KnapsackInstance<double> instance{gains, volumes, budget};
    params.tau0 = tau_start;
    const auto result = knapsack::solve(instance, budget, params);
    Selection s;
    s.rho = result.density.rho;
    s.inner_iters = result.certificate.inner_iterations;
    s.dual = result.certificate.dual_beta;
    s.tau0 = tau_start;
    s.tau = result.point.tau;
    s.beta = result.certificate.beta;
    s.perturbed = result.certificate.perturbed;
    s.budget_tightened = result.certificate.budget_tightened;
    // Warm start of the next step from the last multiplier.
    tau_start = s.tau;
    return s;
  };

  ScheduleParams schedule{config.volfrac, config.mu, config.omega2, config.max_outer, config.gains};
  return run_binary_schedule(model, schedule, select, observer);
}

}  // namespace cdtopt::driver
