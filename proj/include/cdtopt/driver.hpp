#ifndef CDTOPT_DRIVER_HPP
#define CDTOPT_DRIVER_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cdtopt/fem.hpp"

namespace cdtopt::driver {

using fem::Index;
using fem::VectorXd;

// How the knapsack gains of a step are read off the equilibrium state.
//  CurrentModulus: w_e = (E_min + (E - E_min) rho_e) 1/2 u_e^T K_e u_e at the
//    design that produced u, so a void element gains almost nothing.
//  FullModulus: w_e = E 1/2 u_e^T K_e u_e for every element. A freshly removed
//    element strains heavily, so it is selected again on the next step; the
//    alternation then cycles and breaks the load path on the benchmarks.
enum class GainModel { CurrentModulus, FullModulus };

const char* to_string(GainModel model);
GainModel parse_gain_model(const std::string& name);

// Gains for the step that follows the design `rho` with equilibrium `u`.
VectorXd step_gains(const fem::StructuralModel& model, const VectorXd& rho, const VectorXd& u,
                    GainModel gain_model);

struct CdtConfig {
  double volfrac = 0.5;  // V_c / V_0
  double mu = 0.97;      // volume reduction rate
  double tau0 = 1.0;
  double omega1 = 2e-16;
  double omega2 = 1e-2;
  int max_outer = 2000;
  int max_inner = 1000;
  std::optional<double> beta;  // initial beta; default max(1, 10 max_e w_e)
  double beta_cap_factor = 0x1p40;
  double binary_tol = 1e-6;
  double perturbation_rel = 1e-8;
  GainModel gains = GainModel::CurrentModulus;

  void validate() const;
};

// One outer (gamma) iteration. The FEM solve of step gamma uses the design of
// step gamma - 1; `rho` fields below refer to the design it produces.
struct RunEntry {
  int gamma = 0;
  int inner_iters = 0;
  double volume = 0.0;         // V_gamma
  double design_volume = 0.0;  // v^T rho^gamma
  double compliance = 0.0;     // 1/2 f^T u^gamma
  double strain_energy = 0.0;  // 1/2 u^T K(rho^{gamma-1}) u
  double P_u = 0.0;            // -w^T rho^gamma
  double P_dual = 0.0;         // perturbed dual value (NaN for methods without one)
  double elapsed_ms = 0.0;
  double select_ms = 0.0;  // share of elapsed_ms spent choosing the design
  double tau0 = 0.0;  // multiplier the inner loop started from
  double tau = 0.0;
  double beta = 0.0;
  bool perturbed = false;
  bool budget_tightened = false;
};

struct RunRecord {
  std::vector<RunEntry> entries;
};

struct TopOptResult {
  VectorXd rho;                   // final design
  fem::Displacement displacement;  // equilibrium at the final design
  RunRecord record;
  double compliance = 0.0;     // 1/2 f^T u at the final design
  double strain_energy = 0.0;  // 1/2 u^T K(rho) u at the final design
  bool converged = false;
};

using Observer = std::function<void(const RunEntry&)>;

// V_gamma = max(V_c, mu V_{gamma-1})
double volume_schedule(double v_prev, double mu, double v_c);

// Phi(rho, u) = f^T u - w(u)^T rho
double primal_upper_objective(const fem::StructuralModel& model, const VectorXd& rho,
                              const VectorXd& u);

// Design chosen by one outer step for gains w at budget V_gamma.
struct Selection {
  VectorXd rho;
  int inner_iters = 0;
  double dual = std::numeric_limits<double>::quiet_NaN();
  double tau0 = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  bool perturbed = false;
  bool budget_tightened = false;
};

struct ScheduleParams {
  double volfrac = 0.5;
  double mu = 0.97;
  double omega2 = 1e-2;
  int max_outer = 2000;
  GainModel gains = GainModel::CurrentModulus;
};

using Selector = std::function<Selection(const VectorXd& gains, const VectorXd& volumes,
                                         double budget, const VectorXd& previous_rho)>;

// Shared gamma loop for binary methods: FEM solve at the previous design,
// element energies, selection at the scheduled budget, and the two-part stop
// rule |P_u(rho^gamma) - P_u(rho^{gamma-1})| <= omega2 and V_gamma <= V_c, with
// both objective values taken at the current gains.
TopOptResult run_binary_schedule(const fem::StructuralModel& model, const ScheduleParams& params,
                                 const Selector& select, const Observer& observer = {});

// Bi-level alternation with the knapsack solved through its perturbed dual.
// Each step starts the inner loop from the previous step's multiplier and beta.
TopOptResult run_cdt(const fem::StructuralModel& model, const CdtConfig& config,
                     const Observer& observer = {});

}  // namespace cdtopt::driver

#endif  // CDTOPT_DRIVER_HPP
