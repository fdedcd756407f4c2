#ifndef CDTOPT_BASELINES_HPP
#define CDTOPT_BASELINES_HPP

// Reference methods run on the same models as the dual driver: SIMP with
// optimality-criteria updates, and BESO read as a greedy knapsack selection
// inside the same outer loop and stop rule.

#include <iosfwd>
#include <string>
#include <vector>

#include "cdtopt/driver.hpp"

namespace cdtopt::baselines {

using fem::Index;
using fem::VectorXd;

enum class FilterType { Sensitivity = 1, Density = 2 };

struct SimpConfig {
  double penal = 3.0;
  double rmin = 1.5;
  FilterType filter = FilterType::Sensitivity;
  double move = 0.2;
  double damping = 0.5;      // exponent on the OC ratio
  double min_density = 1e-3;
  double omega2 = 1e-2;      // stop when max |x_new - x| <= omega2
  int max_iters = 1000;

  void validate() const;
};

enum class SimpStatus { Converged, MaxIterations };
const char* to_string(SimpStatus status);

struct SimpResult {
  driver::TopOptResult run;  // continuous densities; converged mirrors status
  SimpStatus status = SimpStatus::MaxIterations;
};

// Linear hat-weight filter over element centroids, H_ei = max(0, rmin - |c_e - c_i|).
class DensityFilter {
 public:
  DensityFilter(const fem::Mesh& mesh, double rmin);
  // sum_i H_ei x_i / sum_i H_ei
  VectorXd apply(const VectorXd& x) const;
  // Sensitivity filter: sum_i H_ei x_i dc_i / (sum_i H_ei max(1e-3, x_e))
  VectorXd sensitivity(const VectorXd& x, const VectorXd& dc) const;
  // Chain rule through apply() for density filtering.
  VectorXd transpose_apply(const VectorXd& g) const;

 private:
  Eigen::SparseMatrix<double> weights_;
  VectorXd row_sums_;
};

// Volumes are the element volumes of the model; the constraint is v^T x = volfrac V0.
SimpResult run_simp(const fem::StructuralModel& model, double volfrac, const SimpConfig& config = {});

// Elements with 0.01 < rho < 0.99, as a fraction of n.
double gray_fraction(const VectorXd& rho, double low = 0.01, double high = 0.99);

struct BesoConfig {
  double mu = 0.97;
  double omega2 = 1e-2;
  int max_outer = 2000;
  driver::GainModel gains = driver::GainModel::CurrentModulus;
};

// Greedy selection: elements by gain descending (ties: currently solid first,
// then lower index), kept while the running volume stays within the budget.
VectorXd beso_select(const VectorXd& gains, const VectorXd& volumes, double budget,
                     const VectorXd& previous_rho);

driver::TopOptResult run_beso(const fem::StructuralModel& model, double volfrac,
                              const BesoConfig& config = {}, const driver::Observer& observer = {});

struct CostRow {
  std::string method;
  int nelx = 0;
  int nely = 0;
  Index elements = 0;
  int outer_iters = 0;
  double total_ms = 0.0;
  double ms_per_iter = 0.0;
  double select_ms_per_iter = 0.0;
  double compliance = 0.0;
  bool converged = false;
};

struct ProbeSettings {
  double volfrac = 0.5;
  double mu = 0.95;
  int max_outer = 2000;
};

// MBB runs of CDT and BESO over the listed meshes, one row per (method, mesh).
std::vector<CostRow> per_iteration_cost_probe(const std::vector<std::string>& methods,
                                              const std::vector<std::pair<int, int>>& meshes,
                                              const ProbeSettings& settings = {});

void write_cost_csv(std::ostream& out, const std::vector<CostRow>& rows);

}  // namespace cdtopt::baselines

#endif  // CDTOPT_BASELINES_HPP
