#ifndef CDTOPT_ANALYTIC_HPP
#define CDTOPT_ANALYTIC_HPP

// Small closed-form problems: the two-element knapsack with a near tie, the
// symmetric two-bar truss, the penalized compliance of a two-variable SIMP
// model, and the one-parameter double-well potential with its cubic dual.

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "cdtopt/knapsack.hpp"

namespace cdtopt::analytic {

using Eigen::Vector2d;
using Eigen::VectorXd;

// --- two equal elements, one slightly better ---------------------------------

struct BuridanResult {
  knapsack::KnapsackInstance<double> instance;
  knapsack::ExistenceReport<double> report;
  knapsack::SolveResult<double> solution;
  knapsack::BruteForceResult<double> brute;
};

// w = (w_base, w_base) with epsilon added to element `favoured` (0 or 1),
// v = (1, 1), V = 1.
BuridanResult buridan(double w_base, double epsilon, int favoured = 0);

// --- symmetric truss ----------------------------------------------------------

struct TrussSpec {
  double a = (2.0 - std::sqrt(2.0)) / 2.0;
  double b = (4.0 + std::sqrt(2.0)) / 2.0;
  Vector2d load{1.0, 1.0};
  double epsilon = 0.01;  // added to the first load component
  bool perturb_ties = true;
  int max_steps = 50;

  void validate() const;
  Vector2d perturbed_load() const { return {load[0] + epsilon, load[1]}; }
};

struct TrussResult {
  Vector2d rho{0.0, 0.0};
  double potential = 0.0;            // -1/2 f^T K(rho)^{-1} f at the unperturbed load
  double perturbed_potential = 0.0;  // same at the perturbed load
  int steps = 0;
  bool cycled = false;  // the alternation flipped between the two designs
  std::vector<Vector2d> history;
};

// Stiffness diag(a rho1 + b rho2, b rho1 + a rho2).
Eigen::Matrix2d truss_stiffness(const TrussSpec& spec, const Vector2d& rho);
double truss_potential(const TrussSpec& spec, const Vector2d& rho, const Vector2d& load);

// Alternates equilibrium and the knapsack rho1 + rho2 <= 1 from rho = (1, 1).
// When the alternation flips between the two single-bar designs it stops and
// keeps the stiffer one (higher potential under the perturbed load).
TrussResult symmetric_truss(const TrussSpec& spec = {});

// --- two-variable SIMP compliance --------------------------------------------

struct CounterexampleSpec {
  double a = (2.0 - std::sqrt(2.0)) / 2.0;
  double b = (4.0 + std::sqrt(2.0)) / 2.0;
  Vector2d load{1.0, 1.0};
  double penal = 3.0;
  int surface_samples = 101;     // per axis over (0, 1]
  int boundary_samples = 10001;  // over t in [0, 1], spacing 1e-4

  void validate() const;
};

struct BoundaryMinimum {
  Vector2d rho;  // (t, 1 - t)
  double value = 0.0;
};

struct CounterexampleResult {
  Eigen::MatrixXd surface;   // rows (rho1, rho2, P)
  Eigen::MatrixXd boundary;  // rows (t, P(t, 1 - t))
  std::vector<BoundaryMinimum> local_minima;  // ascending by value
  std::vector<BoundaryMinimum> global_minima;  // ties of the best value
};

// 1/2 [f1^2 / (a r1^p + b r2^p) + f2^2 / (b r1^p + a r2^p)]
double penalized_compliance(const CounterexampleSpec& spec, double rho1, double rho2);

// Grid samples of the surface and of the line rho1 + rho2 = 1; boundary minima
// are bracketed on the grid and refined by golden section.
CounterexampleResult simp_counterexample(const CounterexampleSpec& spec);

// --- double-well potential ----------------------------------------------------

struct DoubleWellSpec {
  double beta = 1.0;
  double lambda = 2.0;
  VectorXd load = VectorXd::Constant(1, 0.5);

  void validate() const;
  Eigen::Index dimension() const { return load.size(); }
};

enum class CriticalKind { GlobalMinimizer, LocalMinimizer, LocalMaximizer };
const char* to_string(CriticalKind kind);

struct CriticalPoint {
  double dual = 0.0;  // root of (dual / beta + lambda) dual^2 = |f|^2 / 2
  VectorXd x;          // f / dual
  double primal_value = 0.0;
  double dual_value = 0.0;
  CriticalKind kind = CriticalKind::GlobalMinimizer;
};

struct DoubleWellResult {
  std::vector<CriticalPoint> criticals;  // descending by dual root
  bool symmetric = false;                // f = 0
  // f = 0 only: minimizers recovered from the loads +-delta e_1.
  std::vector<VectorXd> perturbed_minimizers;
};

// 1/2 beta (1/2 |x|^2 - lambda)^2 - x^T f
double double_well_primal(const DoubleWellSpec& spec, const VectorXd& x);
// -|f|^2 / (2 s) - s^2 / (2 beta) - lambda s
double double_well_dual(const DoubleWellSpec& spec, double s);

DoubleWellResult double_well_triality(const DoubleWellSpec& spec);

}  // namespace cdtopt::analytic

#endif  // CDTOPT_ANALYTIC_HPP
