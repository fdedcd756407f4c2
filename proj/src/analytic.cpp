#include "cdtopt/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "cdtopt/cubic.hpp"
#include "cdtopt/error.hpp"

namespace cdtopt::analytic {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidInstance, what);
}

}  // namespace

BuridanResult buridan(double w_base, double epsilon, int favoured) {
  require(w_base > 0.0 && std::isfinite(w_base), "w_base must be finite and > 0");
  require(favoured == 0 || favoured == 1, "favoured element must be 0 or 1");
  BuridanResult out;
  out.instance.gains = VectorXd::Constant(2, w_base);
  out.instance.gains[favoured] += epsilon;
  out.instance.volumes = VectorXd::Ones(2);
  out.instance.budget = 1.0;
  out.instance.validate();

  const double tol = knapsack::SolveParams<double>{}.existence_rel *
                     std::max(1.0, out.instance.gains.maxCoeff());
  out.report = knapsack::existence_check(out.instance, tol);
  out.solution = knapsack::solve(out.instance, out.instance.budget);
  out.brute = knapsack::brute_force(out.instance);
  return out;
}

void TrussSpec::validate() const {
  require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b), "a and b must be finite and > 0");
  require(load.allFinite() && std::isfinite(epsilon), "load and epsilon must be finite");
  require(max_steps >= 1, "max_steps must be >= 1");
}

Eigen::Matrix2d truss_stiffness(const TrussSpec& spec, const Vector2d& rho) {
  Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
  k(0, 0) = spec.a * rho[0] + spec.b * rho[1];
  k(1, 1) = spec.b * rho[0] + spec.a * rho[1];
  return k;
}

double truss_potential(const TrussSpec& spec, const Vector2d& rho, const Vector2d& load) {
  const Eigen::Matrix2d k = truss_stiffness(spec, rho);
  require(k(0, 0) > 0.0 && k(1, 1) > 0.0, "truss stiffness is singular");
  return -0.5 * (load[0] * load[0] / k(0, 0) + load[1] * load[1] / k(1, 1));
}

TrussResult symmetric_truss(const TrussSpec& spec) {
  spec.validate();
  const Vector2d load = spec.perturbed_load();
  knapsack::SolveParams<double> params;
  params.perturb = spec.perturb_ties;

  TrussResult out;
  Vector2d rho(1.0, 1.0);
  out.history.push_back(rho);
  for (int step = 1; step <= spec.max_steps; ++step) {
    const Eigen::Matrix2d k = truss_stiffness(spec, rho);
    const Vector2d u(load[0] / k(0, 0), load[1] / k(1, 1));
    // Group gains 1/2 u^T K_i u with K1 = diag(a, b), K2 = diag(b, a).
    knapsack::KnapsackInstance<double> inst;
    inst.gains = VectorXd(2);
    inst.gains << 0.5 * (spec.a * u[0] * u[0] + spec.b * u[1] * u[1]),
        0.5 * (spec.b * u[0] * u[0] + spec.a * u[1] * u[1]);
    inst.volumes = VectorXd::Ones(2);
    inst.budget = 1.0;
    const Vector2d next = knapsack::solve(inst, 1.0, params).density.rho;
    out.steps = step;
    out.history.push_back(next);

    if (next == rho) {
      rho = next;
      break;
    }
    const std::size_t m = out.history.size();
    if (m >= 3 && next == out.history[m - 3]) {
      // Period two: keep the stiffer design, i.e. the higher potential.
      out.cycled = true;
      rho = truss_potential(spec, next, load) > truss_potential(spec, rho, load) ? next : rho;
      break;
    }
    rho = next;
  }
  out.rho = rho;
  out.potential = truss_potential(spec, rho, spec.load);
  out.perturbed_potential = truss_potential(spec, rho, load);
  return out;
}

void CounterexampleSpec::validate() const {
  require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b), "a and b must be finite and > 0");
  require(penal >= 1.0 && std::isfinite(penal), "penalty exponent must be >= 1");
  require(load.allFinite(), "load must be finite");
  require(surface_samples >= 2 && boundary_samples >= 3, "too few samples");
}

double penalized_compliance(const CounterexampleSpec& spec, double rho1, double rho2) {
  const double r1 = std::pow(rho1, spec.penal);
  const double r2 = std::pow(rho2, spec.penal);
  const double f1 = spec.load[0], f2 = spec.load[1];
  return 0.5 * (f1 * f1 / (spec.a * r1 + spec.b * r2) + f2 * f2 / (spec.b * r1 + spec.a * r2));
}

CounterexampleResult simp_counterexample(const CounterexampleSpec& spec) {
  spec.validate();
  CounterexampleResult out;

  const int ns = spec.surface_samples;
  out.surface.resize(static_cast<Eigen::Index>(ns) * ns, 3);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      const double r1 = static_cast<double>(i + 1) / ns;
      const double r2 = static_cast<double>(j + 1) / ns;
      out.surface.row(static_cast<Eigen::Index>(i) * ns + j) << r1, r2, penalized_compliance(spec, r1, r2);
    }
  }

  const auto on_line = [&](double t) { return penalized_compliance(spec, t, 1.0 - t); };
  const int nb = spec.boundary_samples;
  const double h = 1.0 / (nb - 1);
  out.boundary.resize(nb, 2);
  for (int i = 0; i < nb; ++i) {
    const double t = i == nb - 1 ? 1.0 : i * h;
    out.boundary.row(i) << t, on_line(t);
  }

  const auto value = [&](int i) { return out.boundary(i, 1); };
  for (int i = 0; i < nb; ++i) {
    const bool left_ok = i == 0 || value(i) <= value(i - 1);
    const bool right_ok = i == nb - 1 || value(i) < value(i + 1);
    if (!left_ok || !right_ok) continue;

    double lo = out.boundary(std::max(i - 1, 0), 0);
    double hi = out.boundary(std::min(i + 1, nb - 1), 0);
    double t = out.boundary(i, 0);
    if (i > 0 && i < nb - 1) {
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = on_line(x1), f2 = on_line(x2);
      while (hi - lo > 1e-12) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = on_line(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = on_line(x2);
        }
      }
      t = 0.5 * (lo + hi);
      if (on_line(t) > value(i)) t = out.boundary(i, 0);
    }
    out.local_minima.push_back({Vector2d(t, 1.0 - t), on_line(t)});
  }
  std::stable_sort(out.local_minima.begin(), out.local_minima.end(),
                   [](const BoundaryMinimum& x, const BoundaryMinimum& y) { return x.value < y.value; });
  if (!out.local_minima.empty()) {
    const double best = out.local_minima.front().value;
    for (const auto& m : out.local_minima)
      if (m.value <= best + 1e-12 * std::max(1.0, std::abs(best))) out.global_minima.push_back(m);
  }
  return out;
}

void DoubleWellSpec::validate() const {
  require(beta > 0.0 && lambda > 0.0 && std::isfinite(beta) && std::isfinite(lambda),
          "beta and lambda must be finite and > 0");
  require(load.size() >= 1 && load.allFinite(), "load must be a finite nonempty vector");
}

const char* to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::GlobalMinimizer: return "global-min";
    case CriticalKind::LocalMinimizer: return "local-min";
    case CriticalKind::LocalMaximizer: return "local-max";
  }
  return "unknown";
}

double double_well_primal(const DoubleWellSpec& spec, const VectorXd& x) {
  const double strain = 0.5 * x.squaredNorm() - spec.lambda;
  return 0.5 * spec.beta * strain * strain - x.dot(spec.load);
}

double double_well_dual(const DoubleWellSpec& spec, double s) {
  return -spec.load.squaredNorm() / (2.0 * s) - s * s / (2.0 * spec.beta) - spec.lambda * s;
}

namespace {

std::vector<double> dual_roots(const DoubleWellSpec& spec) {
  const double rhs = 0.5 * spec.load.squaredNorm();
  const auto roots = solve_real_cubic(1.0 / spec.beta, spec.lambda, 0.0, -rhs);
  std::vector<double> out(roots.begin(), roots.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Positive root of s^3 / beta + lambda s^2 = c for tiny c, where the cubic
// formula loses the root to cancellation. Newton from sqrt(c / lambda) lies
// right of the root on a convex increasing branch and decreases monotonically.
double small_positive_root(double beta, double lambda, double c) {
  double s = std::sqrt(c / lambda);
  for (int it = 0; it < 100; ++it) {
    const double g = (s / beta + lambda) * s * s - c;
    const double next = s - g / ((3.0 * s / beta + 2.0 * lambda) * s);
    if (!(next < s)) break;
    s = next;
  }
  return s;
}

}  // namespace

DoubleWellResult double_well_triality(const DoubleWellSpec& spec) {
  spec.validate();
  DoubleWellResult out;

  if (spec.load.squaredNorm() == 0.0) {
    // The roots 0 (double) give no x = f / s; only s = -beta lambda survives,
    // with x = 0 on the hilltop. The minimizers come back under a tiny load.
    out.symmetric = true;
    CriticalPoint top;
    top.dual = -spec.beta * spec.lambda;
    top.x = VectorXd::Zero(spec.dimension());
    top.primal_value = double_well_primal(spec, top.x);
    top.dual_value = 0.5 * spec.beta * spec.lambda * spec.lambda;
    top.kind = CriticalKind::LocalMaximizer;
    out.criticals.push_back(top);

    const double delta = 1e-9 * std::sqrt(spec.lambda);
    const double s = small_positive_root(spec.beta, spec.lambda, 0.5 * delta * delta);
    for (double sign : {1.0, -1.0}) {
      VectorXd x = VectorXd::Zero(spec.dimension());
      x[0] = sign * delta / s;
      out.perturbed_minimizers.push_back(x);
    }
    return out;
  }

  const std::vector<double> roots = dual_roots(spec);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    CriticalPoint c;
    c.dual = roots[i];
    c.x = spec.load / c.dual;
    c.primal_value = double_well_primal(spec, c.x);
    c.dual_value = double_well_dual(spec, c.dual);
    // Descending order: the positive root first; of the negative ones the
    // one nearer zero is a local min and the most negative a local max.
    if (c.dual > 0.0)
      c.kind = CriticalKind::GlobalMinimizer;
    else if (i + 1 < roots.size())
      c.kind = CriticalKind::LocalMinimizer;
    else
      c.kind = roots.size() == 3 ? CriticalKind::LocalMaximizer : CriticalKind::LocalMinimizer;
    out.criticals.push_back(c);
  }
  return out;
}

}  // namespace cdtopt::analytic
