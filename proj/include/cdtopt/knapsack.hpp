#ifndef CDTOPT_KNAPSACK_HPP
#define CDTOPT_KNAPSACK_HPP

// Linear 0-1 knapsack  max { w^T rho | v^T rho <= V, rho in {0,1}^n }  solved
// through its beta-perturbed canonical dual
//
//   P^d_beta(sigma, tau) = -1/4 sum_e [ (sigma_e + w_e - tau v_e)^2 / sigma_e
//                                       + sigma_e^2 / beta ] - tau V
//
// over sigma > 0, tau >= 0. The primal solution is recovered element-wise as
// rho_e = 1/2 (1 - theta_e(tau) / sigma_e) with theta_e(tau) = tau v_e - w_e.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cdtopt/cubic.hpp"
#include "cdtopt/error.hpp"

namespace cdtopt::knapsack {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
struct KnapsackInstance {
  Vector<Scalar> gains;    // w
  Vector<Scalar> volumes;  // v
  Scalar budget{};         // V_target

  Index size() const { return gains.size(); }
  Scalar total_volume() const { return volumes.sum(); }
  Scalar theta(Index e, Scalar tau) const { return tau * volumes[e] - gains[e]; }

  void validate() const {
    if (gains.size() < 1) throw Error(ErrorCode::InvalidInstance, "empty instance");
    if (volumes.size() != gains.size())
      throw Error(ErrorCode::InvalidInstance, "gains and volumes differ in length");
    for (Index e = 0; e < size(); ++e) {
      if (!std::isfinite(gains[e]) || gains[e] < Scalar(0))
        throw Error(ErrorCode::InvalidInstance, "gain must be finite and >= 0",
                    static_cast<std::size_t>(e));
      if (!std::isfinite(volumes[e]) || !(volumes[e] > Scalar(0)))
        throw Error(ErrorCode::InvalidInstance, "volume must be finite and > 0",
                    static_cast<std::size_t>(e));
    }
    if (!(budget > Scalar(0)) || !std::isfinite(budget))
      throw Error(ErrorCode::InvalidInstance, "budget must be finite and > 0");
  }
};

/// Canonical dual variables {sigma, tau}.
template <typename Scalar = double>
struct DualPoint {
  Vector<Scalar> sigma;
  Scalar tau{};
};

template <typename Scalar = double>
struct BinaryDensity {
  Vector<Scalar> rho;  // exactly 0 or 1

  Scalar volume(const Vector<Scalar>& volumes) const { return volumes.dot(rho); }
  Scalar gain(const Vector<Scalar>& gains) const { return gains.dot(rho); }
};

/// Minimizer set [lower, upper] of the piecewise-linear critical-multiplier
/// objective; `tau` is its midpoint. `upper` is +inf when unbounded.
template <typename Scalar = double>
struct TauCritical {
  Scalar tau{};
  Scalar lower{};
  Scalar upper{};
  bool is_interval() const { return upper > lower; }
};

template <typename Scalar = double>
struct ExistenceReport {
  Scalar tau_c{};
  Scalar tau_lower{};
  Scalar tau_upper{};
  std::vector<Index> degenerate_indices;
  bool unique = true;
};

template <typename Scalar = double>
struct InnerResult {
  DualPoint<Scalar> point;
  Scalar dual_value{};  // P^d_beta at `point`
  int iterations = 0;
  bool converged = false;  // |delta P^d_beta| <= omega1
  bool stalled = false;    // stopped on the relative floor instead
};

template <typename Scalar = double>
struct SolveParams {
  std::optional<Scalar> beta0;  // default max(1, 10 max_e w_e)
  // The two marginal elements absorb the aggregate sigma/(2 beta) imbalance of
  // all others, so the beta needed grows with n; 2^20 is too small at n ~ 10^3.
  Scalar beta_cap_factor = Scalar(0x1p40);
  Scalar tau0 = Scalar(1);
  Scalar omega1 = Scalar(2e-16);
  int max_iters = 1000;
  Scalar stall_rel = Scalar(1e-12);
  Scalar binary_tol = Scalar(1e-6);
  bool perturb = true;
  Scalar perturbation_rel = Scalar(1e-8);  // epsilon = rel * max_e w_e
  Scalar existence_rel = Scalar(1e-12);    // tol = rel * max(1, max_e w_e)
};

template <typename Scalar = double>
struct Certificate {
  Scalar primal{};     // P_u(rho) = -w^T rho on the caller's gains
  Scalar dual_beta{};  // P^d_beta at the returned point (working instance)
  Scalar dual{};       // P^d_u at the returned point (working instance)
  Scalar residual{};   // |P_u(rho) - P^d_beta| on the working instance
  Scalar beta{};
  Scalar effective_budget{};
  int inner_iterations = 0;
  int beta_rounds = 0;
  bool converged = false;
  bool stalled = false;
  bool perturbed = false;
  bool budget_tightened = false;
};

template <typename Scalar = double>
struct SolveResult {
  BinaryDensity<Scalar> density;
  DualPoint<Scalar> point;
  Certificate<Scalar> certificate;
};

template <typename Scalar = double>
struct BruteForceResult {
  Scalar objective{};
  std::vector<std::vector<Index>> optimal_subsets;  // element indices, ascending
};

/// Feasibility slack used when comparing volumes against a budget.
template <typename Scalar>
Scalar volume_tolerance(const KnapsackInstance<Scalar>& instance) {
  return Scalar(1e-12) * std::max(Scalar(1), instance.total_volume());
}

/// The unique sigma > 0 with 2/beta sigma^3 + sigma^2 = theta^2.
template <typename Scalar>
Scalar sigma_from_theta(Scalar theta, Scalar beta) {
  using std::abs;
  using std::cbrt;
  if (!(beta > Scalar(0))) throw Error(ErrorCode::InvalidDual, "beta must be > 0");
  if (!std::isfinite(theta)) throw Error(ErrorCode::NonFinite, "theta is not finite");
  if (abs(theta) <= Scalar(1e-14))
    throw Error(ErrorCode::DegenerateTheta, "theta = 0 has no positive root", std::nullopt,
                static_cast<double>(theta));

  const Scalar a = Scalar(2) / beta;
  const Scalar rhs = theta * theta;
  const Scalar upper = std::min(abs(theta), cbrt(rhs / a));

  Scalar s = solve_real_cubic(a, Scalar(1), Scalar(0), -rhs)[0];
  if (!(s > Scalar(0)) || s > upper) s = upper;

  // f(s) = a s^3 + s^2 - theta^2 is convex and increasing on s > 0, so Newton
  // lands above the root after at most one step and then decreases to it.
  for (int it = 0; it < 100; ++it) {
    const Scalar f = s * s * (a * s + Scalar(1)) - rhs;
    const Scalar df = s * (Scalar(3) * a * s + Scalar(2));
    const Scalar next = s - f / df;
    if (!(next > Scalar(0))) {
      s = s / Scalar(2);
      continue;
    }
    const Scalar step = abs(next - s);
    s = next;
    if (step <= Scalar(4) * std::numeric_limits<Scalar>::epsilon() * s) break;
  }
  return s;
}

/// tau from the volume stationarity condition, clamped to tau >= 0.
template <typename Scalar>
Scalar tau_update(const Vector<Scalar>& sigma, const KnapsackInstance<Scalar>& instance,
                  Scalar budget) {
  if (sigma.size() != instance.size())
    throw Error(ErrorCode::DimensionMismatch, "sigma length differs from instance");
  for (Index e = 0; e < sigma.size(); ++e) {
    if (!(sigma[e] > Scalar(0)))
      throw Error(ErrorCode::InvalidDual, "sigma must be > 0", static_cast<std::size_t>(e));
  }
  const auto& v = instance.volumes.array();
  const auto& w = instance.gains.array();
  const auto& s = sigma.array();
  const Scalar numer = (v * (Scalar(1) + w / s)).sum() - Scalar(2) * budget;
  const Scalar denom = (v.square() / s).sum();
  return std::max(numer / denom, Scalar(0));
}

template <typename Scalar>
Scalar dual_objective(const DualPoint<Scalar>& point, const KnapsackInstance<Scalar>& instance,
                      Scalar budget) {
  const auto psi = point.sigma.array() + instance.gains.array() -
                   point.tau * instance.volumes.array();
  return -Scalar(0.25) * (psi.square() / point.sigma.array()).sum() - point.tau * budget;
}

template <typename Scalar>
Scalar dual_objective_beta(const DualPoint<Scalar>& point,
                           const KnapsackInstance<Scalar>& instance, Scalar budget,
                           Scalar beta) {
  return dual_objective(point, instance, budget) -
         Scalar(0.25) / beta * point.sigma.squaredNorm();
}

/// Alternates the per-element cubic solve for sigma with the closed-form tau
/// update until the perturbed dual stops changing.
template <typename Scalar>
InnerResult<Scalar> inner_fixed_point(const KnapsackInstance<Scalar>& instance, Scalar budget,
                                      Scalar beta, Scalar tau0, Scalar omega1,
                                      int max_iters, Scalar stall_rel = Scalar(1e-12)) {
  using std::abs;
  if (!(tau0 >= Scalar(0))) throw Error(ErrorCode::InvalidDual, "tau0 must be >= 0");
  if (!(omega1 > Scalar(0))) throw Error(ErrorCode::InvalidDual, "omega1 must be > 0");
  if (max_iters < 1) throw Error(ErrorCode::InvalidDual, "max_iters must be >= 1");

  const Index n = instance.size();
  InnerResult<Scalar> result;
  result.point.sigma.resize(n);
  Scalar tau = tau0;
  Scalar previous = std::numeric_limits<Scalar>::quiet_NaN();

  for (int k = 1; k <= max_iters; ++k) {
    for (Index e = 0; e < n; ++e) {
      try {
        result.point.sigma[e] = sigma_from_theta(instance.theta(e, tau), beta);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::DegenerateTheta) throw;
        throw Error(ErrorCode::DegenerateTheta,
                    "theta_e(tau) = 0 at iteration " + std::to_string(k),
                    static_cast<std::size_t>(e), static_cast<double>(tau));
      }
    }
    tau = tau_update(result.point.sigma, instance, budget);
    result.point.tau = tau;
    const Scalar value = dual_objective_beta(result.point, instance, budget, beta);
    if (!std::isfinite(value) || !std::isfinite(tau))
      throw Error(ErrorCode::NonFinite, "non-finite dual iterate at iteration " + std::to_string(k));
    result.iterations = k;
    result.dual_value = value;

    if (k > 1) {
      const Scalar change = abs(value - previous);
      if (change <= omega1) {
        result.converged = true;
        break;
      }
      if (change <= stall_rel * abs(value)) {
        result.stalled = true;
        break;
      }
    }
    previous = value;
  }
  return result;
}

/// rho_e = 1/2 (1 - theta_e(tau) / sigma_e), without rounding.
template <typename Scalar>
Vector<Scalar> raw_density(const DualPoint<Scalar>& point,
                           const KnapsackInstance<Scalar>& instance) {
  const auto theta = point.tau * instance.volumes.array() - instance.gains.array();
  return (Scalar(0.5) * (Scalar(1) - theta / point.sigma.array())).matrix();
}

template <typename Scalar>
Scalar binary_deviation(const Vector<Scalar>& raw) {
  return raw.array().abs().min((raw.array() - Scalar(1)).abs()).maxCoeff();
}

template <typename Scalar>
BinaryDensity<Scalar> recover_density(const DualPoint<Scalar>& point,
                                      const KnapsackInstance<Scalar>& instance,
                                      Scalar tol = Scalar(1e-6)) {
  for (Index e = 0; e < point.sigma.size(); ++e) {
    if (!(point.sigma[e] > Scalar(0)))
      throw Error(ErrorCode::InvalidDual, "sigma must be > 0", static_cast<std::size_t>(e));
  }
  const Vector<Scalar> raw = raw_density(point, instance);
  const Scalar deviation = binary_deviation(raw);
  if (!(deviation <= tol))
    throw Error(ErrorCode::NotBinary, "recovered density is not binary", std::nullopt,
                static_cast<double>(deviation));
  BinaryDensity<Scalar> density;
  density.rho = (raw.array() >= Scalar(0.5)).template cast<Scalar>().matrix();
  return density;
}

/// Minimizes  sum_e (|w_e - tau v_e| - tau v_e) + 2 tau V  over tau >= 0.
///
/// The objective is convex piecewise linear with slope 2 (V - sum_{w_e/v_e > tau} v_e),
/// so the minimizer is found exactly by a sweep over the sorted breakpoints.
template <typename Scalar>
TauCritical<Scalar> tau_critical(const KnapsackInstance<Scalar>& instance) {
  using std::abs;
  const Index n = instance.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  const auto ratio = [&](Index e) { return instance.gains[e] / instance.volumes[e]; };
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return ratio(a) < ratio(b); });

  const Scalar tol = volume_tolerance(instance);
  const Scalar budget = instance.budget;
  Scalar above = instance.total_volume();  // volume with ratio > current breakpoint

  // Breakpoints in ascending order: 0 first, then each distinct ratio.
  std::size_t next = 0;
  Scalar breakpoint = Scalar(0);
  for (;;) {
    while (next < order.size() && ratio(order[next]) <= breakpoint) {
      above -= instance.volumes[order[next]];
      ++next;
    }
    if (next == order.size()) above = Scalar(0);
    const Scalar slope = budget - above;
    const Scalar following = next < order.size() ? ratio(order[next])
                                                 : std::numeric_limits<Scalar>::infinity();
    if (abs(slope) <= tol) {
      TauCritical<Scalar> tc{breakpoint, breakpoint, following};
      tc.tau = std::isfinite(following) ? Scalar(0.5) * (breakpoint + following) : breakpoint;
      return tc;
    }
    if (slope > Scalar(0)) return TauCritical<Scalar>{breakpoint, breakpoint, breakpoint};
    breakpoint = following;
  }
}

template <typename Scalar>
ExistenceReport<Scalar> existence_check(const KnapsackInstance<Scalar>& instance, Scalar tol) {
  using std::abs;
  const TauCritical<Scalar> tc = tau_critical(instance);
  ExistenceReport<Scalar> report;
  report.tau_c = tc.tau;
  report.tau_lower = tc.lower;
  report.tau_upper = tc.upper;
  // theta_e is linear in tau, so it vanishes on the whole minimizer set iff it
  // vanishes at both ends.
  for (Index e = 0; e < instance.size(); ++e) {
    bool flat = abs(instance.theta(e, tc.lower)) <= tol;
    if (std::isfinite(tc.upper)) flat = flat && abs(instance.theta(e, tc.upper)) <= tol;
    if (flat) report.degenerate_indices.push_back(e);
  }
  report.unique = report.degenerate_indices.empty();
  return report;
}

/// w_e <- w_e + epsilon (n - e) / n for 0-based e: a strictly decreasing ramp.
template <typename Scalar>
KnapsackInstance<Scalar> perturb(const KnapsackInstance<Scalar>& instance, Scalar epsilon) {
  KnapsackInstance<Scalar> out = instance;
  const Index n = instance.size();
  for (Index e = 0; e < n; ++e) {
    out.gains[e] += epsilon * Scalar(n - e) / Scalar(n);
  }
  return out;
}

/// Exhaustive enumeration of every feasible subset (test oracle, n <= 25).
template <typename Scalar>
BruteForceResult<Scalar> brute_force(const KnapsackInstance<Scalar>& instance) {
  using std::abs;
  const Index n = instance.size();
  if (n > 25) throw Error(ErrorCode::TooLarge, "brute force limited to n <= 25");

  const Scalar limit = instance.budget + volume_tolerance(instance);
  BruteForceResult<Scalar> out;
  out.objective = -std::numeric_limits<Scalar>::infinity();
  std::vector<Index> chosen;

  const auto tie_tol = [](Scalar value) { return Scalar(1e-12) * std::max(Scalar(1), abs(value)); };
  // Depth-first over include/exclude; infeasible branches stay infeasible.
  auto visit = [&](auto&& self, Index e, Scalar gain, Scalar volume) -> void {
    if (e == n) {
      if (out.optimal_subsets.empty() || gain > out.objective + tie_tol(out.objective)) {
        out.objective = gain;
        out.optimal_subsets.clear();
        out.optimal_subsets.push_back(chosen);
      } else if (abs(gain - out.objective) <= tie_tol(out.objective)) {
        out.optimal_subsets.push_back(chosen);
      }
      return;
    }
    if (volume + instance.volumes[e] <= limit) {
      chosen.push_back(e);
      self(self, e + 1, gain + instance.gains[e], volume + instance.volumes[e]);
      chosen.pop_back();
    }
    self(self, e + 1, gain, volume);
  };
  visit(visit, Index(0), Scalar(0), Scalar(0));
  return out;
}

namespace detail {

template <typename Scalar>
SolveResult<Scalar> trivial_selection(const KnapsackInstance<Scalar>& original,
                                      const KnapsackInstance<Scalar>& work, Scalar beta,
                                      bool keep_all) {
  // keep_all: the budget is slack, tau = 0 and every theta_e = -w_e <= 0.
  // Otherwise nothing fits, and any tau above every ratio keeps all theta_e > 0.
  const Scalar max_ratio = (work.gains.array() / work.volumes.array()).maxCoeff();
  SolveResult<Scalar> result;
  result.point.tau = keep_all ? Scalar(0) : Scalar(2) * max_ratio + Scalar(1);
  result.point.sigma.resize(work.size());
  for (Index e = 0; e < work.size(); ++e) {
    const Scalar theta = work.theta(e, result.point.tau);
    // A zero-gain element is indifferent at tau = 0; any sigma > 0 certifies it.
    result.point.sigma[e] = std::abs(theta) > Scalar(1e-14) ? sigma_from_theta(theta, beta)
                                                            : Scalar(1);
  }
  result.density.rho = keep_all ? Vector<Scalar>::Ones(work.size())
                                : Vector<Scalar>::Zero(work.size());
  const Scalar budget = keep_all ? work.total_volume() : Scalar(0);
  auto& cert = result.certificate;
  cert.primal = -original.gains.dot(result.density.rho);
  cert.dual_beta = dual_objective_beta(result.point, work, budget, beta);
  cert.dual = dual_objective(result.point, work, budget);
  cert.residual = std::abs(-work.gains.dot(result.density.rho) - cert.dual_beta);
  cert.beta = beta;
  cert.effective_budget = budget;
  cert.converged = true;
  return result;
}

}  // namespace detail

/// Global solution of the knapsack at budget `budget` via the perturbed dual.
///
/// Degenerate instances (theta_e(tau_c) = 0) are first de-symmetrized with the
/// ramp perturbation when several elements share the critical ratio; a single
/// critical element whose volume straddles the budget is then excluded by
/// tightening the budget to the volume strictly above the critical ratio.
/// beta is raised by powers of two while the recovered density is not binary.
template <typename Scalar>
SolveResult<Scalar> solve(const KnapsackInstance<Scalar>& instance, Scalar budget,
                          const SolveParams<Scalar>& params = {}) {
  using std::abs;
  using std::ceil;
  using std::log2;
  KnapsackInstance<Scalar> work = instance;
  work.budget = budget;
  work.validate();
  work.budget = std::min(budget, work.total_volume());

  const Scalar max_gain = work.gains.maxCoeff();
  const Scalar beta_start = params.beta0.value_or(std::max(Scalar(1), Scalar(10) * max_gain));
  if (work.budget >= work.total_volume() - volume_tolerance(work))
    return detail::trivial_selection(instance, work, beta_start, true);

  const Scalar existence_tol = params.existence_rel * std::max(Scalar(1), max_gain);
  ExistenceReport<Scalar> report = existence_check(work, existence_tol);

  bool perturbed = false;
  bool tightened = false;
  if (!report.unique) {
    if (!params.perturb)
      throw Error(ErrorCode::DegenerateInstance, "theta_e(tau_c) = 0 and perturbation is disabled",
                  static_cast<std::size_t>(report.degenerate_indices.front()),
                  static_cast<double>(report.tau_c));
    if (report.degenerate_indices.size() > 1) {
      const Scalar eps = params.perturbation_rel * (max_gain > Scalar(0) ? max_gain : Scalar(1));
      work = perturb(work, eps);
      perturbed = true;
      report = existence_check(work, existence_tol);
    }
    if (!report.unique) {
      Scalar above = Scalar(0);
      for (Index e = 0; e < work.size(); ++e)
        if (work.theta(e, report.tau_c) < -existence_tol) above += work.volumes[e];
      work.budget = above;
      tightened = true;
      if (above <= volume_tolerance(work)) {
        auto result = detail::trivial_selection(instance, work, beta_start, false);
        result.certificate.perturbed = perturbed;
        result.certificate.budget_tightened = true;
        return result;
      }
      report = existence_check(work, existence_tol);
      if (!report.unique)
        throw Error(ErrorCode::Unsolved, "instance stays degenerate after perturbation",
                    static_cast<std::size_t>(report.degenerate_indices.front()),
                    static_cast<double>(report.tau_c));
    }
  }

  const Scalar beta_cap = beta_start * params.beta_cap_factor;
  const Scalar limit = work.budget + volume_tolerance(work);

  Scalar beta = beta_start;
  Scalar tau = params.tau0;
  bool retried_degenerate = false;
  int total_iters = 0;
  int rounds = 0;

  for (;;) {
    ++rounds;
    InnerResult<Scalar> inner;
    try {
      inner = inner_fixed_point(work, work.budget, beta, tau, params.omega1, params.max_iters,
                                params.stall_rel);
    } catch (const Error& err) {
      // A start exactly on a breakpoint; restart from the critical multiplier,
      // which is a non-degenerate point after the checks above.
      if (err.code() != ErrorCode::DegenerateTheta || retried_degenerate) throw;
      retried_degenerate = true;
      tau = report.tau_c;
      continue;
    }
    total_iters += inner.iterations;

    // Pair the final multiplier with its own sigma. The last sigma belongs to
    // the previous multiplier, and for a marginal element with |theta| near
    // rounding level the few-ulp gap between the two is amplified by 1/|theta|.
    DualPoint<Scalar> point = inner.point;
    for (Index e = 0; e < work.size(); ++e) {
      try {
        point.sigma[e] = sigma_from_theta(work.theta(e, point.tau), beta);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::DegenerateTheta) throw;
      }
    }

    const Vector<Scalar> raw = raw_density(point, work);
    const Scalar deviation = binary_deviation(raw);
    bool accepted = deviation <= params.binary_tol;
    if (accepted) {
      const Vector<Scalar> rho = (raw.array() >= Scalar(0.5)).template cast<Scalar>().matrix();
      accepted = work.volumes.dot(rho) <= limit;
    }
    if (accepted) {
      SolveResult<Scalar> result;
      result.point = point;
      result.density = recover_density(point, work, params.binary_tol);
      auto& cert = result.certificate;
      cert.primal = -instance.gains.dot(result.density.rho);
      cert.dual_beta = dual_objective_beta(point, work, work.budget, beta);
      cert.dual = dual_objective(point, work, work.budget);
      cert.residual = abs(-work.gains.dot(result.density.rho) - cert.dual_beta);
      cert.beta = beta;
      cert.effective_budget = work.budget;
      cert.inner_iterations = total_iters;
      cert.beta_rounds = rounds;
      cert.converged = inner.converged;
      cert.stalled = inner.stalled;
      cert.perturbed = perturbed;
      cert.budget_tightened = tightened;
      return result;
    }
    if (beta >= beta_cap)
      throw Error(ErrorCode::Unsolved, "density still not binary at the beta cap", std::nullopt,
                  static_cast<double>(deviation));
    // The deviation from {0,1} decays like 1/beta; jump by the matching power of two.
    Scalar factor = Scalar(2);
    if (deviation > params.binary_tol && std::isfinite(deviation))
      factor = std::max(factor, std::exp2(ceil(log2(deviation / params.binary_tol))));
    beta = std::min(beta * factor, beta_cap);
    // The stalled multiplier usually sits next to a breakpoint where the
    // iteration barely moves; tau_c lies inside the limiting multiplier set.
    tau = report.tau_c;
  }
}

}  // namespace cdtopt::knapsack

#endif  // CDTOPT_KNAPSACK_HPP
