#include "cdtopt/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "cdtopt/error.hpp"
#include "cdtopt/problems.hpp"

namespace cdtopt::baselines {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Eigen::Vector3d centroid(const fem::Mesh& mesh, Index e) {
  const Index layer = static_cast<Index>(mesh.nelx()) * mesh.nely();
  const Index iz = e / layer;
  const Index rest = e % layer;
  return {static_cast<double>(rest / mesh.nely()) + 0.5,
          static_cast<double>(rest % mesh.nely()) + 0.5,
          static_cast<double>(iz) + 0.5};
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void SimpConfig::validate() const {
  if (!(penal >= 1.0)) throw Error(ErrorCode::InvalidInstance, "penal must be >= 1");
  if (!(rmin >= 1.0)) throw Error(ErrorCode::InvalidInstance, "rmin must be >= 1");
  if (!(move > 0.0 && move <= 1.0)) throw Error(ErrorCode::InvalidInstance, "move must lie in (0, 1]");
  if (!(damping > 0.0)) throw Error(ErrorCode::InvalidInstance, "damping must be positive");
  if (!(min_density > 0.0 && min_density < 1.0))
    throw Error(ErrorCode::InvalidInstance, "min_density must lie in (0, 1)");
  if (!(omega2 > 0.0)) throw Error(ErrorCode::InvalidInstance, "omega2 must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidInstance, "max_iters must be at least 1");
}

const char* to_string(SimpStatus status) {
  return status == SimpStatus::Converged ? "converged" : "max-iterations";
}

DensityFilter::DensityFilter(const fem::Mesh& mesh, double rmin) {
  const Index n = mesh.num_elements();
  const int reach = static_cast<int>(std::ceil(rmin)) - 1;
  std::vector<Eigen::Triplet<double>> entries;
  for (Index e = 0; e < n; ++e) {
    const Eigen::Vector3d ce = centroid(mesh, e);
    const int ix = static_cast<int>(ce.x()), iy = static_cast<int>(ce.y()), iz = static_cast<int>(ce.z());
    const int zlo = mesh.dim() == 3 ? std::max(iz - reach, 0) : 0;
    const int zhi = mesh.dim() == 3 ? std::min(iz + reach, mesh.nelz() - 1) : 0;
    for (int kz = zlo; kz <= zhi; ++kz) {
      for (int kx = std::max(ix - reach, 0); kx <= std::min(ix + reach, mesh.nelx() - 1); ++kx) {
        for (int ky = std::max(iy - reach, 0); ky <= std::min(iy + reach, mesh.nely() - 1); ++ky) {
          const double d = std::sqrt(double((ix - kx) * (ix - kx) + (iy - ky) * (iy - ky) +
                                            (iz - kz) * (iz - kz)));
          const double h = rmin - d;
          if (h > 0.0) entries.emplace_back(e, mesh.element(kx, ky, kz), h);
        }
      }
    }
  }
  weights_.resize(n, n);
  weights_.setFromTriplets(entries.begin(), entries.end());
  row_sums_ = weights_ * VectorXd::Ones(n);
}

VectorXd DensityFilter::apply(const VectorXd& x) const {
  return ((weights_ * x).array() / row_sums_.array()).matrix();
}

VectorXd DensityFilter::sensitivity(const VectorXd& x, const VectorXd& dc) const {
  const VectorXd weighted = weights_ * x.cwiseProduct(dc);
  return (weighted.array() / row_sums_.array() / x.array().max(1e-3)).matrix();
}

VectorXd DensityFilter::transpose_apply(const VectorXd& g) const {
  return weights_.transpose() * (g.array() / row_sums_.array()).matrix();
}

SimpResult run_simp(const fem::StructuralModel& model, double volfrac, const SimpConfig& config) {
  config.validate();
  if (!(volfrac > 0.0 && volfrac <= 1.0))
    throw Error(ErrorCode::InvalidInstance, "volfrac must lie in (0, 1]", std::nullopt, volfrac);

  const Index n = model.num_elements();
  const VectorXd volumes = model.element_volumes();
  const double target = volfrac * volumes.sum();
  const VectorXd dv_unit = volumes / volumes.mean();
  const double stiff = model.material().E - model.material().E_min;
  const double E = model.material().E;
  const DensityFilter filter(model.mesh(), config.rmin);
  const bool density_filter = config.filter == FilterType::Density;

  fem::EquilibriumSolver solver(model);
  VectorXd x = VectorXd::Constant(n, volfrac);
  VectorXd phys = density_filter ? filter.apply(x) : x;

  SimpResult result;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const auto start = Clock::now();
    const fem::Displacement state = solver.solve(phys, config.penal);
    // u_e^T K_e u_e at unit modulus
    const VectorXd quad = fem::element_energies(model, state.u) * (2.0 / E);
    VectorXd dc = (-config.penal * stiff * phys.array().pow(config.penal - 1.0) * quad.array()).matrix();
    VectorXd dv = dv_unit;
    const auto update_start = Clock::now();
    if (density_filter) {
      dc = filter.transpose_apply(dc);
      dv = filter.transpose_apply(dv);
    } else {
      dc = filter.sensitivity(x, dc);
    }

    // Optimality criteria with bisection on the volume multiplier.
    double l1 = 0.0, l2 = 1e9, lmid = 0.0;
    int bisections = 0;
    VectorXd x_new(n), phys_new(n);
    while ((l2 - l1) / (l1 + l2) > 1e-9) {
      lmid = 0.5 * (l1 + l2);
      const auto ratio = ((-dc.array()).max(0.0) / (dv.array() * lmid)).pow(config.damping);
      const auto lower = (x.array() - config.move).max(config.min_density);
      const auto upper = (x.array() + config.move).min(1.0);
      x_new = (x.array() * ratio).max(lower).min(upper).matrix();
      phys_new = density_filter ? filter.apply(x_new) : x_new;
      if (volumes.dot(phys_new) > target) l1 = lmid; else l2 = lmid;
      ++bisections;
    }
    const double change = (x_new - x).cwiseAbs().maxCoeff();

    driver::RunEntry entry;
    entry.gamma = iter;
    entry.inner_iters = bisections;
    entry.volume = target;
    entry.design_volume = volumes.dot(phys);
    entry.compliance = fem::compliance(state.u, model.load());
    entry.strain_energy = fem::strain_energy(solver.stiffness(), model.reduce(state.u));
    entry.P_u = kNaN;
    entry.P_dual = kNaN;
    entry.tau = lmid;
    entry.beta = kNaN;
    entry.select_ms = ms_since(update_start);
    entry.elapsed_ms = ms_since(start);
    result.run.record.entries.push_back(entry);

    x = std::move(x_new);
    phys = std::move(phys_new);
    if (change <= config.omega2) {
      result.status = SimpStatus::Converged;
      break;
    }
  }

  result.run.converged = result.status == SimpStatus::Converged;
  result.run.displacement = solver.solve(phys, config.penal);
  result.run.compliance = fem::compliance(result.run.displacement.u, model.load());
  result.run.strain_energy =
      fem::strain_energy(solver.stiffness(), model.reduce(result.run.displacement.u));
  result.run.rho = std::move(phys);
  return result;
}

double gray_fraction(const VectorXd& rho, double low, double high) {
  if (rho.size() == 0) return 0.0;
  const auto gray = ((rho.array() > low) && (rho.array() < high)).count();
  return static_cast<double>(gray) / static_cast<double>(rho.size());
}

VectorXd beso_select(const VectorXd& gains, const VectorXd& volumes, double budget,
                     const VectorXd& previous_rho) {
  const Index n = gains.size();
  if (volumes.size() != n || previous_rho.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "gains, volumes and design differ in length");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (gains[a] != gains[b]) return gains[a] > gains[b];
    const bool sa = previous_rho[a] > 0.5, sb = previous_rho[b] > 0.5;
    if (sa != sb) return sa;
    return a < b;
  });
  const double limit = budget + 1e-12 * std::max(1.0, volumes.sum());
  VectorXd rho = VectorXd::Zero(n);
  double used = 0.0;
  for (Index e : order) {
    if (used + volumes[e] > limit) break;
    rho[e] = 1.0;
    used += volumes[e];
  }
  return rho;
}

driver::TopOptResult run_beso(const fem::StructuralModel& model, double volfrac,
                              const BesoConfig& config, const driver::Observer& observer) {
  driver::ScheduleParams schedule{volfrac, config.mu, config.omega2, config.max_outer, config.gains};
  driver::Selector select = [](const VectorXd& gains, const VectorXd& volumes, double budget,
                               const VectorXd& previous) {
    driver::Selection s;
    s.rho = beso_select(gains, volumes, budget, previous);
    s.tau = kNaN;
    s.tau0 = kNaN;
    s.beta = kNaN;
    return s;
  };
  return driver::run_binary_schedule(model, schedule, select, observer);
}

std::vector<CostRow> per_iteration_cost_probe(const std::vector<std::string>& methods,
                                              const std::vector<std::pair<int, int>>& meshes,
                                              const ProbeSettings& settings) {
  std::vector<CostRow> rows;
  for (const auto& [nelx, nely] : meshes) {
    const fem::StructuralModel model = problems::build_mbb(nelx, nely);
    for (const std::string& method : methods) {
      CostRow row;
      row.method = method;
      row.nelx = nelx;
      row.nely = nely;
      row.elements = model.num_elements();
      double select_ms = 0.0;
      const auto start = Clock::now();
      if (method == "simp") {
        SimpConfig cfg;
        cfg.max_iters = settings.max_outer;
        const SimpResult r = run_simp(model, settings.volfrac, cfg);
        for (const auto& e : r.run.record.entries) select_ms += e.select_ms;
        row.outer_iters = static_cast<int>(r.run.record.entries.size());
        row.compliance = r.run.compliance;
        row.converged = r.run.converged;
      } else if (method == "cdt" || method == "beso") {
        driver::Observer count = [&](const driver::RunEntry& e) {
          select_ms += e.select_ms;
          row.outer_iters = e.gamma;
        };
        try {
          driver::TopOptResult r;
          if (method == "cdt") {
            driver::CdtConfig cfg;
            cfg.volfrac = settings.volfrac;
            cfg.mu = settings.mu;
            cfg.max_outer = settings.max_outer;
            r = driver::run_cdt(model, cfg, count);
          } else {
            BesoConfig cfg;
            cfg.mu = settings.mu;
            cfg.max_outer = settings.max_outer;
            r = run_beso(model, settings.volfrac, cfg, count);
          }
          row.compliance = r.compliance;
          row.converged = r.converged;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::MaxOuterExceeded) throw;
          row.compliance = kNaN;
          row.converged = false;
        }
      } else {
        throw Error(ErrorCode::Usage, "unknown method '" + method + "' (cdt, beso, simp)");
      }
      row.total_ms = ms_since(start);
      const double iters = std::max(1, row.outer_iters);
      row.ms_per_iter = row.total_ms / iters;
      row.select_ms_per_iter = select_ms / iters;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_cost_csv(std::ostream& out, const std::vector<CostRow>& rows) {
  out << "method,nelx,nely,elements,outer_iters,total_ms,ms_per_iter,select_ms_per_iter,compliance,"
         "converged\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%lld,%d,%.12g,%.12g,%.12g,%.12g,%d\n",
                  r.method.c_str(), r.nelx, r.nely, static_cast<long long>(r.elements),
                  r.outer_iters, r.total_ms, r.ms_per_iter, r.select_ms_per_iter, r.compliance,
                  r.converged ? 1 : 0);
    out << buf;
  }
}

}  // namespace cdtopt::baselines
