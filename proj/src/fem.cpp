#include "cdtopt/fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "cdtopt/error.hpp"

namespace cdtopt::fem {

void Material::validate() const {
  if (!(E_min > 0.0) || !(E > E_min) || !std::isfinite(E))
    throw Error(ErrorCode::InvalidModel, "material needs E > E_min > 0");
  if (!(nu >= 0.0 && nu < 0.5)) throw Error(ErrorCode::InvalidModel, "Poisson ratio must lie in [0, 0.5)");
}

double Material::modulus(double rho, double penal) const {
  return E_min + (E - E_min) * (penal == 1.0 ? rho : std::pow(rho, penal));
}

// --- Mesh ----------------------------------------------------------------------

Mesh::Mesh(int nelx, int nely, int nelz) : nelx_(nelx), nely_(nely), nelz_(nelz) {
  const int layers = std::max(nelz, 1);
  const Index n = static_cast<Index>(nelx) * nely * layers;
  const int d = dim();
  edof_.resize(n, dofs_per_element());
  for (int iz = 0; iz < layers; ++iz) {
    for (int ix = 0; ix < nelx; ++ix) {
      for (int iy = 0; iy < nely; ++iy) {
        const Index e = element(ix, iy, iz);
        const int z_levels = d == 3 ? 2 : 1;
        int local = 0;
        for (int dz = 0; dz < z_levels; ++dz) {
          const std::array<Index, 4> nodes = {node(ix, iy + 1, iz + dz), node(ix + 1, iy + 1, iz + dz),
                                              node(ix + 1, iy, iz + dz), node(ix, iy, iz + dz)};
          for (Index nd : nodes) {
            for (int c = 0; c < d; ++c) edof_(e, local++) = d * nd + c;
          }
        }
      }
    }
  }
}

Mesh Mesh::grid2d(int nelx, int nely) {
  if (nelx < 1 || nely < 1) throw Error(ErrorCode::InvalidModel, "mesh dimensions must be >= 1");
  return Mesh(nelx, nely, 0);
}

Mesh Mesh::grid3d(int nelx, int nely, int nelz) {
  if (nelx < 1 || nely < 1 || nelz < 1)
    throw Error(ErrorCode::InvalidModel, "mesh dimensions must be >= 1");
  return Mesh(nelx, nely, nelz);
}

Index Mesh::num_nodes() const {
  const Index plane = static_cast<Index>(nelx_ + 1) * (nely_ + 1);
  return dim() == 3 ? plane * (nelz_ + 1) : plane;
}

Index Mesh::node(int ix, int iy, int iz) const {
  return static_cast<Index>(iz) * (nelx_ + 1) * (nely_ + 1) + static_cast<Index>(ix) * (nely_ + 1) + iy;
}

Index Mesh::element(int ix, int iy, int iz) const {
  return static_cast<Index>(iz) * nelx_ * nely_ + static_cast<Index>(ix) * nely_ + iy;
}

// --- element matrices ----------------------------------------------------------

MatrixXd element_stiffness_2d(const Material& material) {
  const double nu = material.nu;
  Eigen::Matrix4d a11, a12, b11, b12;
  a11 << 12, 3, -6, -3, 3, 12, 3, 0, -6, 3, 12, -3, -3, 0, -3, 12;
  a12 << -6, -3, 0, 3, -3, -6, -3, -6, 0, -3, -6, 3, 3, -6, 3, -6;
  b11 << -4, 3, -2, 9, 3, -4, -9, 4, -2, -9, -4, -3, 9, 4, -3, -4;
  b12 << 2, -3, 4, -9, -3, 2, 9, -2, 4, 9, 2, 3, -9, -2, 3, 2;
  MatrixXd a(8, 8), b(8, 8);
  a << a11, a12, a12.transpose(), a11;
  b << b11, b12, b12.transpose(), b11;
  return (a + nu * b) / (24.0 * (1.0 - nu * nu));
}

MatrixXd element_stiffness_3d(const Material& material) {
  const double nu = material.nu;
  Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
  const double scale = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
  D.topLeftCorner<3, 3>().setConstant(nu * scale);
  D.topLeftCorner<3, 3>().diagonal().setConstant((1.0 - nu) * scale);
  D.bottomRightCorner<3, 3>().diagonal().setConstant(0.5 * (1.0 - 2.0 * nu) * scale);

  constexpr std::array<double, 8> xi = {-1, 1, 1, -1, -1, 1, 1, -1};
  constexpr std::array<double, 8> eta = {-1, -1, 1, 1, -1, -1, 1, 1};
  constexpr std::array<double, 8> zeta = {-1, -1, -1, -1, 1, 1, 1, 1};
  const double g = 1.0 / std::sqrt(3.0);

  MatrixXd ke = MatrixXd::Zero(24, 24);
  Eigen::Matrix<double, 6, 24> B;
  for (double gx : {-g, g}) {
    for (double gy : {-g, g}) {
      for (double gz : {-g, g}) {
        B.setZero();
        for (int i = 0; i < 8; ++i) {
          // Unit cube: x = (xi + 1) / 2, so d/dx = 2 d/dxi and det J = 1/8.
          const double dx = 2.0 * xi[i] * (1 + eta[i] * gy) * (1 + zeta[i] * gz) / 8.0;
          const double dy = 2.0 * eta[i] * (1 + xi[i] * gx) * (1 + zeta[i] * gz) / 8.0;
          const double dz = 2.0 * zeta[i] * (1 + xi[i] * gx) * (1 + eta[i] * gy) / 8.0;
          B(0, 3 * i) = dx;
          B(1, 3 * i + 1) = dy;
          B(2, 3 * i + 2) = dz;
          B(3, 3 * i) = dy;
          B(3, 3 * i + 1) = dx;
          B(4, 3 * i + 1) = dz;
          B(4, 3 * i + 2) = dy;
          B(5, 3 * i) = dz;
          B(5, 3 * i + 2) = dx;
        }
        ke.noalias() += B.transpose() * D * B / 8.0;
      }
    }
  }
  return 0.5 * (ke + ke.transpose());
}

// --- StructuralModel -----------------------------------------------------------

StructuralModel::StructuralModel(Mesh mesh, Material material, std::vector<Index> fixed_dofs,
                                 VectorXd load)
    : mesh_(std::move(mesh)), material_(material), fixed_(std::move(fixed_dofs)), load_(std::move(load)) {
  material_.validate();
  const Index ndof = mesh_.num_dofs();
  if (load_.size() != ndof)
    throw Error(ErrorCode::DimensionMismatch, "load has " + std::to_string(load_.size()) +
                                                  " entries, mesh has " + std::to_string(ndof) + " dofs");
  if (!load_.allFinite()) throw Error(ErrorCode::InvalidModel, "load is not finite");
  if (fixed_.empty()) throw Error(ErrorCode::InvalidModel, "no supports");
  std::sort(fixed_.begin(), fixed_.end());
  fixed_.erase(std::unique(fixed_.begin(), fixed_.end()), fixed_.end());
  if (fixed_.front() < 0 || fixed_.back() >= ndof)
    throw Error(ErrorCode::InvalidModel, "fixed dof out of range");

  reduced_.assign(static_cast<std::size_t>(ndof), -1);
  std::size_t k = 0;
  for (Index dof = 0; dof < ndof; ++dof) {
    if (k < fixed_.size() && fixed_[k] == dof) {
      if (load_[dof] != 0.0)
        throw Error(ErrorCode::InvalidModel, "load on fixed dof", static_cast<std::size_t>(dof));
      ++k;
      continue;
    }
    reduced_[static_cast<std::size_t>(dof)] = static_cast<Index>(free_.size());
    free_.push_back(dof);
  }
  ke_ = mesh_.dim() == 2 ? element_stiffness_2d(material_) : element_stiffness_3d(material_);
}

VectorXd StructuralModel::element_volumes() const {
  return VectorXd::Constant(num_elements(), mesh_.element_volume());
}

VectorXd StructuralModel::reduce(const VectorXd& full) const {
  VectorXd out(static_cast<Index>(free_.size()));
  for (std::size_t i = 0; i < free_.size(); ++i) out[static_cast<Index>(i)] = full[free_[i]];
  return out;
}

VectorXd StructuralModel::expand(const VectorXd& reduced) const {
  VectorXd out = VectorXd::Zero(mesh_.num_dofs());
  for (std::size_t i = 0; i < free_.size(); ++i) out[free_[i]] = reduced[static_cast<Index>(i)];
  return out;
}

// --- assembly and solve ----------------------------------------------------------

namespace {

void check_density(const StructuralModel& model, const VectorXd& rho) {
  if (rho.size() != model.num_elements())
    throw Error(ErrorCode::DimensionMismatch, "density has " + std::to_string(rho.size()) +
                                                  " entries, mesh has " +
                                                  std::to_string(model.num_elements()) + " elements");
  if (!rho.allFinite()) throw Error(ErrorCode::NonFinite, "density is not finite");
}

}  // namespace

SparseMatrix assemble(const StructuralModel& model, const VectorXd& rho, double penal) {
  check_density(model, rho);
  const auto& edof = model.mesh().edof();
  const auto& map = model.reduced_index();
  const MatrixXd& ke = model.element_matrix();
  const Index nfree = static_cast<Index>(model.free_dofs().size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(edof.rows() * edof.cols() * edof.cols()));
  for (Index e = 0; e < edof.rows(); ++e) {
    const double m = model.material().modulus(rho[e], penal);
    for (Index a = 0; a < edof.cols(); ++a) {
      const Index ra = map[static_cast<std::size_t>(edof(e, a))];
      if (ra < 0) continue;
      for (Index b = 0; b < edof.cols(); ++b) {
        const Index rb = map[static_cast<std::size_t>(edof(e, b))];
        if (rb >= 0) triplets.emplace_back(ra, rb, m * ke(a, b));
      }
    }
  }
  SparseMatrix K(nfree, nfree);
  K.setFromTriplets(triplets.begin(), triplets.end());
  K.makeCompressed();
  return K;
}

struct EquilibriumSolver::Factor {
  Eigen::SimplicialLLT<SparseMatrix> llt;
  bool analyzed = false;
};

EquilibriumSolver::EquilibriumSolver(const StructuralModel& model)
    : model_(model), factor_(std::make_unique<Factor>()) {
  matrix_ = assemble(model, VectorXd::Ones(model.num_elements()));
  const auto& edof = model.mesh().edof();
  const auto& map = model.reduced_index();
  const Index per = edof.cols();
  slots_.assign(static_cast<std::size_t>(edof.rows() * per * per), -1);
  const auto* outer = matrix_.outerIndexPtr();
  const auto* inner = matrix_.innerIndexPtr();
  for (Index e = 0; e < edof.rows(); ++e) {
    for (Index a = 0; a < per; ++a) {
      const Index ra = map[static_cast<std::size_t>(edof(e, a))];
      if (ra < 0) continue;
      for (Index b = 0; b < per; ++b) {
        const Index rb = map[static_cast<std::size_t>(edof(e, b))];
        if (rb < 0) continue;
        // Column-major storage: column rb holds the sorted rows.
        const auto* first = inner + outer[rb];
        const auto* last = inner + outer[rb + 1];
        const auto* it = std::lower_bound(first, last, static_cast<int>(ra));
        slots_[static_cast<std::size_t>((e * per + a) * per + b)] = it - inner;
      }
    }
  }
}

EquilibriumSolver::~EquilibriumSolver() = default;

void EquilibriumSolver::fill(const VectorXd& rho, double penal) {
  check_density(model_, rho);
  const MatrixXd& ke = model_.element_matrix();
  const Index per = ke.rows();
  double* values = matrix_.valuePtr();
  std::fill(values, values + matrix_.nonZeros(), 0.0);
  for (Index e = 0; e < model_.num_elements(); ++e) {
    const double m = model_.material().modulus(rho[e], penal);
    const Index* slot = slots_.data() + e * per * per;
    for (Index a = 0; a < per; ++a) {
      for (Index b = 0; b < per; ++b, ++slot) {
        if (*slot >= 0) values[*slot] += m * ke(a, b);
      }
    }
  }
  // Symmetric, so the largest absolute column sum is the infinity norm.
  norm_inf_ = 0.0;
  for (Index c = 0; c < matrix_.outerSize(); ++c) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(matrix_, c); it; ++it) sum += std::abs(it.value());
    norm_inf_ = std::max(norm_inf_, sum);
  }
}

Displacement EquilibriumSolver::solve(const VectorXd& rho, double penal) {
  fill(rho, penal);
  Displacement out;
  const VectorXd f = model_.reduce(model_.load());
  const double fnorm = f.norm();
  if (fnorm == 0.0) {
    out.u = VectorXd::Zero(model_.mesh().num_dofs());
    return out;
  }

  VectorXd x;
  double rel = std::numeric_limits<double>::infinity();
  double backward = std::numeric_limits<double>::infinity();
  const auto measure = [&] {
    const VectorXd r = f - matrix_ * x;
    rel = r.norm() / fnorm;
    backward = r.lpNorm<Eigen::Infinity>() /
               (norm_inf_ * x.lpNorm<Eigen::Infinity>() + f.lpNorm<Eigen::Infinity>());
    if (!x.allFinite()) rel = backward = std::numeric_limits<double>::infinity();
  };
  const auto accepted = [&] { return rel <= kResidualTolerance || backward <= kBackwardTolerance; };

  auto& llt = factor_->llt;
  if (!factor_->analyzed) {
    llt.analyzePattern(matrix_);
    factor_->analyzed = true;
  }
  llt.factorize(matrix_);
  const bool factored = llt.info() == Eigen::Success;
  if (factored) {
    x = llt.solve(f);
    // One step of iterative refinement recovers digits lost to the E_min contrast.
    x += llt.solve(f - matrix_ * x);
    measure();
  }
  if (!accepted()) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(0.1 * kResidualTolerance);
    cg.setMaxIterations(static_cast<Index>(20 * f.size()));
    cg.compute(matrix_);
    x = (x.size() == f.size() && x.allFinite()) ? VectorXd(cg.solveWithGuess(f, x))
                                                : VectorXd(cg.solve(f));
    measure();
    out.used_fallback = true;
  }
  if (!accepted())
    throw Error(ErrorCode::SolverBreakdown,
                "equilibrium residual " + std::to_string(rel) + ", backward error " +
                    std::to_string(backward) + " (factorization " + (factored ? "ok" : "failed") + ")",
                std::nullopt, rel);
  out.u = model_.expand(x);
  out.relative_residual = rel;
  out.backward_error = backward;
  return out;
}

Displacement solve_equilibrium(const StructuralModel& model, const VectorXd& rho, double penal) {
  EquilibriumSolver solver(model);
  return solver.solve(rho, penal);
}

// --- energies ------------------------------------------------------------------

namespace {

template <typename Weight>
VectorXd element_quadratic(const StructuralModel& model, const VectorXd& u, Weight weight) {
  if (u.size() != model.mesh().num_dofs())
    throw Error(ErrorCode::DimensionMismatch, "displacement length differs from dof count");
  const auto& edof = model.mesh().edof();
  const MatrixXd& ke = model.element_matrix();
  VectorXd out(edof.rows());
  VectorXd ue(edof.cols());
  for (Index e = 0; e < edof.rows(); ++e) {
    for (Index a = 0; a < edof.cols(); ++a) ue[a] = u[edof(e, a)];
    out[e] = 0.5 * weight(e) * ue.dot(ke * ue);
  }
  return out;
}

}  // namespace

VectorXd element_energies(const StructuralModel& model, const VectorXd& u) {
  const double E = model.material().E;
  // K_e is positive semidefinite; rounding can still leave a tiny negative value.
  return element_quadratic(model, u, [E](Index) { return E; }).cwiseMax(0.0);
}

VectorXd element_energies(const StructuralModel& model, const VectorXd& rho, const VectorXd& u,
                          double penal) {
  check_density(model, rho);
  const Material& mat = model.material();
  return element_quadratic(model, u, [&](Index e) { return mat.modulus(rho[e], penal); })
      .cwiseMax(0.0);
}

double compliance(const VectorXd& u, const VectorXd& f) {
  if (u.size() != f.size()) throw Error(ErrorCode::DimensionMismatch, "u and f differ in length");
  return 0.5 * f.dot(u);
}

double strain_energy(const SparseMatrix& K, const VectorXd& u) {
  if (K.cols() != u.size()) throw Error(ErrorCode::DimensionMismatch, "K and u differ in size");
  return 0.5 * u.dot(K * u);
}

double strain_energy(const StructuralModel& model, const VectorXd& rho, const VectorXd& u,
                     double penal) {
  check_density(model, rho);
  const Material& mat = model.material();
  return element_quadratic(model, u, [&](Index e) { return mat.modulus(rho[e], penal); }).sum();
}

}  // namespace cdtopt::fem
