#ifndef CDTOPT_FEM_HPP
#define CDTOPT_FEM_HPP

// Linear-elastic lower level on structured grids of unit Q4 (2-D, plane
// stress) or unit H8 (3-D) elements.
//
// Numbering (0-based) follows the 88-line 2-D and 169-line 3-D educational
// codes: nodes run down each column first (iy = 0 is the top row), then
// across columns, then across z-layers:
//
//   node(ix, iy, iz) = iz (nelx+1)(nely+1) + ix (nely+1) + iy
//   element(ix, iy, iz) = iz nelx nely + ix nely + iy
//
// Local element nodes are bottom-left, bottom-right, top-right, top-left of
// the lower z-layer, then the same four on the upper layer. The y dof points
// up, so a downward load is negative.

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cdtopt::fem {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Material {
  double E = 1.0;
  double nu = 0.3;
  double E_min = 1e-9;

  void validate() const;
  // Ersatz-material interpolation E_min + (E - E_min) rho^penal.
  double modulus(double rho, double penal = 1.0) const;
};

class Mesh {
 public:
  static Mesh grid2d(int nelx, int nely);
  static Mesh grid3d(int nelx, int nely, int nelz);

  int dim() const { return nelz_ > 0 ? 3 : 2; }
  int nelx() const { return nelx_; }
  int nely() const { return nely_; }
  int nelz() const { return nelz_; }

  Index num_elements() const { return edof_.rows(); }
  Index num_nodes() const;
  Index num_dofs() const { return num_nodes() * dim(); }
  int dofs_per_element() const { return dim() == 2 ? 8 : 24; }
  // Every element has volume 1/n, so the whole design domain has volume 1.
  double element_volume() const { return 1.0 / static_cast<double>(num_elements()); }

  Index node(int ix, int iy, int iz = 0) const;
  Index element(int ix, int iy, int iz = 0) const;
  // Row e lists the global dofs of element e in local order.
  const Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& edof() const {
    return edof_;
  }

 private:
  Mesh(int nelx, int nely, int nelz);

  int nelx_ = 0;
  int nely_ = 0;
  int nelz_ = 0;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> edof_;
};

// Unit-modulus element stiffness; only nu is read from the material.
MatrixXd element_stiffness_2d(const Material& material);
MatrixXd element_stiffness_3d(const Material& material);

class StructuralModel {
 public:
  StructuralModel(Mesh mesh, Material material, std::vector<Index> fixed_dofs, VectorXd load);

  const Mesh& mesh() const { return mesh_; }
  const Material& material() const { return material_; }
  const std::vector<Index>& fixed_dofs() const { return fixed_; }
  const std::vector<Index>& free_dofs() const { return free_; }
  // Position of each global dof in the reduced system, -1 when fixed.
  const std::vector<Index>& reduced_index() const { return reduced_; }
  const VectorXd& load() const { return load_; }
  const MatrixXd& element_matrix() const { return ke_; }

  Index num_elements() const { return mesh_.num_elements(); }
  VectorXd element_volumes() const;
  VectorXd reduce(const VectorXd& full) const;
  VectorXd expand(const VectorXd& reduced) const;

 private:
  Mesh mesh_;
  Material material_;
  std::vector<Index> fixed_;
  std::vector<Index> free_;
  std::vector<Index> reduced_;
  VectorXd load_;
  MatrixXd ke_;
};

struct Displacement {
  VectorXd u;  // all dofs, zero on fixed ones
  double relative_residual = 0.0;  // ||K u - f|| / ||f|| on free dofs
  // ||K u - f|| / (||K|| ||u|| + ||f||), infinity norms. Governs acceptance
  // when the relative residual hits the rounding floor of an E_min-loaded design.
  double backward_error = 0.0;
  bool used_fallback = false;
};

// Reduced (free-dof) stiffness K(rho) with per-element modulus
// E_min + (E - E_min) rho_e^penal.
SparseMatrix assemble(const StructuralModel& model, const VectorXd& rho, double penal = 1.0);

// Repeated equilibrium solves on one model. The sparsity pattern and the
// symbolic factorization are built once; later calls only refill values.
class EquilibriumSolver {
 public:
  explicit EquilibriumSolver(const StructuralModel& model);
  ~EquilibriumSolver();
  EquilibriumSolver(const EquilibriumSolver&) = delete;
  EquilibriumSolver& operator=(const EquilibriumSolver&) = delete;

  Displacement solve(const VectorXd& rho, double penal = 1.0);
  // Reduced stiffness from the most recent solve.
  const SparseMatrix& stiffness() const { return matrix_; }

  static constexpr double kResidualTolerance = 1e-10;
  static constexpr double kBackwardTolerance = 1e-13;

 private:
  void fill(const VectorXd& rho, double penal);

  const StructuralModel& model_;
  SparseMatrix matrix_;
  std::vector<Index> slots_;  // value slot per (element, local row, local col), -1 if fixed
  double norm_inf_ = 0.0;
  struct Factor;
  std::unique_ptr<Factor> factor_;
};

Displacement solve_equilibrium(const StructuralModel& model, const VectorXd& rho,
                               double penal = 1.0);

// w_e = 1/2 E u_e^T K_e u_e with the full modulus, independent of rho.
VectorXd element_energies(const StructuralModel& model, const VectorXd& u);
// Same with the element modulus E_min + (E - E_min) rho_e^penal, so the sum is
// the stored energy 1/2 u^T K(rho) u.
VectorXd element_energies(const StructuralModel& model, const VectorXd& rho, const VectorXd& u,
                          double penal = 1.0);

// 1/2 f^T u
double compliance(const VectorXd& u, const VectorXd& f);
// 1/2 u^T K u on matching (reduced) dofs
double strain_energy(const SparseMatrix& K, const VectorXd& u);
// 1/2 u^T K(rho) u summed element by element over all dofs
double strain_energy(const StructuralModel& model, const VectorXd& rho, const VectorXd& u,
                     double penal = 1.0);

}  // namespace cdtopt::fem

#endif  // CDTOPT_FEM_HPP
