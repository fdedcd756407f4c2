#include "cdtopt/problems.hpp"

#include <cmath>

#include "cdtopt/error.hpp"

namespace cdtopt::problems {

using fem::Index;
using fem::Mesh;
using fem::StructuralModel;
using fem::VectorXd;

void ProblemSpec::validate() const {
  const int min_dim = kind == ProblemKind::Mbb2d ? 2 : 1;
  if (nelx < min_dim || nely < min_dim)
    throw Error(ErrorCode::InvalidModel, "mesh too small for " + std::string(to_string(kind)));
  if (kind == ProblemKind::Cantilever3d && nelz < 1)
    throw Error(ErrorCode::InvalidModel, "3-D problem needs nelz >= 1");
  if (!(load > 0.0) || !std::isfinite(load))
    throw Error(ErrorCode::InvalidModel, "load magnitude must be positive");
}

ProblemKind parse_kind(const std::string& name) {
  if (name == "mbb" || name == "mbb2d") return ProblemKind::Mbb2d;
  if (name == "cantilever" || name == "cantilever2d") return ProblemKind::Cantilever2d;
  if (name == "cantilever3d") return ProblemKind::Cantilever3d;
  throw Error(ErrorCode::Usage, "unknown problem '" + name + "' (mbb, cantilever, cantilever3d)");
}

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Mbb2d: return "mbb";
    case ProblemKind::Cantilever2d: return "cantilever";
    case ProblemKind::Cantilever3d: return "cantilever3d";
  }
  return "unknown";
}

StructuralModel build_mbb(int nelx, int nely, const fem::Material& material, double load) {
  ProblemSpec{ProblemKind::Mbb2d, nelx, nely, 0, load}.validate();
  Mesh mesh = Mesh::grid2d(nelx, nely);
  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  f[2 * mesh.node(0, 0) + 1] = -load;
  std::vector<Index> fixed;
  for (int iy = 0; iy <= nely; ++iy) fixed.push_back(2 * mesh.node(0, iy));
  fixed.push_back(2 * mesh.node(nelx, nely) + 1);
  return StructuralModel(std::move(mesh), material, std::move(fixed), std::move(f));
}

StructuralModel build_cantilever2d(int nelx, int nely, const fem::Material& material, double load) {
  ProblemSpec{ProblemKind::Cantilever2d, nelx, nely, 0, load}.validate();
  Mesh mesh = Mesh::grid2d(nelx, nely);
  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  f[2 * mesh.node(nelx, nely) + 1] = -load;
  std::vector<Index> fixed;
  for (int iy = 0; iy <= nely; ++iy) {
    fixed.push_back(2 * mesh.node(0, iy));
    fixed.push_back(2 * mesh.node(0, iy) + 1);
  }
  return StructuralModel(std::move(mesh), material, std::move(fixed), std::move(f));
}

StructuralModel build_cantilever3d(int nelx, int nely, int nelz, const fem::Material& material,
                                   double load) {
  ProblemSpec{ProblemKind::Cantilever3d, nelx, nely, nelz, load}.validate();
  Mesh mesh = Mesh::grid3d(nelx, nely, nelz);
  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  for (int iz = 0; iz <= nelz; ++iz) f[3 * mesh.node(nelx, nely, iz) + 1] = -load / (nelz + 1);
  std::vector<Index> fixed;
  for (int iz = 0; iz <= nelz; ++iz) {
    for (int iy = 0; iy <= nely; ++iy) {
      for (int c = 0; c < 3; ++c) fixed.push_back(3 * mesh.node(0, iy, iz) + c);
    }
  }
  return StructuralModel(std::move(mesh), material, std::move(fixed), std::move(f));
}

StructuralModel build(const ProblemSpec& spec, const fem::Material& material) {
  switch (spec.kind) {
    case ProblemKind::Mbb2d: return build_mbb(spec.nelx, spec.nely, material, spec.load);
    case ProblemKind::Cantilever2d: return build_cantilever2d(spec.nelx, spec.nely, material, spec.load);
    case ProblemKind::Cantilever3d:
      return build_cantilever3d(spec.nelx, spec.nely, spec.nelz, material, spec.load);
  }
  throw Error(ErrorCode::InvalidModel, "unknown problem kind");
}

}  // namespace cdtopt::problems
