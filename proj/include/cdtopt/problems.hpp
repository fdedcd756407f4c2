#ifndef CDTOPT_PROBLEMS_HPP
#define CDTOPT_PROBLEMS_HPP

#include <string>

#include "cdtopt/fem.hpp"

namespace cdtopt::problems {

enum class ProblemKind { Mbb2d, Cantilever2d, Cantilever3d };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Mbb2d;
  int nelx = 60;
  int nely = 20;
  int nelz = 0;       // 3-D only
  double load = 1.0;  // magnitude of the (total) applied load

  void validate() const;
};

// Accepts mbb, mbb2d, cantilever, cantilever2d, cantilever3d.
ProblemKind parse_kind(const std::string& name);
const char* to_string(ProblemKind kind);

// Half MBB beam: downward point load at the top-left node, x dofs fixed on the
// left symmetry edge, y dof fixed at the bottom-right node.
fem::StructuralModel build_mbb(int nelx, int nely, const fem::Material& material = {},
                               double load = 1.0);

// Left edge clamped, downward point load at the bottom-right node.
fem::StructuralModel build_cantilever2d(int nelx, int nely, const fem::Material& material = {},
                                        double load = 1.0);

// Face x = 0 clamped; downward line load along the bottom edge of the face
// x = nelx, split evenly over its nelz + 1 nodes.
fem::StructuralModel build_cantilever3d(int nelx, int nely, int nelz,
                                        const fem::Material& material = {}, double load = 1.0);

fem::StructuralModel build(const ProblemSpec& spec, const fem::Material& material = {});

}  // namespace cdtopt::problems

#endif  // CDTOPT_PROBLEMS_HPP
