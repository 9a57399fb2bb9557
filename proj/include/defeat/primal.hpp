#pragma once

#include <span>
#include <vector>

#include "defeat/linalg.hpp"
#include "defeat/mesh.hpp"
#include "defeat/problem.hpp"

namespace defeat {

/// Vertices whose active support is below this fraction of their incident
/// area are dropped from the primal system.
inline constexpr double kSmallCutFraction = 1e-10;

struct PrimalSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<int> dof_of_vertex;       // -1 for Dirichlet, removed and inactive vertices
  Vector dirichlet_values;              // per vertex, g_D at Dirichlet vertices and 0 elsewhere
  std::vector<std::uint8_t> removed;    // small-cut vertices
  std::size_t num_dofs = 0;
};

/// P1 solution, one value per mesh vertex.
struct DiscreteSolution {
  Vector values;
  std::vector<int> dof_of_vertex;
  std::size_t num_dofs = 0;
  double relative_residual = 0.0;

  Point2 gradient(const Mesh& mesh, int t) const;
  double value(const Mesh& mesh, int t, Point2 p) const;
};

PrimalSystem assemble_primal(const Mesh& mesh, const ActiveClassification& cls,
                             const ProblemSpec& spec);

DiscreteSolution solve_primal(const ProblemSpec& spec, const Mesh& mesh,
                              const ActiveClassification& cls);

/// Energy norm of u - u_ref, where fine is nested in coarse and
/// fine_to_coarse maps each fine triangle to its coarse ancestor.
double energy_error(const Mesh& coarse, const DiscreteSolution& u, const Mesh& fine,
                    const ActiveClassification& fine_cls, const DiscreteSolution& u_ref,
                    std::span<const int> fine_to_coarse, const ProblemSpec& spec);

}  // namespace defeat
