#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "defeat/linalg.hpp"
#include "defeat/mesh.hpp"
#include "defeat/primal.hpp"
#include "defeat/problem.hpp"
#include "defeat/rt_element.hpp"

namespace defeat {

enum class Stabilization { none, ghost, discard };

struct FluxOptions {
  Stabilization stabilization = Stabilization::discard;
  double beta1 = 0.1;
  double beta2 = 0.1;
  double discard_fraction = 1e-3;  // patches and cut elements with a smaller active fraction are dropped
  bool asymmetric = false;          // drop feature-boundary terms from the mass balance row
};

/// Element-level integrals shared by every patch containing the element.
struct ElementData {
  RTElement rt;
  double kappa = 1.0;
  Point2 grad_u;
  std::array<Point2, 3> grad_lambda;
  Eigen::Matrix<double, 8, 8> m_vol, m_gam;    // (k^-1 phi_i, phi_j), <k^-1 phi_i.n, phi_j.n>
  Eigen::Matrix<double, 3, 8> b_vol, b_gam;    // (lambda_q, div phi_j), <lambda_q, phi_j.n>
  Eigen::Matrix<double, 3, 8> l_vol, l_gam;    // row l: hat function l in the load terms
  Eigen::Matrix3d r_vol, r_gam;                // row l, column q
  std::array<int, 8> global_dof;
};

/// Per-solve data: element caches over the active mesh.
class FluxContext {
 public:
  FluxContext(const Mesh& mesh, const ActiveClassification& cls, const DiscreteSolution& u,
              const ProblemSpec& spec);

  const Mesh& mesh() const { return *mesh_; }
  const ActiveClassification& classification() const { return *cls_; }
  const ProblemSpec& spec() const { return *spec_; }
  const ElementData& element(int t) const { return data_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(t)])]; }
  std::size_t num_global_dofs() const { return 2 * mesh_->num_edges() + 2 * mesh_->num_triangles(); }

 private:
  const Mesh* mesh_;
  const ActiveClassification* cls_;
  const ProblemSpec* spec_;
  std::vector<int> slot_;
  std::vector<ElementData> data_;
};

struct PatchProblem {
  Patch patch;
  double h_a = 0.0;
  DenseMatrix matrix;
  Vector rhs;
  int n_flux = 0;      // free flux unknowns
  int n_pressure = 0;  // 3 per element
  // Connected pieces of the active patch region, as indices into
  // patch.elements. A piece without an active Dirichlet edge gets its own
  // mean constraint and multiplier.
  std::vector<int> component;
  int n_mean = 0;
  std::vector<int> flux_global;                     // global dof of each free flux unknown
  std::vector<std::pair<int, double>> prescribed;   // Neumann-prescribed global dofs
  std::vector<int> ghost_edges;
  bool symmetric = true;
};

struct PatchSolution {
  std::vector<std::pair<int, double>> flux;  // global dof, value
  Vector lambda;                             // pressure multipliers, 3 per element
  Vector mean_multipliers;
};

/// Patch saddle system: m_a, b_a, L_a, R_a plus the optional ghost penalty
/// and the asymmetric mass-balance row selected by the options.
PatchProblem build_patch_problem(const FluxContext& ctx, const Patch& patch,
                                 const FluxOptions& options);

PatchSolution solve_patch(const PatchProblem& problem);
PatchSolution solve_patch_stabilized(const FluxContext& ctx, const Patch& patch, double beta1,
                                     double beta2);
PatchSolution solve_patch_asymmetric(const FluxContext& ctx, const Patch& patch);

struct GlobalFlux {
  const Mesh* mesh = nullptr;
  std::vector<RTElement> elements;  // per triangle, valid on active triangles
  Vector coeffs;                    // 2 per edge, then 2 per triangle
  std::size_t discarded_patches = 0;

  RTElement::Scalars local_dofs(int t) const;
  Point2 value(int t, Point2 p) const;
  double divergence(int t, Point2 p) const;
};

/// Sum of all patch contributions.
GlobalFlux accumulate(const FluxContext& ctx, const std::vector<PatchSolution>& patches);

/// Copy of cls where cut elements with active fraction below `fraction` are
/// marked inactive.
ActiveClassification drop_badly_cut(const Mesh& mesh, const ActiveClassification& cls,
                                    double fraction);

GlobalFlux reconstruct_flux(const Mesh& mesh, const ActiveClassification& cls,
                            const DiscreteSolution& u, const ProblemSpec& spec,
                            const FluxOptions& options = {});

/// ||f - div sigma|| on the active part of each triangle (0 on inactive ones).
std::vector<double> divergence_misfit(const GlobalFlux& flux, const ProblemSpec& spec,
                                      const ActiveClassification& cls);

/// Largest L2 norm over interior active edges of the normal-trace jump.
double max_normal_jump(const GlobalFlux& flux, const ActiveClassification& cls);

/// Largest L2 norm over Neumann edges of sigma.n + g_N.
double max_neumann_trace_error(const GlobalFlux& flux, const ActiveClassification& cls,
                               const ProblemSpec& spec);

}  // namespace defeat
