#include "defeat/flux.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <unordered_map>

#include "defeat/parallel.hpp"
#include "defeat/quadrature.hpp"

namespace defeat {

namespace {

QuadratureRule active_rule(const Mesh& mesh, const ActiveClassification& cls, int t) {
  if (cls.is_clipped(t)) return cut_rule(cls.pieces[static_cast<std::size_t>(t)]);
  return triangle_rule(mesh.triangle(t));
}

int local_vertex(const Mesh& mesh, int t, int vertex) {
  const auto& v = mesh.triangles[static_cast<std::size_t>(t)];
  for (int i = 0; i < 3; ++i)
    if (v[static_cast<std::size_t>(i)] == vertex) return i;
  return -1;
}

int local_edge(const Mesh& mesh, int t, int edge) {
  const auto& te = mesh.tri_edges[static_cast<std::size_t>(t)];
  for (int i = 0; i < 3; ++i)
    if (te[static_cast<std::size_t>(i)] == edge) return i;
  return -1;
}

// Outward unit normal of a boundary edge of triangle t.
Point2 outward_normal(const Mesh& mesh, int t, int edge) {
  const int li = local_edge(mesh, t, edge);
  const auto tri = mesh.triangle(t);
  const Point2 a = tri[static_cast<std::size_t>((li + 1) % 3)];
  const Point2 b = tri[static_cast<std::size_t>((li + 2) % 3)];
  const Point2 d = b - a;
  const double len = norm(d);
  // triangles are counter-clockwise, so the right normal of a->b points out
  return {d.y / len, -d.x / len};
}

}  // namespace

FluxContext::FluxContext(const Mesh& mesh, const ActiveClassification& cls,
                         const DiscreteSolution& u, const ProblemSpec& spec)
    : mesh_(&mesh), cls_(&cls), spec_(&spec) {
  slot_.assign(mesh.num_triangles(), -1);
  for (std::size_t i = 0; i < cls.active.size(); ++i) slot_[static_cast<std::size_t>(cls.active[i])] = static_cast<int>(i);
  data_.resize(cls.active.size());
  const std::size_t ne = mesh.num_edges();

  parallel_for(cls.active.size(), [&](std::size_t slot) {
    const int t = cls.active[slot];
    ElementData& d = data_[slot];
    const auto tri = mesh.triangle(t);
    d.rt = RTElement(tri, mesh.triangles[static_cast<std::size_t>(t)]);
    d.kappa = spec.kappa_at(centroid(tri));
    d.grad_u = u.gradient(mesh, t);
    d.grad_lambda = barycentric_gradients(tri);
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
      d.global_dof[static_cast<std::size_t>(2 * i)] = 2 * e;
      d.global_dof[static_cast<std::size_t>(2 * i + 1)] = 2 * e + 1;
    }
    d.global_dof[6] = static_cast<int>(2 * ne) + 2 * t;
    d.global_dof[7] = static_cast<int>(2 * ne) + 2 * t + 1;
    d.m_vol.setZero();
    d.m_gam.setZero();
    d.b_vol.setZero();
    d.b_gam.setZero();
    d.l_vol.setZero();
    d.l_gam.setZero();
    d.r_vol.setZero();
    d.r_gam.setZero();

    const double kinv = 1.0 / d.kappa;
    const Point2 flux_u = d.kappa * d.grad_u;
    RTElement::Values phi;
    RTElement::Scalars div;
    const auto rule = active_rule(mesh, cls, t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point2 p = rule.points[q];
      const double w = rule.weights[q];
      d.rt.values(p, phi);
      d.rt.divergences(p, div);
      const auto lam = barycentric(tri, p);
      const double f = spec.source ? spec.source(p) : 0.0;
      for (int i = 0; i < 8; ++i) {
        for (int j = i; j < 8; ++j) d.m_vol(i, j) += w * kinv * dot(phi[static_cast<std::size_t>(i)], phi[static_cast<std::size_t>(j)]);
        for (int l = 0; l < 3; ++l) {
          d.b_vol(l, i) += w * lam[static_cast<std::size_t>(l)] * div[static_cast<std::size_t>(i)];
          d.l_vol(l, i) -= w * lam[static_cast<std::size_t>(l)] * dot(d.grad_u, phi[static_cast<std::size_t>(i)]);
        }
      }
      for (int l = 0; l < 3; ++l) {
        const double src = lam[static_cast<std::size_t>(l)] * f - dot(d.grad_lambda[static_cast<std::size_t>(l)], flux_u);
        for (int m = 0; m < 3; ++m) d.r_vol(l, m) += w * src * lam[static_cast<std::size_t>(m)];
      }
    }
    for (const auto& seg : cls.segments[static_cast<std::size_t>(t)]) {
      const auto srule = segment_rule(seg);
      for (std::size_t q = 0; q < srule.size(); ++q) {
        const Point2 p = srule.points[q];
        const double w = srule.weights[q];
        d.rt.values(p, phi);
        const auto lam = barycentric(tri, p);
        const double g = spec.feature_flux ? spec.feature_flux(p) : 0.0;
        std::array<double, 8> pn;
        for (int i = 0; i < 8; ++i) pn[static_cast<std::size_t>(i)] = dot(phi[static_cast<std::size_t>(i)], seg.normal);
        for (int i = 0; i < 8; ++i) {
          for (int j = i; j < 8; ++j) d.m_gam(i, j) += w * kinv * pn[static_cast<std::size_t>(i)] * pn[static_cast<std::size_t>(j)];
          for (int l = 0; l < 3; ++l) {
            d.b_gam(l, i) += w * lam[static_cast<std::size_t>(l)] * pn[static_cast<std::size_t>(i)];
            d.l_gam(l, i) -= w * kinv * lam[static_cast<std::size_t>(l)] * g * pn[static_cast<std::size_t>(i)];
          }
        }
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m)
            d.r_gam(l, m) += w * lam[static_cast<std::size_t>(l)] * g * lam[static_cast<std::size_t>(m)];
      }
    }
    d.m_vol.triangularView<Eigen::StrictlyLower>() = d.m_vol.transpose().triangularView<Eigen::StrictlyLower>();
    d.m_gam.triangularView<Eigen::StrictlyLower>() = d.m_gam.transpose().triangularView<Eigen::StrictlyLower>();
  });
}

namespace {

struct DofSlot {
  int index = -1;      // free unknown index, or -1
  double value = 0.0;  // fixed value when not free
};

// Length of the part of segment a-b outside every included feature.
double active_length(Point2 a, Point2 b, std::span<const Feature> included) {
  double len = 0.0;
  for (const auto& iv : segment_outside_features(a, b, included)) len += iv[1] - iv[0];
  return len * distance(a, b);
}

// Splits the patch into pieces connected through active parts of interior
// edges. Returns, per patch element, the matrix row of its mean multiplier
// (or -1). A single piece is the usual case; several pieces appear when the
// center lies inside an included feature.
std::vector<int> assign_components(const FluxContext& ctx, const Patch& patch, PatchProblem& pb) {
  const Mesh& mesh = ctx.mesh();
  const auto& cls = ctx.classification();
  const std::size_t ne = patch.elements.size();
  std::vector<int> root(ne);
  for (std::size_t i = 0; i < ne; ++i) root[i] = static_cast<int>(i);
  auto find = [&](int i) {
    while (root[static_cast<std::size_t>(i)] != i) i = root[static_cast<std::size_t>(i)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(i)])];
    return i;
  };
  auto index_of = [&](int t) {
    return static_cast<int>(std::find(patch.elements.begin(), patch.elements.end(), t) - patch.elements.begin());
  };
  bool any_cut = false;
  for (int t : patch.elements) any_cut = any_cut || cls.is_cut(t);
  std::vector<Feature> included;
  if (any_cut)
    for (const auto& f : ctx.spec().features)
      if (f.included()) included.push_back(f);
  auto edge_active = [&](int e) {
    if (!any_cut) return true;
    const Point2 a = mesh.vertices[static_cast<std::size_t>(mesh.edges[static_cast<std::size_t>(e)][0])];
    const Point2 b = mesh.vertices[static_cast<std::size_t>(mesh.edges[static_cast<std::size_t>(e)][1])];
    return active_length(a, b, included) > 1e-12 * distance(a, b);
  };
  for (int e : patch.interior_edges) {
    if (!edge_active(e)) continue;
    const auto& et = mesh.edge_triangles[static_cast<std::size_t>(e)];
    root[static_cast<std::size_t>(find(index_of(et[0])))] = find(index_of(et[1]));
  }
  std::vector<std::uint8_t> outflow(ne, 0);
  if (!patch.zero_mean()) {
    for (int e : patch.boundary_psi) {
      if (mesh.edge_tag[static_cast<std::size_t>(e)] != BoundaryTag::dirichlet || !edge_active(e)) continue;
      outflow[static_cast<std::size_t>(find(index_of(mesh.edge_triangles[static_cast<std::size_t>(e)][0])))] = 1;
    }
  }
  const int first = pb.n_flux + pb.n_pressure;
  std::vector<int> row_of_root(ne, -1), mean_of(ne, -1);
  pb.component.assign(ne, -1);
  int ncomp = 0;
  std::vector<int> comp_of_root(ne, -1);
  for (std::size_t i = 0; i < ne; ++i) {
    const auto r = static_cast<std::size_t>(find(static_cast<int>(i)));
    if (comp_of_root[r] < 0) comp_of_root[r] = ncomp++;
    pb.component[i] = comp_of_root[r];
    if (outflow[r]) continue;
    if (row_of_root[r] < 0) row_of_root[r] = first + pb.n_mean++;
    mean_of[i] = row_of_root[r];
  }
  return mean_of;
}

}  // namespace

PatchProblem build_patch_problem(const FluxContext& ctx, const Patch& patch,
                                 const FluxOptions& options) {
  const Mesh& mesh = ctx.mesh();
  const ActiveClassification& cls = ctx.classification();
  const ProblemSpec& spec = ctx.spec();
  const int a = patch.center;

  PatchProblem pb;
  pb.patch = patch;
  pb.symmetric = !options.asymmetric;
  for (int t : patch.elements) pb.h_a = std::max(pb.h_a, mesh.diameter(t));
  double active = 0.0;
  for (int t : patch.elements) active += cls.active_area[static_cast<std::size_t>(t)];
  if (!(active > 0.0))
    throw SolverError("patch " + std::to_string(a) + " has zero active measure", a);

  // Prescribed normal traces on Neumann edges through the center.
  std::unordered_map<int, double> fixed;
  for (int e : patch.boundary_zero) {
    fixed[2 * e] = 0.0;
    fixed[2 * e + 1] = 0.0;
  }
  std::vector<double> gn, gw;
  gauss_legendre_01(4, gn, gw);
  for (int e : patch.boundary_psi) {
    if (mesh.edge_tag[static_cast<std::size_t>(e)] != BoundaryTag::neumann) continue;
    const int t = mesh.edge_triangles[static_cast<std::size_t>(e)][0];
    const auto& d = ctx.element(t);
    const int li = local_edge(mesh, t, e);
    const auto ends = d.rt.edge_points(li);
    const double orient = dot(d.rt.edge_normal(li), outward_normal(mesh, t, e));
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t q = 0; q < gn.size(); ++q) {
      const Point2 p = ends[0] + gn[q] * (ends[1] - ends[0]);
      const double psi = barycentric(mesh.triangle(t), p)[static_cast<std::size_t>(local_vertex(mesh, t, a))];
      const double w = -psi * spec.neumann_at(p) * orient;
      m0 += gw[q] * w;
      m1 += 3.0 * gw[q] * w * (2.0 * gn[q] - 1.0);
    }
    fixed[2 * e] = m0;
    fixed[2 * e + 1] = m1;
    pb.prescribed.emplace_back(2 * e, m0);
    pb.prescribed.emplace_back(2 * e + 1, m1);
  }

  std::unordered_map<int, int> free_index;
  std::vector<std::array<DofSlot, 8>> slots(patch.elements.size());
  for (std::size_t k = 0; k < patch.elements.size(); ++k) {
    const auto& d = ctx.element(patch.elements[k]);
    for (std::size_t i = 0; i < 8; ++i) {
      const int g = d.global_dof[i];
      if (const auto it = fixed.find(g); it != fixed.end()) {
        slots[k][i] = {-1, it->second};
        continue;
      }
      auto [it, inserted] = free_index.try_emplace(g, static_cast<int>(pb.flux_global.size()));
      if (inserted) pb.flux_global.push_back(g);
      slots[k][i] = {it->second, 0.0};
    }
  }
  pb.n_flux = static_cast<int>(pb.flux_global.size());
  pb.n_pressure = 3 * static_cast<int>(patch.elements.size());
  const auto mean_of = assign_components(ctx, patch, pb);
  const int n = pb.n_flux + pb.n_pressure + pb.n_mean;
  pb.matrix = DenseMatrix::Zero(n, n);
  pb.rhs = Vector::Zero(n);
  DenseMatrix& A = pb.matrix;
  Vector& rhs = pb.rhs;
  const double inv_h = 1.0 / pb.h_a;

  for (std::size_t k = 0; k < patch.elements.size(); ++k) {
    const int t = patch.elements[k];
    const auto& d = ctx.element(t);
    const int l = local_vertex(mesh, t, a);
    const Eigen::Matrix<double, 8, 8> m = d.m_vol + inv_h * d.m_gam;
    const Eigen::Matrix<double, 3, 8> b_sym = d.b_vol - d.b_gam;
    const Eigen::Matrix<double, 3, 8>& b_row = options.asymmetric ? d.b_vol : b_sym;
    const auto& s = slots[k];
    const int q0 = pb.n_flux + 3 * static_cast<int>(k);
    for (int i = 0; i < 8; ++i) {
      const int ri = s[static_cast<std::size_t>(i)].index;
      if (ri < 0) continue;
      rhs[ri] += d.l_vol(l, i) + inv_h * d.l_gam(l, i);
      for (int j = 0; j < 8; ++j) {
        const auto& sj = s[static_cast<std::size_t>(j)];
        if (sj.index >= 0)
          A(ri, sj.index) += m(i, j);
        else
          rhs[ri] -= m(i, j) * sj.value;
      }
      // -b(v, lambda) written with the sign-flipped multiplier
      for (int q = 0; q < 3; ++q) A(ri, q0 + q) += b_sym(q, i);
    }
    const double mean_weight = mesh.area(t) / 3.0;
    for (int q = 0; q < 3; ++q) {
      for (int j = 0; j < 8; ++j) {
        const auto& sj = s[static_cast<std::size_t>(j)];
        if (sj.index >= 0)
          A(q0 + q, sj.index) += b_row(q, j);
        else
          rhs[q0 + q] -= b_row(q, j) * sj.value;
      }
      rhs[q0 + q] += d.r_vol(l, q) + (options.asymmetric ? 0.0 : d.r_gam(l, q));
      if (const int c = mean_of[k]; c >= 0) {
        A(q0 + q, c) += mean_weight;
        A(c, q0 + q) += mean_weight;
      }
    }
  }

  const bool ghost = options.stabilization == Stabilization::ghost &&
                     (options.beta1 > 0.0 || options.beta2 > 0.0);
  if (ghost) {
    const double h = pb.h_a;
    for (int e : patch.interior_edges) {
      const auto& et = mesh.edge_triangles[static_cast<std::size_t>(e)];
      if (!cls.is_cut(et[0]) && !cls.is_cut(et[1])) continue;
      pb.ghost_edges.push_back(e);
      std::array<std::size_t, 2> k{};
      for (int side = 0; side < 2; ++side) {
        const auto it = std::find(patch.elements.begin(), patch.elements.end(), et[static_cast<std::size_t>(side)]);
        k[static_cast<std::size_t>(side)] = static_cast<std::size_t>(it - patch.elements.begin());
      }
      const auto& d0 = ctx.element(et[0]);
      const auto& d1 = ctx.element(et[1]);
      const Point2 ne = d0.rt.edge_normal(local_edge(mesh, et[0], e));
      const auto ends = d0.rt.edge_points(local_edge(mesh, et[0], e));
      const auto rule = segment_rule(ends[0], ends[1]);
      RTElement::Values phi0, phi1;
      RTElement::Jacobians jac0, jac1;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point2 p = rule.points[q];
        const double w = rule.weights[q];
        d0.rt.values(p, phi0);
        d1.rt.values(p, phi1);
        d0.rt.jacobians(p, jac0);
        d1.rt.jacobians(p, jac1);
        // 16 jump contributions: element 0 with +, element 1 with -
        std::array<Point2, 16> jump, djump;
        std::array<DofSlot, 16> slot;
        for (std::size_t i = 0; i < 8; ++i) {
          const Eigen::Vector2d n2(ne.x, ne.y);
          const Eigen::Vector2d g0 = jac0[i] * n2;
          const Eigen::Vector2d g1 = jac1[i] * n2;
          jump[i] = phi0[i];
          djump[i] = {g0.x(), g0.y()};
          slot[i] = slots[k[0]][i];
          jump[8 + i] = -1.0 * phi1[i];
          djump[8 + i] = {-g1.x(), -g1.y()};
          slot[8 + i] = slots[k[1]][i];
        }
        if (options.beta1 > 0.0) {
          for (std::size_t i = 0; i < 16; ++i) {
            const int ri = slot[i].index;
            if (ri < 0) continue;
            for (std::size_t j = 0; j < 16; ++j) {
              const double c = options.beta1 * w *
                               (h * dot(jump[i], jump[j]) + h * h * h * dot(djump[i], djump[j]));
              if (slot[j].index >= 0)
                A(ri, slot[j].index) += c;
              else
                rhs[ri] -= c * slot[j].value;
            }
          }
        }
        if (options.beta2 > 0.0) {
          const auto lam0 = barycentric(mesh.triangle(et[0]), p);
          const auto lam1 = barycentric(mesh.triangle(et[1]), p);
          std::array<double, 6> pj, pd;
          std::array<int, 6> pi;
          for (std::size_t i = 0; i < 3; ++i) {
            pj[i] = lam0[i];
            pd[i] = dot(d0.grad_lambda[i], ne);
            pi[i] = pb.n_flux + 3 * static_cast<int>(k[0]) + static_cast<int>(i);
            pj[3 + i] = -lam1[i];
            pd[3 + i] = -dot(d1.grad_lambda[i], ne);
            pi[3 + i] = pb.n_flux + 3 * static_cast<int>(k[1]) + static_cast<int>(i);
          }
          for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
              A(pi[i], pi[j]) += options.beta2 * w * (pj[i] * pj[j] / h + h * pd[i] * pd[j]);
        }
      }
    }
  }
  return pb;
}

PatchSolution solve_patch(const PatchProblem& pb) {
  const Vector x = solve_saddle(pb.matrix, pb.rhs, pb.patch.center);
  PatchSolution sol;
  sol.flux.reserve(static_cast<std::size_t>(pb.n_flux) + pb.prescribed.size());
  for (int i = 0; i < pb.n_flux; ++i) sol.flux.emplace_back(pb.flux_global[static_cast<std::size_t>(i)], x[i]);
  for (const auto& p : pb.prescribed) sol.flux.push_back(p);
  sol.lambda = -x.segment(pb.n_flux, pb.n_pressure);
  sol.mean_multipliers = x.tail(pb.n_mean);
  return sol;
}

PatchSolution solve_patch_stabilized(const FluxContext& ctx, const Patch& patch, double beta1,
                                     double beta2) {
  if (beta1 < 0.0 || beta2 < 0.0) throw std::invalid_argument("stabilization weights must be nonnegative");
  FluxOptions opt;
  opt.stabilization = Stabilization::ghost;
  opt.beta1 = beta1;
  opt.beta2 = beta2;
  return solve_patch(build_patch_problem(ctx, patch, opt));
}

PatchSolution solve_patch_asymmetric(const FluxContext& ctx, const Patch& patch) {
  FluxOptions opt;
  opt.stabilization = Stabilization::none;
  opt.asymmetric = true;
  return solve_patch(build_patch_problem(ctx, patch, opt));
}

RTElement::Scalars GlobalFlux::local_dofs(int t) const {
  RTElement::Scalars d;
  const auto& te = mesh->tri_edges[static_cast<std::size_t>(t)];
  for (std::size_t i = 0; i < 3; ++i) {
    d[2 * i] = coeffs[2 * te[i]];
    d[2 * i + 1] = coeffs[2 * te[i] + 1];
  }
  const auto base = static_cast<Eigen::Index>(2 * mesh->num_edges()) + 2 * t;
  d[6] = coeffs[base];
  d[7] = coeffs[base + 1];
  return d;
}

Point2 GlobalFlux::value(int t, Point2 p) const {
  return elements[static_cast<std::size_t>(t)].eval(local_dofs(t), p);
}

double GlobalFlux::divergence(int t, Point2 p) const {
  return elements[static_cast<std::size_t>(t)].eval_divergence(local_dofs(t), p);
}

GlobalFlux accumulate(const FluxContext& ctx, const std::vector<PatchSolution>& patches) {
  GlobalFlux g;
  g.mesh = &ctx.mesh();
  g.coeffs = Vector::Zero(static_cast<Eigen::Index>(ctx.num_global_dofs()));
  g.elements.resize(ctx.mesh().num_triangles());
  for (int t : ctx.classification().active) g.elements[static_cast<std::size_t>(t)] = ctx.element(t).rt;
  for (const auto& p : patches)
    for (const auto& [dof, v] : p.flux) g.coeffs[dof] += v;
  return g;
}

ActiveClassification drop_badly_cut(const Mesh& mesh, const ActiveClassification& cls,
                                    double fraction) {
  ActiveClassification out = cls;
  out.active.clear();
  out.cut.clear();
  std::fill(out.vertex_active.begin(), out.vertex_active.end(), 0);
  for (int t : cls.active) {
    const auto i = static_cast<std::size_t>(t);
    if (cls.is_cut(t) && cls.active_area[i] < fraction * mesh.area(t)) {
      out.status[i] = ElementStatus::inactive;
      continue;
    }
    out.active.push_back(t);
    if (cls.is_cut(t)) out.cut.push_back(t);
    for (int v : mesh.triangles[i]) out.vertex_active[static_cast<std::size_t>(v)] = 1;
  }
  return out;
}

GlobalFlux reconstruct_flux(const Mesh& mesh, const ActiveClassification& cls,
                            const DiscreteSolution& u, const ProblemSpec& spec,
                            const FluxOptions& options) {
  const bool discard = options.stabilization == Stabilization::discard;
  // In discard mode badly cut elements leave the local problems; their flux
  // is whatever the shared edge moments of the neighbours give.
  const ActiveClassification solve_cls = discard ? drop_badly_cut(mesh, cls, options.discard_fraction) : cls;
  FluxContext ctx(mesh, solve_cls, u, spec);
  std::vector<int> centers;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (cls.vertex_active[v]) centers.push_back(static_cast<int>(v));
  std::vector<PatchSolution> sols(centers.size());
  std::vector<std::uint8_t> discarded(centers.size(), 0);
  parallel_for(centers.size(), [&](std::size_t i) {
    const int a = centers[i];
    if (discard) {
      double act = 0.0, full = 0.0;
      for (int t : mesh.vertex_triangles[static_cast<std::size_t>(a)]) {
        if (!cls.is_active(t)) continue;
        act += cls.active_area[static_cast<std::size_t>(t)];
        full += mesh.area(t);
      }
      if (act < options.discard_fraction * full || !solve_cls.vertex_active[static_cast<std::size_t>(a)]) {
        discarded[i] = 1;
        return;
      }
    }
    sols[i] = solve_patch(build_patch_problem(ctx, make_patch(mesh, solve_cls, a), options));
  });
  GlobalFlux g = accumulate(ctx, sols);
  for (int t : cls.active)
    if (!solve_cls.is_active(t))
      g.elements[static_cast<std::size_t>(t)] = RTElement(mesh.triangle(t), mesh.triangles[static_cast<std::size_t>(t)]);
  for (auto d : discarded) g.discarded_patches += d;
  return g;
}

std::vector<double> divergence_misfit(const GlobalFlux& flux, const ProblemSpec& spec,
                                      const ActiveClassification& cls) {
  const Mesh& mesh = *flux.mesh;
  std::vector<double> out(mesh.num_triangles(), 0.0);
  parallel_for(cls.active.size(), [&](std::size_t i) {
    const int t = cls.active[i];
    const auto rule = active_rule(mesh, cls, t);
    const auto dofs = flux.local_dofs(t);
    const auto& rt = flux.elements[static_cast<std::size_t>(t)];
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double f = spec.source ? spec.source(rule.points[q]) : 0.0;
      const double r = f - rt.eval_divergence(dofs, rule.points[q]);
      s += rule.weights[q] * r * r;
    }
    out[static_cast<std::size_t>(t)] = std::sqrt(s);
  });
  return out;
}

double max_normal_jump(const GlobalFlux& flux, const ActiveClassification& cls) {
  const Mesh& mesh = *flux.mesh;
  double worst = 0.0;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const auto& et = mesh.edge_triangles[e];
    if (et[1] < 0 || !cls.is_active(et[0]) || !cls.is_active(et[1])) continue;
    const Point2 a = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][0])];
    const Point2 b = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][1])];
    const Point2 d = b - a;
    const Point2 n = (1.0 / norm(d)) * Point2{d.y, -d.x};
    const auto rule = segment_rule(a, b);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double j = dot(flux.value(et[0], rule.points[q]) - flux.value(et[1], rule.points[q]), n);
      s += rule.weights[q] * j * j;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

double max_neumann_trace_error(const GlobalFlux& flux, const ActiveClassification& cls,
                               const ProblemSpec& spec) {
  const Mesh& mesh = *flux.mesh;
  double worst = 0.0;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edge_tag[e] != BoundaryTag::neumann) continue;
    const int t = mesh.edge_triangles[e][0];
    if (!cls.is_active(t)) continue;
    const Point2 n = outward_normal(mesh, t, static_cast<int>(e));
    const Point2 a = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][0])];
    const Point2 b = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][1])];
    const auto rule = segment_rule(a, b);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double r = dot(flux.value(t, rule.points[q]), n) + spec.neumann_at(rule.points[q]);
      s += rule.weights[q] * r * r;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

}  // namespace defeat
