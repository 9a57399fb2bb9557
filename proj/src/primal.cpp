#include "defeat/primal.hpp"

#include <cmath>

#include "defeat/quadrature.hpp"

namespace defeat {

Point2 DiscreteSolution::gradient(const Mesh& mesh, int t) const {
  const auto grads = barycentric_gradients(mesh.triangle(t));
  const auto& v = mesh.triangles[static_cast<std::size_t>(t)];
  Point2 g;
  for (std::size_t i = 0; i < 3; ++i) g = g + values[v[i]] * grads[i];
  return g;
}

double DiscreteSolution::value(const Mesh& mesh, int t, Point2 p) const {
  const auto lam = barycentric(mesh.triangle(t), p);
  const auto& v = mesh.triangles[static_cast<std::size_t>(t)];
  return lam[0] * values[v[0]] + lam[1] * values[v[1]] + lam[2] * values[v[2]];
}

namespace {

QuadratureRule active_rule(const Mesh& mesh, const ActiveClassification& cls, int t, int degree) {
  if (cls.is_clipped(t)) return cut_rule(cls.pieces[static_cast<std::size_t>(t)], degree);
  return triangle_rule(mesh.triangle(t), degree);
}

}  // namespace

PrimalSystem assemble_primal(const Mesh& mesh, const ActiveClassification& cls,
                             const ProblemSpec& spec) {
  const std::size_t nv = mesh.num_vertices();
  PrimalSystem sys;
  sys.removed.assign(nv, 0);
  sys.dof_of_vertex.assign(nv, -1);
  sys.dirichlet_values = Vector::Zero(static_cast<Eigen::Index>(nv));

  std::vector<double> support(nv, 0.0), incident(nv, 0.0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(static_cast<int>(t));
    for (int v : mesh.triangles[t]) {
      incident[static_cast<std::size_t>(v)] += area;
      support[static_cast<std::size_t>(v)] += cls.is_active(static_cast<int>(t)) ? cls.active_area[t] : 0.0;
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (!cls.vertex_active[v]) continue;
    if (mesh.vertex_dirichlet[v]) {
      sys.dirichlet_values[static_cast<Eigen::Index>(v)] = spec.dirichlet(mesh.vertices[v]);
      continue;
    }
    if (support[v] < kSmallCutFraction * incident[v]) {
      sys.removed[v] = 1;
      continue;
    }
    sys.dof_of_vertex[v] = static_cast<int>(sys.num_dofs++);
  }
  const auto n = static_cast<Eigen::Index>(sys.num_dofs);
  sys.rhs = Vector::Zero(n);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(cls.active.size() * 9);
  auto add_load = [&](int vertex, double value) {
    const int d = sys.dof_of_vertex[static_cast<std::size_t>(vertex)];
    if (d >= 0) sys.rhs[d] += value;
  };

  for (int t : cls.active) {
    const auto tri = mesh.triangle(t);
    const auto& v = mesh.triangles[static_cast<std::size_t>(t)];
    const auto grads = barycentric_gradients(tri);
    const double kappa = spec.kappa_at(centroid(tri));
    const double area = cls.active_area[static_cast<std::size_t>(t)];
    double ke[3][3];
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) ke[i][j] = kappa * area * dot(grads[i], grads[j]);
    for (std::size_t i = 0; i < 3; ++i) {
      const int di = sys.dof_of_vertex[static_cast<std::size_t>(v[i])];
      if (di < 0) continue;
      for (std::size_t j = 0; j < 3; ++j) {
        const int dj = sys.dof_of_vertex[static_cast<std::size_t>(v[j])];
        if (dj >= 0)
          trip.emplace_back(di, dj, ke[i][j]);
        else
          sys.rhs[di] -= ke[i][j] * sys.dirichlet_values[v[j]];
      }
    }
    if (spec.source) {
      const auto rule = active_rule(mesh, cls, t, kVolumeDegree);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double fw = spec.source(rule.points[q]) * rule.weights[q];
        if (fw == 0.0) continue;
        const auto lam = barycentric(tri, rule.points[q]);
        for (std::size_t i = 0; i < 3; ++i) add_load(v[i], fw * lam[i]);
      }
    }
    if (spec.feature_flux) {
      for (const auto& seg : cls.segments[static_cast<std::size_t>(t)]) {
        const auto rule = segment_rule(seg);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const double gw = spec.feature_flux(rule.points[q]) * rule.weights[q];
          if (gw == 0.0) continue;
          const auto lam = barycentric(tri, rule.points[q]);
          for (std::size_t i = 0; i < 3; ++i) add_load(v[i], gw * lam[i]);
        }
      }
    }
  }

  // Neumann boundary edges, restricted to the parts outside included features
  std::vector<Feature> included;
  for (const auto& f : spec.features)
    if (f.included()) included.push_back(f);
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edge_tag[e] != BoundaryTag::neumann) continue;
    const int t = mesh.edge_triangles[e][0];
    if (!cls.is_active(t)) continue;
    const Point2 a = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][0])];
    const Point2 b = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][1])];
    const auto tri = mesh.triangle(t);
    const auto& v = mesh.triangles[static_cast<std::size_t>(t)];
    for (const auto& iv : segment_outside_features(a, b, included)) {
      const auto rule = segment_rule(a + iv[0] * (b - a), a + iv[1] * (b - a));
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double gw = spec.neumann_at(rule.points[q]) * rule.weights[q];
        if (gw == 0.0) continue;
        const auto lam = barycentric(tri, rule.points[q]);
        for (std::size_t i = 0; i < 3; ++i) add_load(v[i], gw * lam[i]);
      }
    }
  }

  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

DiscreteSolution solve_primal(const ProblemSpec& spec, const Mesh& mesh,
                              const ActiveClassification& cls) {
  const PrimalSystem sys = assemble_primal(mesh, cls, spec);
  SolveReport rep;
  const Vector x = solve_spd(sys.matrix, sys.rhs, &rep);
  DiscreteSolution u;
  u.values = sys.dirichlet_values;
  u.dof_of_vertex = sys.dof_of_vertex;
  u.num_dofs = sys.num_dofs;
  u.relative_residual = rep.relative_residual;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const int d = sys.dof_of_vertex[v];
    if (d >= 0) u.values[static_cast<Eigen::Index>(v)] = x[d];
  }
  // Removed vertices take the mean of their solved neighbours; their value
  // only touches a negligible active area.
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (!sys.removed[v]) continue;
    double sum = 0.0;
    int count = 0;
    for (int t : mesh.vertex_triangles[v]) {
      for (int w : mesh.triangles[static_cast<std::size_t>(t)]) {
        const auto ws = static_cast<std::size_t>(w);
        if (ws == v || sys.removed[ws] || !cls.vertex_active[ws]) continue;
        sum += u.values[w];
        ++count;
      }
    }
    u.values[static_cast<Eigen::Index>(v)] = count > 0 ? sum / count : 0.0;
  }
  return u;
}

double energy_error(const Mesh& coarse, const DiscreteSolution& u, const Mesh& fine,
                    const ActiveClassification& fine_cls, const DiscreteSolution& u_ref,
                    std::span<const int> fine_to_coarse, const ProblemSpec& spec) {
  if (fine_to_coarse.size() != fine.num_triangles())
    throw std::invalid_argument("energy_error: ancestor map does not match the fine mesh");
  double sum = 0.0;
  for (int t : fine_cls.active) {
    const int k = fine_to_coarse[static_cast<std::size_t>(t)];
    if (k < 0 || static_cast<std::size_t>(k) >= coarse.num_triangles())
      throw std::invalid_argument("energy_error: meshes are not nested");
    const auto tri = fine.triangle(t);
    const auto lam = barycentric(coarse.triangle(k), centroid(tri));
    if (std::min({lam[0], lam[1], lam[2]}) < -1e-9)
      throw std::invalid_argument("energy_error: meshes are not nested");
    const Point2 d = u.gradient(coarse, k) - u_ref.gradient(fine, t);
    sum += spec.kappa_at(centroid(tri)) * fine_cls.active_area[static_cast<std::size_t>(t)] * dot(d, d);
  }
  return std::sqrt(sum);
}

}  // namespace defeat
