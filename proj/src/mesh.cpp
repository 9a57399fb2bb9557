#include "defeat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "defeat/parallel.hpp"

namespace defeat {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::pair<int, int> sorted_pair(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

Triangle Mesh::triangle(int t) const {
  const auto& v = triangles[static_cast<std::size_t>(t)];
  return {vertices[static_cast<std::size_t>(v[0])], vertices[static_cast<std::size_t>(v[1])],
          vertices[static_cast<std::size_t>(v[2])]};
}

double Mesh::area(int t) const { return triangle_area(triangle(t)); }

double Mesh::diameter(int t) const {
  const auto k = triangle(t);
  return std::max({distance(k[0], k[1]), distance(k[1], k[2]), distance(k[2], k[0])});
}

int Mesh::edge_index(int a, int b) const {
  const auto it = edge_lookup_.find(edge_key(a, b));
  return it == edge_lookup_.end() ? -1 : it->second;
}

bool Mesh::is_domain_corner(int v) const {
  const Point2 p = vertices[static_cast<std::size_t>(v)];
  const double tol = kGeomTol * domain.diameter();
  const bool on_x = std::abs(p.x - domain.x0) <= tol || std::abs(p.x - domain.x1) <= tol;
  const bool on_y = std::abs(p.y - domain.y0) <= tol || std::abs(p.y - domain.y1) <= tol;
  return on_x && on_y;
}

void Mesh::build_topology() {
  const std::size_t nt = triangles.size();
  edges.clear();
  edge_triangles.clear();
  edge_tag.clear();
  edge_lookup_.clear();
  edge_lookup_.reserve(nt * 2);
  tri_edges.assign(nt, {-1, -1, -1});
  vertex_triangles.assign(vertices.size(), {});
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& v = triangles[t];
    for (int i = 0; i < 3; ++i) {
      vertex_triangles[static_cast<std::size_t>(v[static_cast<std::size_t>(i)])].push_back(
          static_cast<int>(t));
      const int a = v[static_cast<std::size_t>((i + 1) % 3)];
      const int b = v[static_cast<std::size_t>((i + 2) % 3)];
      const auto key = edge_key(a, b);
      auto [it, inserted] = edge_lookup_.try_emplace(key, static_cast<int>(edges.size()));
      if (inserted) {
        edges.push_back({std::min(a, b), std::max(a, b)});
        edge_triangles.push_back({static_cast<int>(t), -1});
      } else {
        auto& et = edge_triangles[static_cast<std::size_t>(it->second)];
        if (et[1] != -1) throw MeshError("edge shared by more than two triangles");
        et[1] = static_cast<int>(t);
      }
      tri_edges[t][static_cast<std::size_t>(i)] = it->second;
    }
  }
  edge_tag.assign(edges.size(), BoundaryTag::interior);
  vertex_dirichlet.assign(vertices.size(), 0);
  vertex_boundary.assign(vertices.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edge_triangles[e][1] != -1) continue;
    const auto it = boundary_tags.find({edges[e][0], edges[e][1]});
    if (it == boundary_tags.end()) throw MeshError("untagged boundary edge");
    edge_tag[e] = it->second;
    for (int v : edges[e]) {
      vertex_boundary[static_cast<std::size_t>(v)] = 1;
      if (it->second == BoundaryTag::dirichlet) vertex_dirichlet[static_cast<std::size_t>(v)] = 1;
    }
  }
}

Mesh build_structured_mesh(const Box& domain, double h_target, const BoundaryTagger& tagger) {
  if (!(h_target > 0.0)) throw MeshError("mesh size must be positive");
  if (!(domain.width() > 0.0 && domain.height() > 0.0)) throw MeshError("empty domain");
  // The relaxation lets three-digit mesh sizes such as 7.07e-2 map onto the
  // intended cell count.
  auto cells = [h_target](double len) {
    return std::max(1, static_cast<int>(std::ceil(len * std::numbers::sqrt2 / h_target * (1.0 - 5e-3))));
  };
  const int nx = cells(domain.width());
  const int ny = cells(domain.height());
  Mesh m;
  m.domain = domain;
  m.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // exact end points avoid round-off on the boundary
      const double x = i == nx ? domain.x1 : domain.x0 + domain.width() * i / nx;
      const double y = j == ny ? domain.y1 : domain.y0 + domain.height() * j / ny;
      m.vertices.push_back({x, y});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j), p11 = id(i + 1, j + 1), p01 = id(i, j + 1);
      // the diagonal p00-p11 is the refinement edge of both halves
      m.triangles.push_back({p10, p11, p00});
      m.triangles.push_back({p01, p00, p11});
    }
  }
  m.parent.assign(m.triangles.size(), -1);
  m.generation.assign(m.triangles.size(), 0);
  auto tag_edge = [&](int a, int b) {
    const BoundaryTag t = tagger(m.vertices[static_cast<std::size_t>(a)], m.vertices[static_cast<std::size_t>(b)]);
    if (t == BoundaryTag::interior) throw MeshError("boundary tagger returned interior");
    m.boundary_tags[sorted_pair(a, b)] = t;
  };
  for (int i = 0; i < nx; ++i) {
    tag_edge(id(i, 0), id(i + 1, 0));
    tag_edge(id(i, ny), id(i + 1, ny));
  }
  for (int j = 0; j < ny; ++j) {
    tag_edge(id(0, j), id(0, j + 1));
    tag_edge(id(nx, j), id(nx, j + 1));
  }
  m.build_topology();
  return m;
}

Mesh refine(const Mesh& mesh, std::span<const int> marked) {
  const std::size_t ne = mesh.num_edges();
  std::vector<std::uint8_t> edge_marked(ne, 0);
  std::vector<int> work;
  auto mark_edge = [&](int e) {
    if (edge_marked[static_cast<std::size_t>(e)]) return;
    edge_marked[static_cast<std::size_t>(e)] = 1;
    for (int t : mesh.edge_triangles[static_cast<std::size_t>(e)])
      if (t >= 0) work.push_back(t);
  };
  for (int t : marked) {
    if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_triangles())
      throw MeshError("refine: marked triangle out of range");
    mark_edge(mesh.tri_edges[static_cast<std::size_t>(t)][0]);
  }
  // closure: a triangle with any marked edge must bisect its refinement edge
  while (!work.empty()) {
    const int t = work.back();
    work.pop_back();
    mark_edge(mesh.tri_edges[static_cast<std::size_t>(t)][0]);
  }

  Mesh out;
  out.domain = mesh.domain;
  out.vertices = mesh.vertices;
  std::vector<int> midpoint(ne, -1);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!edge_marked[e]) continue;
    const Point2 a = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][0])];
    const Point2 b = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][1])];
    midpoint[e] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (a + b));
  }
  for (const auto& [key, tag] : mesh.boundary_tags) {
    const int e = mesh.edge_index(key.first, key.second);
    if (e >= 0 && edge_marked[static_cast<std::size_t>(e)]) {
      const int m = midpoint[static_cast<std::size_t>(e)];
      out.boundary_tags[sorted_pair(key.first, m)] = tag;
      out.boundary_tags[sorted_pair(m, key.second)] = tag;
    } else {
      out.boundary_tags[key] = tag;
    }
  }
  auto mid_of = [&](int a, int b) {
    const int e = mesh.edge_index(a, b);
    return (e >= 0 && edge_marked[static_cast<std::size_t>(e)]) ? midpoint[static_cast<std::size_t>(e)] : -1;
  };
  std::function<void(std::array<int, 3>, int, int)> bisect = [&](std::array<int, 3> v, int parent,
                                                                  int gen) {
    const int m = mid_of(v[1], v[2]);
    if (m < 0) {
      out.triangles.push_back(v);
      out.parent.push_back(parent);
      out.generation.push_back(gen);
      return;
    }
    bisect({m, v[0], v[1]}, parent, gen + 1);
    bisect({m, v[2], v[0]}, parent, gen + 1);
  };
  out.triangles.reserve(mesh.num_triangles() + 2 * marked.size() + 16);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    bisect(mesh.triangles[t], static_cast<int>(t), mesh.generation[t]);
  out.build_topology();
  return out;
}

Mesh refine_uniform(const Mesh& mesh, int rounds, std::vector<int>* ancestor) {
  Mesh cur = mesh;
  std::vector<int> anc(mesh.num_triangles());
  for (std::size_t t = 0; t < anc.size(); ++t) anc[t] = static_cast<int>(t);
  for (int r = 0; r < rounds; ++r) {
    std::vector<int> all(cur.num_triangles());
    for (std::size_t t = 0; t < all.size(); ++t) all[t] = static_cast<int>(t);
    Mesh next = refine(cur, all);
    std::vector<int> next_anc(next.num_triangles());
    for (std::size_t t = 0; t < next_anc.size(); ++t)
      next_anc[t] = anc[static_cast<std::size_t>(next.parent[t])];
    cur = std::move(next);
    anc = std::move(next_anc);
  }
  if (ancestor) *ancestor = std::move(anc);
  return cur;
}

bool is_conforming(const Mesh& mesh, std::string* why) {
  auto fail = [why](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    if (signed_area(mesh.triangle(static_cast<int>(t))) <= 0.0)
      return fail("triangle " + std::to_string(t) + " is not positively oriented");
  const double tol = kGeomTol * mesh.domain.diameter();
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const bool boundary = mesh.edge_triangles[e][1] < 0;
    const Point2 a = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][0])];
    const Point2 b = mesh.vertices[static_cast<std::size_t>(mesh.edges[e][1])];
    const Point2 mid = 0.5 * (a + b);
    const auto& d = mesh.domain;
    const bool on_domain_boundary = std::abs(mid.x - d.x0) <= tol || std::abs(mid.x - d.x1) <= tol ||
                                    std::abs(mid.y - d.y0) <= tol || std::abs(mid.y - d.y1) <= tol;
    if (boundary && !on_domain_boundary)
      return fail("edge " + std::to_string(e) + " has one triangle but is interior (hanging node)");
    if (!boundary && on_domain_boundary)
      return fail("edge " + std::to_string(e) + " on the boundary has two triangles");
    if (boundary && mesh.edge_tag[e] == BoundaryTag::interior)
      return fail("boundary edge " + std::to_string(e) + " is untagged");
  }
  // total area equals the domain area exactly when no overlaps or gaps exist
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) area += mesh.area(static_cast<int>(t));
  const double dom = mesh.domain.width() * mesh.domain.height();
  if (std::abs(area - dom) > 1e-10 * dom) return fail("triangles do not tile the domain");
  return true;
}

double min_angle_deg(const Mesh& mesh) {
  double best = 180.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto k = mesh.triangle(static_cast<int>(t));
    for (int i = 0; i < 3; ++i) {
      const Point2 u = k[static_cast<std::size_t>((i + 1) % 3)] - k[static_cast<std::size_t>(i)];
      const Point2 w = k[static_cast<std::size_t>((i + 2) % 3)] - k[static_cast<std::size_t>(i)];
      const double ang = std::atan2(std::abs(cross(u, w)), dot(u, w)) * 180.0 / std::numbers::pi;
      best = std::min(best, ang);
    }
  }
  return best;
}

std::array<double, 3> barycentric(const Triangle& tri, Point2 p) {
  const double a2 = cross(tri[1] - tri[0], tri[2] - tri[0]);
  const double l1 = cross(p - tri[0], tri[2] - tri[0]) / a2;
  const double l2 = cross(tri[1] - tri[0], p - tri[0]) / a2;
  return {1.0 - l1 - l2, l1, l2};
}

std::array<Point2, 3> barycentric_gradients(const Triangle& tri) {
  const double a2 = cross(tri[1] - tri[0], tri[2] - tri[0]);
  std::array<Point2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point2 pj = tri[static_cast<std::size_t>((i + 1) % 3)];
    const Point2 pk = tri[static_cast<std::size_t>((i + 2) % 3)];
    g[static_cast<std::size_t>(i)] = {(pj.y - pk.y) / a2, (pk.x - pj.x) / a2};
  }
  return g;
}

HatValue hat_function(const Mesh& mesh, int vertex, Point2 point) {
  if (vertex < 0 || static_cast<std::size_t>(vertex) >= mesh.num_vertices())
    throw MeshError("hat_function: vertex out of range");
  for (int t : mesh.vertex_triangles[static_cast<std::size_t>(vertex)]) {
    const auto tri = mesh.triangle(t);
    const auto lam = barycentric(tri, point);
    if (std::min({lam[0], lam[1], lam[2]}) < -1e-12) continue;
    const auto& v = mesh.triangles[static_cast<std::size_t>(t)];
    const auto grads = barycentric_gradients(tri);
    for (std::size_t i = 0; i < 3; ++i)
      if (v[i] == vertex) return {lam[i], grads[i]};
  }
  throw MeshError("hat_function: point outside the patch of vertex " + std::to_string(vertex));
}

ActiveClassification classify_active(const Mesh& mesh, std::span<const Feature> features) {
  std::vector<const Feature*> included;
  for (const auto& f : features)
    if (f.included()) included.push_back(&f);
  const std::size_t nt = mesh.num_triangles();
  ActiveClassification c;
  c.status.assign(nt, ElementStatus::uncut_active);
  c.active_area.assign(nt, 0.0);
  c.pieces.assign(nt, {});
  c.segments.assign(nt, {});
  const double tol = kGeomTol * mesh.domain.diameter();

  parallel_for(nt, [&](std::size_t t) {
    const auto tri = mesh.triangle(static_cast<int>(t));
    const double area = triangle_area(tri);
    BoundingBox tb;
    for (const auto& p : tri) tb.expand(p);
    std::vector<Feature> near;
    for (const Feature* f : included)
      if (tb.overlaps(f->shape.bbox(), tol)) near.push_back(*f);
    if (near.empty()) {
      c.active_area[t] = area;
      return;
    }
    auto pieces = clip_triangle(tri, near, tol);
    double active = 0.0;
    for (const auto& p : pieces) active += polygon_area(p);
    if (active < kInactiveFraction * area) {
      c.status[t] = ElementStatus::inactive;
      return;
    }
    std::vector<Segment> segs;
    for (const auto& f : near) {
      auto s = feature_segments_in_triangle(tri, f, tol);
      segs.insert(segs.end(), s.begin(), s.end());
    }
    c.active_area[t] = active;
    const bool clipped = active < area * (1.0 - 1e-14);
    if (clipped) c.pieces[t] = std::move(pieces);
    if (!segs.empty()) c.status[t] = ElementStatus::cut;
    c.segments[t] = std::move(segs);
  });

  c.vertex_active.assign(mesh.num_vertices(), 0);
  for (std::size_t t = 0; t < nt; ++t) {
    if (c.status[t] == ElementStatus::inactive) continue;
    c.active.push_back(static_cast<int>(t));
    if (c.status[t] == ElementStatus::cut) c.cut.push_back(static_cast<int>(t));
    for (int v : mesh.triangles[t]) c.vertex_active[static_cast<std::size_t>(v)] = 1;
  }
  return c;
}

Patch make_patch(const Mesh& mesh, const ActiveClassification& cls, int vertex) {
  if (vertex < 0 || static_cast<std::size_t>(vertex) >= mesh.num_vertices())
    throw MeshError("patch: vertex out of range");
  Patch p;
  p.center = vertex;
  for (int t : mesh.vertex_triangles[static_cast<std::size_t>(vertex)])
    if (cls.is_active(t)) p.elements.push_back(t);
  if (p.elements.empty())
    throw MeshError("fully trimmed vertex " + std::to_string(vertex) + " has no active triangle");
  std::sort(p.elements.begin(), p.elements.end());

  const auto v = static_cast<std::size_t>(vertex);
  if (mesh.vertex_dirichlet[v])
    p.kind = PatchKind::dirichlet;
  else if (mesh.vertex_boundary[v])
    p.kind = mesh.is_domain_corner(vertex) ? PatchKind::neumann_corner : PatchKind::neumann_exterior;
  else
    p.kind = PatchKind::interior;

  for (int t : p.elements) {
    const auto& tv = mesh.triangles[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[static_cast<std::size_t>(t)][i];
      if (tv[i] == vertex) {
        p.boundary_zero.push_back(e);
        continue;
      }
      const auto& et = mesh.edge_triangles[static_cast<std::size_t>(e)];
      const int other = et[0] == t ? et[1] : et[0];
      if (other >= 0 && cls.is_active(other)) {
        if (t < other) p.interior_edges.push_back(e);
      } else {
        p.boundary_psi.push_back(e);
      }
    }
  }
  return p;
}

}  // namespace defeat
