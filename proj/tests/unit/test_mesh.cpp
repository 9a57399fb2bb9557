#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "support.hpp"

using namespace defeat;
using namespace testing;

namespace {

std::size_t count_dirichlet_free(const Mesh& m) {
  std::size_t n = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) n += m.vertex_dirichlet[v] ? 0 : 1;
  return n;
}

}  // namespace

TEST_CASE("structured mesh counts") {
  const auto b = unit_box();
  const Mesh two = build_structured_mesh(b, std::sqrt(2.0) / 2.0, all_dirichlet(b));
  CHECK(two.num_vertices() == 9);
  CHECK(two.num_triangles() == 8);

  const Mesh m = build_structured_mesh(b, 7.07e-2, all_dirichlet(b));
  CHECK(m.num_vertices() == 441);
  CHECK(m.num_triangles() == 800);
  CHECK(count_dirichlet_free(m) == 361);
  double hmax = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) hmax = std::max(hmax, m.diameter(static_cast<int>(t)));
  CHECK(hmax <= 7.07e-2 * (1.0 + 5e-3));

  const Box big{-1, -1, 1, 1};
  const Mesh m3 = build_structured_mesh(big, 1.41e-1, all_dirichlet(big));
  CHECK(m3.num_triangles() == 800);
  CHECK(count_dirichlet_free(m3) == 361);
  CHECK(is_conforming(m3));
}

TEST_CASE("mesh size bound without relaxation artefacts") {
  const auto b = unit_box();
  for (double h : {0.5, 0.3, 0.1, 0.037}) {
    const Mesh m = build_structured_mesh(b, h, all_dirichlet(b));
    for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(m.diameter(static_cast<int>(t)) <= h * (1.0 + 5e-3));
  }
}

TEST_CASE("boundary tags follow the tagger") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, 0.25, box_tagger(b, {"bottom"}));
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    const auto& et = m.edge_triangles[e];
    const bool boundary = et[1] < 0;
    if (!boundary) {
      CHECK(m.edge_tag[e] == BoundaryTag::interior);
      continue;
    }
    const Point2 a = m.vertices[static_cast<std::size_t>(m.edges[e][0])];
    const Point2 c = m.vertices[static_cast<std::size_t>(m.edges[e][1])];
    const bool bottom = a.y == 0.0 && c.y == 0.0;
    CHECK(m.edge_tag[e] == (bottom ? BoundaryTag::dirichlet : BoundaryTag::neumann));
  }
}

TEST_CASE("refine with nothing marked is the identity") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, 0.3, all_dirichlet(b));
  const Mesh r = refine(m, {});
  CHECK(r.vertices == m.vertices);
  CHECK(r.triangles == m.triangles);
}

TEST_CASE("refining one triangle keeps the mesh conforming") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, std::sqrt(2.0) / 2.0, all_dirichlet(b));
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const std::vector<int> mark{t};
    const Mesh r = refine(m, mark);
    std::string why;
    CHECK_MESSAGE(is_conforming(r, &why), why);
    CHECK(r.num_triangles() > m.num_triangles());
    double area = 0.0;
    for (std::size_t k = 0; k < r.num_triangles(); ++k) area += r.area(static_cast<int>(k));
    CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
    // the marked triangle has been split
    for (std::size_t k = 0; k < r.num_triangles(); ++k) CHECK(r.triangles[k] != m.triangles[static_cast<std::size_t>(t)]);
  }
}

TEST_CASE("marking every triangle doubles the triangle count") {
  const auto b = unit_box();
  Mesh m = build_structured_mesh(b, 0.3, all_dirichlet(b));
  for (int round = 0; round < 3; ++round) {
    std::vector<int> all(m.num_triangles());
    std::iota(all.begin(), all.end(), 0);
    const Mesh r = refine(m, all);
    CHECK(r.num_triangles() == 2 * m.num_triangles());
    m = r;
  }
}

TEST_CASE("uniform refinement reports ancestors") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, 0.5, all_dirichlet(b));
  std::vector<int> anc;
  const Mesh f = refine_uniform(m, 2, &anc);
  CHECK(f.num_triangles() == 4 * m.num_triangles());
  REQUIRE(anc.size() == f.num_triangles());
  std::vector<double> area(m.num_triangles(), 0.0);
  for (std::size_t t = 0; t < f.num_triangles(); ++t) {
    const auto c = centroid(f.triangle(static_cast<int>(t)));
    const auto lam = barycentric(m.triangle(anc[t]), c);
    CHECK(*std::min_element(lam.begin(), lam.end()) > -1e-12);
    area[static_cast<std::size_t>(anc[t])] += f.area(static_cast<int>(t));
  }
  for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(area[t] == doctest::Approx(m.area(static_cast<int>(t))));
}

TEST_CASE("random refinement sequences stay conforming and shape regular") {
  const auto b = unit_box();
  Mesh m = build_structured_mesh(b, 0.25, box_tagger(b, {"left", "bottom"}));
  const double initial = min_angle_deg(m);
  CHECK(initial == doctest::Approx(45.0));
  std::mt19937_64 rng(11);
  for (int round = 0; round < 10; ++round) {
    std::vector<int> mark;
    std::bernoulli_distribution pick(0.2);
    for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t)
      if (pick(rng)) mark.push_back(t);
    m = refine(m, mark);
    std::string why;
    REQUIRE_MESSAGE(is_conforming(m, &why), why);
    CHECK(min_angle_deg(m) >= 20.0);
    CHECK(min_angle_deg(m) >= 0.5 * initial - 1e-9);
  }
  // children of boundary edges keep the parent's tag
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (m.edge_triangles[e][1] >= 0) continue;
    const Point2 a = m.vertices[static_cast<std::size_t>(m.edges[e][0])];
    const Point2 c = m.vertices[static_cast<std::size_t>(m.edges[e][1])];
    const bool dir = (a.x == 0.0 && c.x == 0.0) || (a.y == 0.0 && c.y == 0.0);
    CHECK(m.edge_tag[e] == (dir ? BoundaryTag::dirichlet : BoundaryTag::neumann));
  }
}

TEST_CASE("partition of unity of the hat functions") {
  const auto b = unit_box();
  Mesh m = build_structured_mesh(b, 0.3, all_dirichlet(b));
  m = refine(m, std::vector<int>{0, 5, 9});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) {
    const auto tri = m.triangle(t);
    double a = u(rng), c = u(rng);
    if (a + c > 1) {
      a = 1 - a;
      c = 1 - c;
    }
    const Point2 p = tri[0] + a * (tri[1] - tri[0]) + c * (tri[2] - tri[0]);
    double sum = 0.0;
    Point2 grad;
    for (int v : m.triangles[static_cast<std::size_t>(t)]) {
      // evaluate within this triangle to stay on one side of any edge
      const auto lam = barycentric(tri, p);
      const auto g = barycentric_gradients(tri);
      for (int i = 0; i < 3; ++i)
        if (m.triangles[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] == v) {
          sum += lam[static_cast<std::size_t>(i)];
          grad = grad + g[static_cast<std::size_t>(i)];
        }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(grad.x) < 1e-12);
    CHECK(std::abs(grad.y) < 1e-12);
  }
}

TEST_CASE("hat function values") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, std::sqrt(2.0) / 2.0, all_dirichlet(b));
  const int center = 4;  // (0.5, 0.5)
  CHECK(m.vertices[center] == Point2{0.5, 0.5});
  CHECK(hat_function(m, center, {0.5, 0.5}).value == doctest::Approx(1.0));
  CHECK(hat_function(m, center, {0.0, 0.25}).value == doctest::Approx(0.0));
  CHECK(hat_function(m, center, {0.25, 0.25}).value == doctest::Approx(0.5));
  CHECK_THROWS_AS(hat_function(m, 0, {0.9, 0.9}), MeshError);
}

TEST_CASE("patch shapes") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, std::sqrt(2.0) / 2.0, all_dirichlet(b));
  const auto cls = classify_active(m, std::vector<Feature>{});
  const Patch mid = make_patch(m, cls, 4);
  CHECK(mid.kind == PatchKind::interior);
  CHECK(mid.elements.size() == 6);
  CHECK(mid.boundary_zero.size() == 6);
  CHECK(mid.boundary_psi.empty());
  CHECK(mid.interior_edges.size() == 6);

  const Patch corner = make_patch(m, cls, 0);
  CHECK(corner.kind == PatchKind::dirichlet);
  CHECK(corner.elements.size() == 2);
  CHECK(corner.boundary_psi.size() == 2);

  const Mesh n = build_structured_mesh(b, std::sqrt(2.0) / 2.0, box_tagger(b, {"left"}));
  const auto ncls = classify_active(n, std::vector<Feature>{});
  CHECK(make_patch(n, ncls, 1).kind == PatchKind::neumann_exterior);  // (0.5, 0)
  CHECK(make_patch(n, ncls, 2).kind == PatchKind::neumann_corner);    // (1, 0)
  CHECK(make_patch(n, ncls, 3).kind == PatchKind::dirichlet);         // (0, 0.5)
  CHECK(make_patch(n, ncls, 0).kind == PatchKind::dirichlet);         // junction vertex
}

TEST_CASE("active classification") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, 7.07e-2, all_dirichlet(b));
  const auto none = classify_active(m, std::vector<Feature>{});
  CHECK(none.active.size() == m.num_triangles());
  CHECK(none.cut.empty());

  std::vector<Feature> fs{make_feature(1, regular_polygon({0.2, 0.2}, 0.04, 20, 0.0), b, FeatureStatus::included)};
  const auto cls = classify_active(m, fs);
  CHECK_FALSE(cls.cut.empty());
  double perimeter = 0.0, area = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    for (const auto& s : cls.segments[t]) perimeter += s.length();
    area += cls.active_area[t];
    if (cls.status[t] == ElementStatus::cut) CHECK_FALSE(cls.segments[t].empty());
    if (cls.status[t] == ElementStatus::uncut_active) CHECK(cls.active_area[t] == doctest::Approx(m.area(static_cast<int>(t))));
  }
  CHECK(perimeter == doctest::Approx(2.0 * 20 * 0.04 * std::sin(std::numbers::pi / 20)).epsilon(1e-12));
  CHECK(area == doctest::Approx(1.0 - polygon_area(fs[0].shape)).epsilon(1e-12));

  // a neglected feature plays no part
  fs[0].status = FeatureStatus::neglected;
  CHECK(classify_active(m, fs).cut.empty());
}

TEST_CASE("small feature inside one triangle") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, std::sqrt(2.0) / 2.0, all_dirichlet(b));
  // centroid of triangle 0 is inside its interior
  const Point2 c = centroid(m.triangle(0));
  std::vector<Feature> fs{make_feature(1, regular_polygon(c, 0.01, 5, 0.0), b, FeatureStatus::included)};
  const auto cls = classify_active(m, fs);
  CHECK(cls.cut == std::vector<int>{0});
  CHECK(cls.active.size() == m.num_triangles());
}

TEST_CASE("vertex inside an included feature keeps an interior patch") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, 7.07e-2, all_dirichlet(b));
  std::vector<Feature> fs{make_feature(1, regular_polygon({0.2, 0.2}, 0.04, 20, 0.0), b, FeatureStatus::included)};
  const auto cls = classify_active(m, fs);
  int found = -1;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (distance(m.vertices[v], {0.2, 0.2}) < 1e-9) found = static_cast<int>(v);
  REQUIRE(found >= 0);
  REQUIRE(cls.vertex_active[static_cast<std::size_t>(found)]);
  CHECK(make_patch(m, cls, found).kind == PatchKind::interior);
}

TEST_CASE("fully trimmed vertex has no patch") {
  const auto b = unit_box();
  const Mesh m = build_structured_mesh(b, 0.1, all_dirichlet(b));
  std::vector<Feature> fs{make_feature(1, square(0.5, 0.5, 0.25), b, FeatureStatus::included)};
  const auto cls = classify_active(m, fs);
  // the vertex nearest the centre has its whole star inside the square
  int inside = -1;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (inside < 0 || distance(m.vertices[v], {0.5, 0.5}) < distance(m.vertices[static_cast<std::size_t>(inside)], {0.5, 0.5}))
      inside = static_cast<int>(v);
  REQUIRE(inside >= 0);
  CHECK_FALSE(cls.vertex_active[static_cast<std::size_t>(inside)]);
  CHECK_THROWS_AS(make_patch(m, cls, inside), MeshError);
}
