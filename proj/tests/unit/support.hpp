#pragma once

// Small helpers shared by the unit tests.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "defeat/geometry.hpp"
#include "defeat/mesh.hpp"
#include "defeat/problem.hpp"

namespace testing {

using namespace defeat;

inline Box unit_box() { return Box{0.0, 0.0, 1.0, 1.0}; }

inline BoundaryTagger all_dirichlet(const Box& b) {
  return box_tagger(b, {"left", "right", "bottom", "top"});
}

inline ScalarField constant(double c) {
  return [c](Point2) { return c; };
}

/// Feature-free Poisson problem on the unit square with the given data.
inline ProblemSpec plain_problem(ScalarField dirichlet, std::vector<std::string> sides = {"left", "right", "bottom", "top"},
                                 ScalarField neumann = constant(0.0)) {
  ProblemSpec p;
  p.domain = unit_box();
  p.boundary = box_tagger(p.domain, std::move(sides));
  p.source = constant(0.0);
  p.dirichlet = std::move(dirichlet);
  p.neumann = std::move(neumann);
  p.feature_flux = constant(0.0);
  p.feature_zero = constant(0.0);
  p.kappa = constant(1.0);
  return p;
}

/// Axis-aligned square feature [cx-hw, cx+hw] x [cy-hw, cy+hw].
inline Polygon square(double cx, double cy, double hw) {
  Polygon s;
  s.vertices = {{cx - hw, cy - hw}, {cx + hw, cy - hw}, {cx + hw, cy + hw}, {cx - hw, cy + hw}};
  return s;
}

/// Monte-Carlo estimate of |tri ∩ poly| using point membership only.
inline double monte_carlo_area(const Triangle& tri, const Polygon& poly, int samples, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hits = 0;
  for (int i = 0; i < samples; ++i) {
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Point2 p = tri[0] + a * (tri[1] - tri[0]) + b * (tri[2] - tri[0]);
    if (point_in_polygon(p, poly) != Location::outside) ++hits;
  }
  return triangle_area(tri) * hits / samples;
}

}  // namespace testing
