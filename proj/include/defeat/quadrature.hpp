#pragma once

#include <span>
#include <vector>

#include "defeat/geometry.hpp"

namespace defeat {

inline constexpr int kVolumeDegree = 4;
// Mass terms on feature segments are products of two linear normal traces
// times a linear weight at most, so the segment rule is kept at degree 5.
inline constexpr int kSegmentDegree = 5;
inline constexpr int kMaxTriangleDegree = 10;

struct QuadratureRule {
  std::vector<Point2> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  double total_weight() const;
  void append(const QuadratureRule& other);
};

/// Gauss-Legendre nodes and weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed Gauss rule, exact up to `degree` on the triangle.
QuadratureRule triangle_rule(const Triangle& tri, int degree = kVolumeDegree);

/// Rule on a union of clipped pieces, fanned from each piece's centroid.
QuadratureRule cut_rule(std::span<const Polygon> pieces, int degree = kVolumeDegree);

/// Gauss rule on the segment a-b; weights sum to its length.
QuadratureRule segment_rule(Point2 a, Point2 b, int degree = kSegmentDegree);
inline QuadratureRule segment_rule(const Segment& s, int degree = kSegmentDegree) {
  return segment_rule(s.a, s.b, degree);
}

}  // namespace defeat
