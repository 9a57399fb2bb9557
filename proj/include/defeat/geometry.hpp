#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace defeat {

/// Default on-boundary tolerance for unit-scale domains.
inline constexpr double kGeomTol = 1e-12;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

using Triangle = std::array<Point2, 3>;

struct BoundingBox {
  Point2 lo{+INFINITY, +INFINITY};
  Point2 hi{-INFINITY, -INFINITY};

  void expand(Point2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  bool overlaps(const BoundingBox& o, double tol = 0.0) const {
    return lo.x <= o.hi.x + tol && o.lo.x <= hi.x + tol && lo.y <= o.hi.y + tol &&
           o.lo.y <= hi.y + tol;
  }
};

/// Axis-aligned rectangle; used for the defeatured domain.
struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double diameter() const { return std::hypot(x1 - x0, y1 - y0); }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

/// Simple polygon, counter-clockwise.
struct Polygon {
  std::vector<Point2> vertices;

  std::size_t size() const { return vertices.size(); }
  const Point2& operator[](std::size_t i) const { return vertices[i]; }
  BoundingBox bbox() const;
};

enum class FeatureStatus { neglected, included };

/// Piece of a feature boundary. The normal is outward with respect to the
/// physical domain, so it points into the feature.
struct Segment {
  Point2 a;
  Point2 b;
  int owner_feature = -1;
  Point2 normal;

  double length() const { return distance(a, b); }
};

struct Feature {
  int id = 0;
  Polygon shape;  // feature region clipped to the defeatured domain
  FeatureStatus status = FeatureStatus::neglected;
  std::vector<Segment> gamma_tilde;  // boundary part inside the domain
  std::vector<Segment> gamma_zero;   // boundary part on the domain boundary
  std::vector<Polygon> convex_parts; // shape itself when convex, else ear triangles

  bool included() const { return status == FeatureStatus::included; }
  double gamma_tilde_length() const;
  double diameter() const;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Location { inside, boundary, outside };

Polygon regular_polygon(Point2 center, double radius, int n_edges, double theta_deg);

double signed_area(std::span<const Point2> pts);
double polygon_area(const Polygon& p);
double triangle_area(const Triangle& t);
Point2 centroid(std::span<const Point2> pts);
bool is_convex(const Polygon& p, double tol = kGeomTol);

Location point_in_polygon(Point2 p, const Polygon& poly, double tol = kGeomTol);

/// Part of a convex polygon on the left of the oriented line a->b (keep_left)
/// or on its right.
std::vector<Point2> clip_halfplane(std::span<const Point2> poly, Point2 a, Point2 b,
                                   bool keep_left);

/// Ear-clipping triangulation of a simple CCW polygon.
std::vector<Polygon> ear_clip(const Polygon& poly, double tol = kGeomTol);

/// Builds a feature from its polygon, clipping it to the domain and splitting
/// its boundary into the interior part and the part lying on the domain boundary.
Feature make_feature(int id, const Polygon& polygon, const Box& domain,
                     FeatureStatus status = FeatureStatus::neglected,
                     double tol = kGeomTol);

/// True when the closures of the two features intersect.
bool features_overlap(const Feature& a, const Feature& b, double tol = kGeomTol);

/// Pieces of tri minus the union of the given (pairwise disjoint) features.
/// Pieces are convex, counter-clockwise and mutually disjoint.
std::vector<Polygon> clip_triangle(const Triangle& tri, std::span<const Feature> features,
                                   double tol = kGeomTol);

/// Area of tri ∩ feature.
double intersection_area(const Triangle& tri, const Feature& feature);

/// Parts of the feature's interior boundary inside the closed triangle.
/// A part lying on a triangle edge goes to the triangle on the domain side of it.
std::vector<Segment> feature_segments_in_triangle(const Triangle& tri, const Feature& feature,
                                                  double tol = kGeomTol);

/// Same clipping for an arbitrary list of segments.
std::vector<Segment> clip_segments_to_triangle(const Triangle& tri,
                                               std::span<const Segment> segments,
                                               double tol = kGeomTol);

/// Sub-intervals [t0,t1] of the segment a->b lying outside every feature.
std::vector<std::array<double, 2>> segment_outside_features(Point2 a, Point2 b,
                                                            std::span<const Feature> features,
                                                            double tol = kGeomTol);

}  // namespace defeat
