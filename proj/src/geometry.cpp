#include "defeat/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace defeat {

namespace {

// Removes consecutive (and wrap-around) duplicates.
std::vector<Point2> dedupe(std::vector<Point2> pts, double tol) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    if (out.empty() || distance(out.back(), p) > tol) out.push_back(p);
  }
  while (out.size() > 1 && distance(out.front(), out.back()) <= tol) out.pop_back();
  return out;
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2, double tol) {
  auto orient = [](Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); };
  auto on_segment = [tol](Point2 a, Point2 b, Point2 c) {
    // c collinear with a-b: check bounding range
    return std::min(a.x, b.x) - tol <= c.x && c.x <= std::max(a.x, b.x) + tol &&
           std::min(a.y, b.y) - tol <= c.y && c.y <= std::max(a.y, b.y) + tol;
  };
  const double lp = std::max(distance(p1, p2), tol);
  const double lq = std::max(distance(q1, q2), tol);
  const double d1 = orient(q1, q2, p1) / lq;
  const double d2 = orient(q1, q2, p2) / lq;
  const double d3 = orient(p1, p2, q1) / lp;
  const double d4 = orient(p1, p2, q2) / lp;
  if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) &&
      ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)))
    return true;
  if (std::abs(d1) <= tol && on_segment(q1, q2, p1)) return true;
  if (std::abs(d2) <= tol && on_segment(q1, q2, p2)) return true;
  if (std::abs(d3) <= tol && on_segment(p1, p2, q1)) return true;
  if (std::abs(d4) <= tol && on_segment(p1, p2, q2)) return true;
  return false;
}

bool is_simple(const Polygon& p, double tol) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n], tol)) return false;
    }
  }
  return true;
}

// Separating-axis test for convex polygons; touching counts as intersecting.
bool convex_separated(std::span<const Point2> a, std::span<const Point2> b, double tol) {
  auto separated_by_edges_of = [tol](std::span<const Point2> p, std::span<const Point2> q) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 e = p[(i + 1) % n] - p[i];
      const double len = norm(e);
      if (len <= tol) continue;
      bool all_right = true;
      for (const auto& v : q) {
        if (cross(e, v - p[i]) / len >= -tol) {
          all_right = false;
          break;
        }
      }
      if (all_right) return true;
    }
    return false;
  };
  return separated_by_edges_of(a, b) || separated_by_edges_of(b, a);
}

bool convex_contains(std::span<const Point2> p, Point2 v, double tol) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = p[(i + 1) % n] - p[i];
    if (cross(e, v - p[i]) / norm(e) < -tol) return false;
  }
  return true;
}

// A minus convex P, as disjoint convex pieces.
std::vector<std::vector<Point2>> convex_difference(const std::vector<Point2>& a,
                                                   const std::vector<Point2>& p, double tol) {
  if (convex_separated(a, p, 0.0)) return {a};
  if (std::all_of(a.begin(), a.end(), [&](Point2 v) { return convex_contains(p, v, 0.0); }))
    return {};
  const double area_a = signed_area(a);
  std::vector<std::vector<Point2>> out;
  std::vector<Point2> rest = a;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n && !rest.empty(); ++i) {
    auto outside = clip_halfplane(rest, p[i], p[(i + 1) % n], false);
    if (outside.size() >= 3 && signed_area(outside) > 1e-15 * area_a) out.push_back(outside);
    rest = clip_halfplane(rest, p[i], p[(i + 1) % n], true);
  }
  (void)tol;
  return out;
}

double convex_intersection_area(const std::vector<Point2>& a, const std::vector<Point2>& p) {
  if (convex_separated(a, p, 0.0)) return 0.0;
  std::vector<Point2> rest = a;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n && !rest.empty(); ++i)
    rest = clip_halfplane(rest, p[i], p[(i + 1) % n], true);
  return rest.size() >= 3 ? signed_area(rest) : 0.0;
}

std::vector<Point2> ccw_triangle(const Triangle& t) {
  std::vector<Point2> v(t.begin(), t.end());
  if (signed_area(v) < 0.0) std::swap(v[1], v[2]);
  return v;
}

}  // namespace

BoundingBox Polygon::bbox() const {
  BoundingBox b;
  for (const auto& v : vertices) b.expand(v);
  return b;
}

double Feature::gamma_tilde_length() const {
  double len = 0.0;
  for (const auto& s : gamma_tilde) len += s.length();
  return len;
}

double Feature::diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i)
    for (std::size_t j = i + 1; j < shape.size(); ++j) d = std::max(d, distance(shape[i], shape[j]));
  return d;
}

Polygon regular_polygon(Point2 center, double radius, int n_edges, double theta_deg) {
  if (n_edges < 3) throw GeometryError("regular_polygon: need at least 3 edges");
  if (!(radius > 0.0)) throw GeometryError("regular_polygon: radius must be positive");
  const double theta = theta_deg * std::numbers::pi / 180.0;
  Polygon p;
  p.vertices.reserve(static_cast<std::size_t>(n_edges));
  for (int k = 0; k < n_edges; ++k) {
    const double phi = theta + 2.0 * std::numbers::pi * k / n_edges;
    p.vertices.push_back({center.x + radius * std::cos(phi), center.y + radius * std::sin(phi)});
  }
  return p;
}

double signed_area(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  if (n < 3) return 0.0;
  // shift to the first vertex to limit cancellation
  const Point2 o = pts[0];
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) s += cross(pts[i] - o, pts[i + 1] - o);
  return 0.5 * s;
}

double polygon_area(const Polygon& p) { return std::abs(signed_area(p.vertices)); }

double triangle_area(const Triangle& t) { return std::abs(signed_area(t)); }

Point2 centroid(std::span<const Point2> pts) {
  Point2 c;
  for (const auto& p : pts) c = c + p;
  return (1.0 / static_cast<double>(pts.size())) * c;
}

bool is_convex(const Polygon& p, double tol) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e1 = p[(i + 1) % n] - p[i];
    const Point2 e2 = p[(i + 2) % n] - p[(i + 1) % n];
    if (cross(e1, e2) < -tol * norm(e1) * norm(e2)) return false;
  }
  return true;
}

Location point_in_polygon(Point2 p, const Polygon& poly, double tol) {
  const std::size_t n = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = poly[j];
    const Point2 b = poly[i];
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    if (distance(p, a + t * ab) <= tol) return Location::boundary;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside ? Location::inside : Location::outside;
}

std::vector<Point2> clip_halfplane(std::span<const Point2> poly, Point2 a, Point2 b,
                                   bool keep_left) {
  std::vector<Point2> out;
  const std::size_t n = poly.size();
  if (n < 3) return out;
  out.reserve(n + 2);
  const Point2 dir = b - a;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 cur = poly[i];
    const Point2 nxt = poly[(i + 1) % n];
    const double dc = cross(dir, cur - a);
    const double dn = cross(dir, nxt - a);
    const bool in_c = keep_left ? dc >= 0.0 : dc <= 0.0;
    if (in_c) out.push_back(cur);
    if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  out = dedupe(std::move(out), 0.0);
  if (out.size() < 3) out.clear();
  return out;
}

std::vector<Polygon> ear_clip(const Polygon& poly, double tol) {
  std::vector<Polygon> tris;
  if (is_convex(poly, tol)) {
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
      tris.push_back(Polygon{{poly[0], poly[i], poly[i + 1]}});
    return tris;
  }
  std::vector<Point2> v = poly.vertices;
  while (v.size() > 3) {
    const std::size_t n = v.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 p0 = v[(i + n - 1) % n], p1 = v[i], p2 = v[(i + 1) % n];
      if (cross(p1 - p0, p2 - p1) <= tol) continue;  // reflex or flat
      const std::vector<Point2> ear{p0, p1, p2};
      bool empty = true;
      for (std::size_t j = 0; j < n && empty; ++j) {
        if (j == i || j == (i + 1) % n || j == (i + n - 1) % n) continue;
        // a reflex vertex touching the ear boundary also blocks it
        const bool repeated = distance(v[j], p0) <= tol || distance(v[j], p1) <= tol || distance(v[j], p2) <= tol;
        if (!repeated && convex_contains(ear, v[j], tol)) empty = false;
      }
      if (!empty) continue;
      tris.push_back(Polygon{ear});
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw GeometryError("ear_clip: polygon is not simple");
  }
  tris.push_back(Polygon{v});
  return tris;
}

Feature make_feature(int id, const Polygon& polygon, const Box& domain, FeatureStatus status,
                     double tol) {
  if (polygon.size() < 3) throw GeometryError("feature polygon needs at least 3 vertices");
  for (const auto& v : polygon.vertices)
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw GeometryError("feature polygon has non-finite coordinates");
  if (signed_area(polygon.vertices) <= 0.0)
    throw GeometryError("feature polygon must be counter-clockwise with positive area");
  if (!is_simple(polygon, tol)) throw GeometryError("feature polygon is self-intersecting");

  std::vector<Point2> clipped = polygon.vertices;
  const std::array<Point2, 4> box{Point2{domain.x0, domain.y0}, Point2{domain.x1, domain.y0},
                                  Point2{domain.x1, domain.y1}, Point2{domain.x0, domain.y1}};
  for (std::size_t i = 0; i < 4 && !clipped.empty(); ++i)
    clipped = clip_halfplane(clipped, box[i], box[(i + 1) % 4], true);
  // snap clipped coordinates onto the box so later predicates see exact sides
  for (auto& v : clipped) {
    if (std::abs(v.x - domain.x0) <= tol) v.x = domain.x0;
    if (std::abs(v.x - domain.x1) <= tol) v.x = domain.x1;
    if (std::abs(v.y - domain.y0) <= tol) v.y = domain.y0;
    if (std::abs(v.y - domain.y1) <= tol) v.y = domain.y1;
  }
  clipped = dedupe(std::move(clipped), tol);
  if (clipped.size() < 3 || signed_area(clipped) <= tol * tol)
    throw GeometryError("feature " + std::to_string(id) + " does not intersect the domain");

  Feature f;
  f.id = id;
  f.status = status;
  f.shape.vertices = std::move(clipped);

  auto on_side = [&](Point2 p, Point2 q) {
    return (std::abs(p.x - domain.x0) <= tol && std::abs(q.x - domain.x0) <= tol) ||
           (std::abs(p.x - domain.x1) <= tol && std::abs(q.x - domain.x1) <= tol) ||
           (std::abs(p.y - domain.y0) <= tol && std::abs(q.y - domain.y0) <= tol) ||
           (std::abs(p.y - domain.y1) <= tol && std::abs(q.y - domain.y1) <= tol);
  };
  const std::size_t n = f.shape.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = f.shape[i];
    const Point2 b = f.shape[(i + 1) % n];
    const Point2 d = b - a;
    const double len = norm(d);
    if (len <= tol) continue;
    Segment s{a, b, id, Point2{-d.y / len, d.x / len}};
    (on_side(a, b) ? f.gamma_zero : f.gamma_tilde).push_back(s);
  }
  if (f.gamma_tilde.empty())
    throw GeometryError("feature " + std::to_string(id) + " has no boundary inside the domain");
  f.convex_parts = is_convex(f.shape, tol) ? std::vector<Polygon>{f.shape} : ear_clip(f.shape, tol);
  return f;
}

bool features_overlap(const Feature& a, const Feature& b, double tol) {
  if (!a.shape.bbox().overlaps(b.shape.bbox(), tol)) return false;
  for (const auto& pa : a.convex_parts)
    for (const auto& pb : b.convex_parts)
      if (!convex_separated(pa.vertices, pb.vertices, tol)) return true;
  return false;
}

std::vector<Polygon> clip_triangle(const Triangle& tri, std::span<const Feature> features,
                                   double tol) {
  const auto base = ccw_triangle(tri);
  const double area = signed_area(base);
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) scale = std::max(scale, distance(tri[i], tri[(i + 1) % 3]));
  if (area <= tol * scale) throw GeometryError("clip_triangle: degenerate triangle");

  BoundingBox tb;
  for (const auto& p : base) tb.expand(p);
  std::vector<std::vector<Point2>> pieces{base};
  for (const auto& f : features) {
    if (!tb.overlaps(f.shape.bbox())) continue;
    for (const auto& part : f.convex_parts) {
      std::vector<std::vector<Point2>> next;
      for (const auto& piece : pieces) {
        auto diff = convex_difference(piece, part.vertices, tol);
        for (auto& d : diff) next.push_back(std::move(d));
      }
      pieces = std::move(next);
      if (pieces.empty()) return {};
    }
  }
  std::vector<Polygon> out;
  out.reserve(pieces.size());
  for (auto& p : pieces)
    if (signed_area(p) > 1e-14 * area) out.push_back(Polygon{std::move(p)});
  return out;
}

double intersection_area(const Triangle& tri, const Feature& feature) {
  const auto base = ccw_triangle(tri);
  double a = 0.0;
  for (const auto& part : feature.convex_parts) a += convex_intersection_area(base, part.vertices);
  return a;
}

std::vector<Segment> clip_segments_to_triangle(const Triangle& tri,
                                               std::span<const Segment> segments, double tol) {
  const auto v = ccw_triangle(tri);
  std::vector<Segment> out;
  for (const auto& seg : segments) {
    const Point2 d = seg.b - seg.a;
    const double len = norm(d);
    if (len <= tol) continue;
    double t0 = 0.0, t1 = 1.0;
    bool keep = true;
    for (int i = 0; i < 3 && keep; ++i) {
      const Point2 p = v[i];
      const Point2 e = v[(i + 1) % 3] - p;
      const double le = norm(e);
      const double da = cross(e, seg.a - p) / le;
      const double db = cross(e, seg.b - p) / le;
      if (std::abs(da) <= tol && std::abs(db) <= tol) {
        // Collinear with this edge: the piece belongs to the triangle lying on
        // the domain side, i.e. opposite to the normal.
        const Point2 opp = v[(i + 2) % 3];
        if (dot(opp - seg.a, seg.normal) >= 0.0) keep = false;
        continue;
      }
      if (da < 0.0 && db < 0.0) {
        keep = false;
      } else if (da < 0.0 || db < 0.0) {
        const double t = da / (da - db);
        if (da < 0.0)
          t0 = std::max(t0, t);
        else
          t1 = std::min(t1, t);
      }
    }
    if (!keep || (t1 - t0) * len <= tol) continue;
    out.push_back(Segment{seg.a + t0 * d, seg.a + t1 * d, seg.owner_feature, seg.normal});
  }
  return out;
}

std::vector<Segment> feature_segments_in_triangle(const Triangle& tri, const Feature& feature,
                                                  double tol) {
  BoundingBox tb;
  for (const auto& p : tri) tb.expand(p);
  if (!tb.overlaps(feature.shape.bbox(), tol)) return {};
  return clip_segments_to_triangle(tri, feature.gamma_tilde, tol);
}

std::vector<std::array<double, 2>> segment_outside_features(Point2 a, Point2 b,
                                                            std::span<const Feature> features,
                                                            double tol) {
  const Point2 d = b - a;
  const double len = norm(d);
  std::vector<std::array<double, 2>> inside;
  BoundingBox sb;
  sb.expand(a);
  sb.expand(b);
  for (const auto& f : features) {
    if (!sb.overlaps(f.shape.bbox(), tol)) continue;
    for (const auto& part : f.convex_parts) {
      double t0 = 0.0, t1 = 1.0;
      bool hit = true;
      const std::size_t n = part.size();
      for (std::size_t i = 0; i < n && hit; ++i) {
        const Point2 p = part[i];
        const Point2 e = part[(i + 1) % n] - p;
        const double da = cross(e, a - p);
        const double db = cross(e, b - p);
        if (da < 0.0 && db < 0.0) {
          hit = false;
        } else if (da < 0.0 || db < 0.0) {
          const double t = da / (da - db);
          if (da < 0.0)
            t0 = std::max(t0, t);
          else
            t1 = std::min(t1, t);
        }
      }
      if (hit && (t1 - t0) * len > tol) inside.push_back({t0, t1});
    }
  }
  std::sort(inside.begin(), inside.end());
  std::vector<std::array<double, 2>> out;
  double cur = 0.0;
  for (const auto& iv : inside) {
    if ((iv[0] - cur) * len > tol) out.push_back({cur, iv[0]});
    cur = std::max(cur, iv[1]);
  }
  if ((1.0 - cur) * len > tol) out.push_back({cur, 1.0});
  return out;
}

}  // namespace defeat
