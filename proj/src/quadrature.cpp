#include "defeat/quadrature.hpp"

#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace defeat {

double QuadratureRule::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void QuadratureRule::append(const QuadratureRule& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

namespace {

struct GaussTable {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussTable compute_gauss(int n) {
  // Newton iteration on P_n starting from the Chebyshev-like guess.
  GaussTable t;
  t.nodes.resize(static_cast<std::size_t>(n));
  t.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // map [-1,1] -> [0,1]
    t.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (x + 1.0);
    t.weights[static_cast<std::size_t>(n - 1 - i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return t;
}

const GaussTable& gauss_table(int n) {
  static constexpr int kMax = 16;
  static std::array<GaussTable, kMax + 1> tables;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int k = 1; k <= kMax; ++k) tables[static_cast<std::size_t>(k)] = compute_gauss(k);
  });
  if (n < 1 || n > kMax) throw std::invalid_argument("gauss rule: unsupported point count");
  return tables[static_cast<std::size_t>(n)];
}

}  // namespace

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  const auto& t = gauss_table(n);
  nodes = t.nodes;
  weights = t.weights;
}

QuadratureRule triangle_rule(const Triangle& tri, int degree) {
  if (degree < 1 || degree > kMaxTriangleDegree)
    throw std::invalid_argument("triangle_rule: unsupported degree " + std::to_string(degree));
  const int n = (degree + 3) / 2;  // ceil((degree + 2) / 2)
  const auto& g = gauss_table(n);
  const Point2 a = tri[0];
  const Point2 e1 = tri[1] - a;
  const Point2 e2 = tri[2] - a;
  const double jac = std::abs(cross(e1, e2));
  QuadratureRule r;
  r.points.reserve(static_cast<std::size_t>(n * n));
  r.weights.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    const double u = g.nodes[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const double v = g.nodes[static_cast<std::size_t>(j)] * (1.0 - u);
      r.points.push_back(a + u * e1 + v * e2);
      r.weights.push_back(jac * g.weights[static_cast<std::size_t>(i)] *
                          g.weights[static_cast<std::size_t>(j)] * (1.0 - u));
    }
  }
  return r;
}

QuadratureRule cut_rule(std::span<const Polygon> pieces, int degree) {
  QuadratureRule r;
  for (const auto& piece : pieces) {
    if (piece.size() < 3) continue;
    if (piece.size() == 3) {
      r.append(triangle_rule({piece[0], piece[1], piece[2]}, degree));
      continue;
    }
    if (!is_convex(piece)) {
      for (const auto& t : ear_clip(piece)) r.append(triangle_rule({t[0], t[1], t[2]}, degree));
      continue;
    }
    const Point2 c = centroid(piece.vertices);
    for (std::size_t i = 0; i < piece.size(); ++i) {
      const Triangle t{c, piece[i], piece[(i + 1) % piece.size()]};
      if (triangle_area(t) <= 0.0) continue;
      r.append(triangle_rule(t, degree));
    }
  }
  return r;
}

QuadratureRule segment_rule(Point2 a, Point2 b, int degree) {
  if (degree < 0) throw std::invalid_argument("segment_rule: negative degree");
  const int n = std::max(1, (degree + 2) / 2);
  const auto& g = gauss_table(n);
  const double len = distance(a, b);
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    const double t = g.nodes[static_cast<std::size_t>(i)];
    r.points.push_back(a + t * (b - a));
    r.weights.push_back(len * g.weights[static_cast<std::size_t>(i)]);
  }
  return r;
}

}  // namespace defeat
