#include "defeat/rt_element.hpp"

#include "defeat/quadrature.hpp"

namespace defeat {

RTElement::RTElement(const Triangle& tri, const std::array<int, 3>& ids) {
  center_ = centroid(tri);
  scale_ = std::max({distance(tri[0], tri[1]), distance(tri[1], tri[2]), distance(tri[2], tri[0])});
  Eigen::Matrix<double, kDofs, kDofs> d = Eigen::Matrix<double, kDofs, kDofs>::Zero();
  std::vector<double> gn, gw;
  gauss_legendre_01(3, gn, gw);
  std::array<Point2, kDofs> pv;
  for (int i = 0; i < 3; ++i) {
    const auto j = static_cast<std::size_t>((i + 1) % 3);
    const auto k = static_cast<std::size_t>((i + 2) % 3);
    Point2 a = tri[j], b = tri[k];
    if (ids[j] > ids[k]) std::swap(a, b);
    const Point2 t = b - a;
    const double len = norm(t);
    const Point2 n{t.y / len, -t.x / len};
    normals_[static_cast<std::size_t>(i)] = n;
    edge_pts_[static_cast<std::size_t>(i)] = {a, b};
    for (std::size_t q = 0; q < gn.size(); ++q) {
      const double s = gn[q];
      primal(a + s * t, pv);
      for (int m = 0; m < kDofs; ++m) {
        const double vn = dot(pv[static_cast<std::size_t>(m)], n);
        d(2 * i, m) += gw[q] * vn;
        d(2 * i + 1, m) += 3.0 * gw[q] * vn * (2.0 * s - 1.0);
      }
    }
  }
  const auto rule = triangle_rule(tri, 2);
  const double area = triangle_area(tri);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    primal(rule.points[q], pv);
    for (int m = 0; m < kDofs; ++m) {
      d(6, m) += rule.weights[q] * pv[static_cast<std::size_t>(m)].x / area;
      d(7, m) += rule.weights[q] * pv[static_cast<std::size_t>(m)].y / area;
    }
  }
  coeff_ = d.inverse();
}

void RTElement::primal(Point2 p, std::array<Point2, kDofs>& v) const {
  const double x = (p.x - center_.x) / scale_;
  const double y = (p.y - center_.y) / scale_;
  v = {Point2{1.0, 0.0}, Point2{0.0, 1.0}, Point2{x, 0.0}, Point2{y, 0.0},
       Point2{0.0, x},   Point2{0.0, y},   Point2{x * x, x * y}, Point2{x * y, y * y}};
}

void RTElement::values(Point2 p, Values& out) const {
  std::array<Point2, kDofs> pv;
  primal(p, pv);
  for (int j = 0; j < kDofs; ++j) {
    Point2 v;
    for (int k = 0; k < kDofs; ++k) v = v + coeff_(k, j) * pv[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(j)] = v;
  }
}

void RTElement::divergences(Point2 p, Scalars& out) const {
  const double x = (p.x - center_.x) / scale_;
  const double y = (p.y - center_.y) / scale_;
  const std::array<double, kDofs> pd{0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 3.0 * x, 3.0 * y};
  for (int j = 0; j < kDofs; ++j) {
    double s = 0.0;
    for (int k = 0; k < kDofs; ++k) s += coeff_(k, j) * pd[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(j)] = s / scale_;
  }
}

void RTElement::jacobians(Point2 p, Jacobians& out) const {
  const double x = (p.x - center_.x) / scale_;
  const double y = (p.y - center_.y) / scale_;
  std::array<Eigen::Matrix2d, kDofs> pj;
  for (auto& m : pj) m.setZero();
  pj[2](0, 0) = 1.0;
  pj[3](0, 1) = 1.0;
  pj[4](1, 0) = 1.0;
  pj[5](1, 1) = 1.0;
  pj[6] << 2.0 * x, 0.0, y, x;
  pj[7] << y, x, 0.0, 2.0 * y;
  for (int j = 0; j < kDofs; ++j) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    for (int k = 2; k < kDofs; ++k) m += coeff_(k, j) * pj[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(j)] = m / scale_;
  }
}

Point2 RTElement::eval(const Scalars& dofs, Point2 p) const {
  Values v;
  values(p, v);
  Point2 s;
  for (int j = 0; j < kDofs; ++j) s = s + dofs[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
  return s;
}

double RTElement::eval_divergence(const Scalars& dofs, Point2 p) const {
  Scalars d;
  divergences(p, d);
  double s = 0.0;
  for (int j = 0; j < kDofs; ++j) s += dofs[static_cast<std::size_t>(j)] * d[static_cast<std::size_t>(j)];
  return s;
}

}  // namespace defeat
