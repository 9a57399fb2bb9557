#include "defeat/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace defeat {

double ProblemSpec::neumann_at(Point2 p) const {
  for (const auto& f : features) {
    if (f.included() || f.gamma_zero.empty()) continue;
    if (point_in_polygon(p, f.shape) != Location::outside)
      return feature_zero ? feature_zero(p) : 0.0;
  }
  return neumann ? neumann(p) : 0.0;
}

std::size_t ProblemSpec::num_included() const {
  return static_cast<std::size_t>(
      std::count_if(features.begin(), features.end(), [](const Feature& f) { return f.included(); }));
}

void ProblemSpec::validate() const {
  if (!boundary) throw std::invalid_argument("problem has no boundary description");
  if (!dirichlet) throw std::invalid_argument("problem has no Dirichlet datum");
  // at least one Dirichlet side is required for a well-posed problem
  const std::array<std::pair<Point2, Point2>, 4> sides{{
      {{domain.x0, domain.y0}, {domain.x1, domain.y0}},
      {{domain.x1, domain.y0}, {domain.x1, domain.y1}},
      {{domain.x1, domain.y1}, {domain.x0, domain.y1}},
      {{domain.x0, domain.y1}, {domain.x0, domain.y0}},
  }};
  bool any = false;
  for (const auto& [a, b] : sides) any = any || boundary(a, b) == BoundaryTag::dirichlet;
  if (!any) throw std::invalid_argument("the Dirichlet boundary must be nonempty");
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = i + 1; j < features.size(); ++j)
      if (features_overlap(features[i], features[j]))
        throw std::invalid_argument("features " + std::to_string(features[i].id) + " and " +
                                    std::to_string(features[j].id) + " overlap");
}

BoundaryTagger box_tagger(const Box& domain, std::vector<std::string> dirichlet_sides) {
  for (const auto& s : dirichlet_sides)
    if (s != "left" && s != "right" && s != "bottom" && s != "top")
      throw std::invalid_argument("unknown side '" + s + "'");
  return [domain, sides = std::move(dirichlet_sides)](Point2 a, Point2 b) {
    const Point2 m = 0.5 * (a + b);
    const double tol = 1e-9 * domain.diameter();
    auto has = [&](const char* name) { return std::find(sides.begin(), sides.end(), name) != sides.end(); };
    if (std::abs(m.x - domain.x0) <= tol) return has("left") ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    if (std::abs(m.x - domain.x1) <= tol) return has("right") ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    if (std::abs(m.y - domain.y0) <= tol) return has("bottom") ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    if (std::abs(m.y - domain.y1) <= tol) return has("top") ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    return BoundaryTag::interior;
  };
}

ScalarField chessboard(const Box& domain, int n, double high, double low) {
  return [=](Point2 p) {
    const int i = std::clamp(static_cast<int>(std::floor((p.x - domain.x0) / domain.width() * n)), 0, n - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y - domain.y0) / domain.height() * n)), 0, n - 1);
    return (i + j) % 2 == 0 ? high : low;
  };
}

namespace {

double mu1(double t) {
  if (t < -0.5) return 2.0;
  if (t < 0.0) return -t + 1.5;
  if (t < 0.5) return 1.5;
  return -t + 2.0;
}

double mu2(double t) {
  if (t < -0.5) return -t;
  if (t < 0.0) return 0.5;
  if (t < 0.5) return -t + 0.5;
  return 0.0;
}

}  // namespace

ScalarField builtin_field(const std::string& name, const Box& domain) {
  const double tol = 1e-9 * domain.diameter();
  if (name == "zero") return [](Point2) { return 0.0; };
  if (name == "one") return [](Point2) { return 1.0; };
  if (name == "x") return [](Point2 p) { return p.x; };
  if (name == "y") return [](Point2 p) { return p.y; };
  if (name == "x_plus_y") return [](Point2 p) { return p.x + p.y; };
  if (name == "affine") return [](Point2 p) { return 1.0 + 2.0 * p.x - 3.0 * p.y; };
  if (name == "exp_bottom_left")
    // e^{-8(x+y)} on the sides x = x0 or y = y0, zero elsewhere
    return [domain, tol](Point2 p) {
      const bool on = std::abs(p.x - domain.x0) <= tol || std::abs(p.y - domain.y0) <= tol;
      return on ? std::exp(-8.0 * (p.x + p.y)) : 0.0;
    };
  if (name == "exp_bottom")
    return [domain, tol](Point2 p) {
      return std::abs(p.y - domain.y0) <= tol ? std::exp(-8.0 * (p.x + p.y)) : 0.0;
    };
  if (name == "piecewise_linear_mu")
    // built from the two hat-like profiles on the four sides of (-1,1)^2
    return [domain, tol](Point2 p) {
      if (std::abs(p.y - domain.y0) <= tol) return mu2(p.x);
      if (std::abs(p.x - domain.x0) <= tol) return mu1(-p.y);
      if (std::abs(p.y - domain.y1) <= tol) return mu1(p.x);
      if (std::abs(p.x - domain.x1) <= tol) return mu2(-p.y);
      return 0.0;
    };
  if (name == "chessboard") return chessboard(domain, 4, 100.0, 1.0);
  throw std::invalid_argument("unknown built-in field '" + name + "'");
}

std::vector<std::string> builtin_field_names() {
  return {"zero", "one", "x", "y", "x_plus_y", "affine", "exp_bottom_left", "exp_bottom",
          "piecewise_linear_mu", "chessboard"};
}

}  // namespace defeat
