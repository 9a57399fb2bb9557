#pragma once

#include <Eigen/Dense>
#include <array>

#include "defeat/geometry.hpp"

namespace defeat {

/// Lowest-order-plus-one Raviart-Thomas element (8 DOFs) on one triangle.
///
/// DOFs 2i, 2i+1 live on local edge i (opposite local vertex i). With the edge
/// running from its lower-id endpoint A to B and the fixed normal
/// n_e = (t_y, -t_x)/|t|, t = B - A, they are the Legendre coefficients of the
/// normal trace: v.n_e(s) = dof_2i + dof_2i+1 (2s - 1), s in [0,1].
/// DOFs 6 and 7 are the element means of v_x and v_y.
class RTElement {
 public:
  static constexpr int kDofs = 8;
  using Values = std::array<Point2, kDofs>;
  using Scalars = std::array<double, kDofs>;
  using Jacobians = std::array<Eigen::Matrix2d, kDofs>;

  RTElement() = default;
  /// ids are the global vertex ids, used only to orient the edges.
  RTElement(const Triangle& tri, const std::array<int, 3>& ids);

  void values(Point2 p, Values& out) const;
  void divergences(Point2 p, Scalars& out) const;
  void jacobians(Point2 p, Jacobians& out) const;

  /// Fixed normal of local edge i.
  Point2 edge_normal(int i) const { return normals_[static_cast<std::size_t>(i)]; }
  /// Endpoints A (lower id) and B of local edge i.
  std::array<Point2, 2> edge_points(int i) const { return edge_pts_[static_cast<std::size_t>(i)]; }

  Point2 eval(const Scalars& dofs, Point2 p) const;
  double eval_divergence(const Scalars& dofs, Point2 p) const;

 private:
  void primal(Point2 p, std::array<Point2, kDofs>& v) const;

  Point2 center_;
  double scale_ = 1.0;
  Eigen::Matrix<double, kDofs, kDofs> coeff_;  // basis_j = sum_k coeff_(k, j) primal_k
  std::array<Point2, 3> normals_;
  std::array<std::array<Point2, 2>, 3> edge_pts_;
};

}  // namespace defeat
