#pragma once

#include <functional>
#include <string>
#include <vector>

#include "defeat/geometry.hpp"
#include "defeat/mesh.hpp"

namespace defeat {

using ScalarField = std::function<double(Point2)>;

/// Data of a partially defeatured Poisson problem
///   -div(kappa grad u) = f,  u = g_D on the Dirichlet part,
///   kappa grad u . n = g_N on the Neumann part, = g on feature boundaries.
struct ProblemSpec {
  std::string name = "custom";
  Box domain;
  BoundaryTagger boundary;  // splits the outer boundary into Dirichlet and Neumann
  ScalarField source;       // f, also its extension inside features
  ScalarField dirichlet;    // g_D, interpolated at Dirichlet vertices
  ScalarField neumann;      // g_N on the Neumann part away from features
  ScalarField feature_flux; // g on feature boundaries
  ScalarField feature_zero; // g_0 on the part of a feature lying on the outer boundary
  ScalarField kappa;        // piecewise constant, sampled at element centroids
  std::vector<Feature> features;

  // Datum on the Neumann boundary of the partially defeatured domain: g_0
  // inside neglected boundary features, g_N elsewhere.
  double neumann_at(Point2 p) const;
  double kappa_at(Point2 p) const { return kappa ? kappa(p) : 1.0; }
  std::size_t num_included() const;
  void validate() const;
};

/// Boundary tagger for a box where the listed sides are Dirichlet.
/// Sides are named "left", "right", "bottom", "top".
BoundaryTagger box_tagger(const Box& domain, std::vector<std::string> dirichlet_sides);

/// Named built-in scalar fields usable from configuration files.
ScalarField builtin_field(const std::string& name, const Box& domain);
std::vector<std::string> builtin_field_names();

/// Piecewise-constant chessboard coefficient on an n x n grid over the box:
/// value `high` where (i + j) is even, `low` otherwise.
ScalarField chessboard(const Box& domain, int n, double high, double low);

}  // namespace defeat
