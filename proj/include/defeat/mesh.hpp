#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "defeat/geometry.hpp"

namespace defeat {

enum class BoundaryTag : std::uint8_t { interior, dirichlet, neumann };

/// Decides the tag of a boundary edge from its endpoints.
using BoundaryTagger = std::function<BoundaryTag(Point2, Point2)>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conforming triangulation. Each triangle is stored as (v0, v1, v2),
/// counter-clockwise, with v0 the newest vertex and (v1, v2) its refinement edge.
struct Mesh {
  Box domain;
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> parent;      // index into the mesh this one was refined from, -1 at the root
  std::vector<int> generation;  // bisection depth from the initial mesh
  std::map<std::pair<int, int>, BoundaryTag> boundary_tags;  // keyed by sorted vertex pair

  // Topology, rebuilt by build_topology().
  std::vector<std::array<int, 2>> edges;           // sorted endpoints
  std::vector<std::array<int, 2>> edge_triangles;  // -1 when absent
  std::vector<BoundaryTag> edge_tag;
  std::vector<std::array<int, 3>> tri_edges;  // local edge i is opposite local vertex i
  std::vector<std::vector<int>> vertex_triangles;
  std::vector<std::uint8_t> vertex_dirichlet;
  std::vector<std::uint8_t> vertex_boundary;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  std::size_t num_edges() const { return edges.size(); }

  Triangle triangle(int t) const;
  double area(int t) const;
  double diameter(int t) const;
  /// Edge id for the vertex pair, or -1.
  int edge_index(int a, int b) const;
  bool is_domain_corner(int v) const;

  void build_topology();

 private:
  std::unordered_map<std::uint64_t, int> edge_lookup_;
};

Mesh build_structured_mesh(const Box& domain, double h_target, const BoundaryTagger& tagger);

/// Newest-vertex bisection of the marked triangles plus conforming closure.
/// parent[] of the result indexes into `mesh`.
Mesh refine(const Mesh& mesh, std::span<const int> marked);

/// `rounds` bisections of every triangle. If ancestor is given it receives,
/// for each output triangle, the index of the input triangle containing it.
Mesh refine_uniform(const Mesh& mesh, int rounds, std::vector<int>* ancestor = nullptr);

/// Edge-incidence audit: every interior edge has two triangles, every
/// boundary edge one, all triangles positively oriented.
bool is_conforming(const Mesh& mesh, std::string* why = nullptr);

double min_angle_deg(const Mesh& mesh);

std::array<double, 3> barycentric(const Triangle& tri, Point2 p);
/// Gradients of the three barycentric coordinates.
std::array<Point2, 3> barycentric_gradients(const Triangle& tri);

struct HatValue {
  double value = 0.0;
  Point2 gradient;
};

/// Hat function of `vertex` at `point`, evaluated in the first incident
/// triangle containing the point.
HatValue hat_function(const Mesh& mesh, int vertex, Point2 point);

enum class ElementStatus : std::uint8_t { uncut_active, cut, inactive };

struct ActiveClassification {
  std::vector<ElementStatus> status;
  std::vector<double> active_area;
  std::vector<std::vector<Polygon>> pieces;     // clipped active region when smaller than K
  std::vector<std::vector<Segment>> segments;   // included-feature boundary inside K
  std::vector<int> active;                      // active triangles, ascending
  std::vector<int> cut;                         // cut triangles, ascending
  std::vector<std::uint8_t> vertex_active;      // vertex touches an active triangle

  bool is_active(int t) const { return status[static_cast<std::size_t>(t)] != ElementStatus::inactive; }
  bool is_cut(int t) const { return status[static_cast<std::size_t>(t)] == ElementStatus::cut; }
  /// True when the triangle is only partly active.
  bool is_clipped(int t) const { return !pieces[static_cast<std::size_t>(t)].empty(); }
};

/// Inactive threshold on the active area fraction.
inline constexpr double kInactiveFraction = 1e-12;

/// Only features with status `included` take part.
ActiveClassification classify_active(const Mesh& mesh, std::span<const Feature> features);

enum class PatchKind { interior, neumann_exterior, neumann_corner, dirichlet };

struct Patch {
  int center = -1;
  PatchKind kind = PatchKind::interior;
  std::vector<int> elements;        // active triangles sharing the center
  std::vector<int> boundary_zero;   // edges opposite the center (hat function vanishes)
  std::vector<int> boundary_psi;    // edges through the center on the patch boundary
  std::vector<int> interior_edges;  // edges through the center shared by two patch elements

  bool zero_mean() const { return kind != PatchKind::dirichlet; }
};

Patch make_patch(const Mesh& mesh, const ActiveClassification& cls, int vertex);

}  // namespace defeat
