#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace netmorph {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  Vec2& operator+=(Vec2 b) {
    x += b.x;
    y += b.y;
    return *this;
  }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }

/// Boundary condition marker for the pressure on a boundary edge.
enum class BoundaryTag : std::uint8_t { kInterior = 0, kDirichlet = 1, kNeumann = 2 };

const char* to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Triangle = std::array<int, 3>;
using EdgeVertices = std::array<int, 2>;

struct TaggedEdge {
  int v0 = -1;
  int v1 = -1;
  BoundaryTag tag = BoundaryTag::kNeumann;
};

/// Conforming triangulation of a polygonal 2D domain.
///
/// Triangles are stored counterclockwise. Edges are numbered in lexicographic
/// order of their (lower, higher) vertex pair and globally oriented from the
/// lower to the higher vertex index; the global unit normal is the tangent
/// rotated clockwise. For local edge i of a triangle (the edge opposite
/// local vertex i) the orientation sign is +1 when the global normal points
/// out of that triangle.
///
/// A Mesh is immutable after construction.
class Mesh {
 public:
  /// Every boundary edge must appear exactly once in `boundary`, and no
  /// interior edge may appear there. Throws MeshError otherwise.
  Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
       std::span<const TaggedEdge> boundary);

  using EdgeClassifier = std::function<BoundaryTag(Vec2, Vec2)>;

  /// Builds the topology and tags every boundary edge with `classify(a, b)`.
  static Mesh with_classifier(std::vector<Vec2> vertices,
                              std::vector<Triangle> triangles,
                              const EdgeClassifier& classify);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  Vec2 vertex(int v) const { return vertices_[v]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Triangle& triangle(int t) const { return triangles_[t]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const EdgeVertices& edge(int e) const { return edges_[e]; }
  BoundaryTag edge_tag(int e) const { return edge_tags_[e]; }
  bool is_boundary_edge(int e) const { return edge_tags_[e] != BoundaryTag::kInterior; }

  /// Global edge index of local edge i (opposite local vertex i).
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[t]; }
  const std::array<std::int8_t, 3>& triangle_edge_signs(int t) const {
    return triangle_edge_signs_[t];
  }
  /// Incident triangles of an edge; the second entry is -1 on the boundary.
  const std::array<int, 2>& edge_triangles(int e) const { return edge_triangles_[e]; }

  double area(int t) const { return areas_[t]; }
  double total_area() const;
  Vec2 centroid(int t) const;
  double edge_length(int e) const;
  /// Global unit normal of edge e.
  Vec2 edge_normal(int e) const;

  /// h_T = sqrt(|T|).
  double h_triangle(int t) const { return std::sqrt(areas_[t]); }
  double h_max() const;
  double h_min() const;

  /// Vertices lying on at least one DIRICHLET edge.
  bool is_dirichlet_vertex(int v) const { return dirichlet_vertex_[v] != 0; }
  int num_boundary_edges() const;
  std::vector<TaggedEdge> boundary_edges() const;

  /// Re-verifies all structural invariants. Throws MeshError on violation.
  void check() const;

 private:
  Mesh() = default;
  void build_topology();
  void apply_tags(std::span<const TaggedEdge> boundary);

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<EdgeVertices> edges_;
  std::vector<BoundaryTag> edge_tags_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::array<std::int8_t, 3>> triangle_edge_signs_;
  std::vector<std::array<int, 2>> edge_triangles_;
  std::vector<double> areas_;
  std::vector<std::uint8_t> dirichlet_vertex_;
};

/// Unit square [0,1]^2 split into n x n cells, two triangles each.
/// All boundary edges are DIRICHLET.
Mesh generate_unit_square(int n);

/// Corners of the truncated diamond, counterclockwise starting at (0,-0.5).
std::span<const Vec2> diamond_polygon();

/// Diamond (a square rotated by 45 degrees with corners (-0.5,0), (0.75,1.25),
/// (2,0), (0.75,-1.25)) with its left corner cut along x1 = 0. Edges on the
/// cut are DIRICHLET, all other boundary edges NEUMANN. The achieved h is at
/// most h_target, and above h_target/2 whenever h_target < 0.88.
Mesh generate_diamond(double h_target);

/// Splits every triangle into n^2 similar children on a barycentric lattice.
/// Existing vertices keep their indices. Boundary tags are inherited.
Mesh subdivide_uniform(const Mesh& mesh, int n);

/// Red (1:4) refinement, i.e. subdivide_uniform(mesh, 2).
Mesh refine_uniform(const Mesh& mesh);

/// Plain-text mesh format, see docs/formats.md.
void write_mesh(const Mesh& mesh, std::ostream& out);
Mesh read_mesh(std::istream& in);

}  // namespace netmorph
