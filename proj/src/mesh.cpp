#include "netmorph/mesh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace netmorph {

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::kDirichlet:
      return "DIRICHLET";
    case BoundaryTag::kNeumann:
      return "NEUMANN";
    case BoundaryTag::kInterior:
      break;
  }
  return "INTERIOR";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "DIRICHLET") return BoundaryTag::kDirichlet;
  if (s == "NEUMANN") return BoundaryTag::kNeumann;
  throw MeshError("unknown boundary tag '" + s + "'");
}

namespace {

double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

// Vertices of local edge i (opposite local vertex i), in triangle order.
std::array<int, 2> local_edge(const Triangle& tri, int i) {
  return {tri[(i + 1) % 3], tri[(i + 2) % 3]};
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
           std::span<const TaggedEdge> boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  build_topology();
  apply_tags(boundary);
}

Mesh Mesh::with_classifier(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                           const EdgeClassifier& classify) {
  Mesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.triangles_ = std::move(triangles);
  mesh.build_topology();
  std::vector<TaggedEdge> tags;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edge_triangles_[e][1] >= 0) continue;
    const auto& ev = mesh.edges_[e];
    tags.push_back({ev[0], ev[1], classify(mesh.vertices_[ev[0]], mesh.vertices_[ev[1]])});
  }
  mesh.apply_tags(tags);
  return mesh;
}

void Mesh::build_topology() {
  const int nv = num_vertices();
  const int nt = num_triangles();
  if (nt == 0) throw MeshError("mesh has no triangles");

  areas_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= nv) {
        throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(v) + " out of range");
      }
    }
    const double a = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (!(a > 0.0)) {
      throw MeshError("triangle " + std::to_string(t) +
                      " is degenerate or clockwise (signed area " + std::to_string(a) + ")");
    }
    areas_[t] = a;
  }

  // (lo, hi, triangle, local index), sorted by vertex pair: edge numbering does
  // not depend on the order in which triangles are listed.
  struct Incidence {
    int lo, hi, tri, local;
  };
  std::vector<Incidence> inc;
  inc.reserve(3 * static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) {
      const auto [a, b] = local_edge(triangles_[t], i);
      inc.push_back({std::min(a, b), std::max(a, b), t, i});
    }
  }
  std::sort(inc.begin(), inc.end(), [](const Incidence& l, const Incidence& r) {
    if (l.lo != r.lo) return l.lo < r.lo;
    if (l.hi != r.hi) return l.hi < r.hi;
    return l.tri < r.tri;
  });

  edges_.clear();
  edge_triangles_.clear();
  triangle_edges_.assign(nt, {-1, -1, -1});
  triangle_edge_signs_.assign(nt, {0, 0, 0});
  for (std::size_t k = 0; k < inc.size();) {
    std::size_t j = k;
    while (j < inc.size() && inc[j].lo == inc[k].lo && inc[j].hi == inc[k].hi) ++j;
    const int count = static_cast<int>(j - k);
    if (count > 2) {
      throw MeshError("edge (" + std::to_string(inc[k].lo) + "," + std::to_string(inc[k].hi) +
                      ") shared by more than two triangles");
    }
    const int e = static_cast<int>(edges_.size());
    edges_.push_back({inc[k].lo, inc[k].hi});
    std::array<int, 2> adj{-1, -1};
    for (int q = 0; q < count; ++q) {
      const auto& c = inc[k + q];
      adj[q] = c.tri;
      triangle_edges_[c.tri][c.local] = e;
      // The local edge runs a -> b counterclockwise, so the outward normal is
      // (b - a) rotated clockwise, which matches the global normal iff a < b.
      const int a = local_edge(triangles_[c.tri], c.local)[0];
      triangle_edge_signs_[c.tri][c.local] = (a == c.lo) ? 1 : -1;
    }
    edge_triangles_.push_back(adj);
    k = j;
  }
}

void Mesh::apply_tags(std::span<const TaggedEdge> boundary) {
  edge_tags_.assign(edges_.size(), BoundaryTag::kInterior);
  std::vector<std::uint8_t> assigned(edges_.size(), 0);
  for (const auto& te : boundary) {
    const int lo = std::min(te.v0, te.v1);
    const int hi = std::max(te.v0, te.v1);
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), EdgeVertices{lo, hi});
    if (it == edges_.end() || (*it)[0] != lo || (*it)[1] != hi) {
      throw MeshError("tagged edge (" + std::to_string(te.v0) + "," + std::to_string(te.v1) +
                      ") is not an edge of the mesh");
    }
    const auto e = static_cast<std::size_t>(it - edges_.begin());
    if (edge_triangles_[e][1] >= 0) {
      throw MeshError("tagged edge (" + std::to_string(lo) + "," + std::to_string(hi) +
                      ") is an interior edge");
    }
    if (te.tag == BoundaryTag::kInterior) {
      throw MeshError("boundary edge cannot be tagged INTERIOR");
    }
    if (assigned[e]) {
      throw MeshError("boundary edge (" + std::to_string(lo) + "," + std::to_string(hi) +
                      ") tagged twice");
    }
    assigned[e] = 1;
    edge_tags_[e] = te.tag;
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_triangles_[e][1] < 0 && !assigned[e]) {
      throw MeshError("boundary edge (" + std::to_string(edges_[e][0]) + "," +
                      std::to_string(edges_[e][1]) + ") has no boundary tag");
    }
  }
  dirichlet_vertex_.assign(vertices_.size(), 0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_tags_[e] == BoundaryTag::kDirichlet) {
      dirichlet_vertex_[edges_[e][0]] = 1;
      dirichlet_vertex_[edges_[e][1]] = 1;
    }
  }
}

double Mesh::total_area() const {
  return std::accumulate(areas_.begin(), areas_.end(), 0.0);
}

Vec2 Mesh::centroid(int t) const {
  const auto& tri = triangles_[t];
  return (1.0 / 3.0) * (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]);
}

double Mesh::edge_length(int e) const {
  return norm(vertices_[edges_[e][1]] - vertices_[edges_[e][0]]);
}

Vec2 Mesh::edge_normal(int e) const {
  const Vec2 t = vertices_[edges_[e][1]] - vertices_[edges_[e][0]];
  const double len = norm(t);
  return {t.y / len, -t.x / len};
}

double Mesh::h_max() const {
  return std::sqrt(*std::max_element(areas_.begin(), areas_.end()));
}

double Mesh::h_min() const {
  return std::sqrt(*std::min_element(areas_.begin(), areas_.end()));
}

int Mesh::num_boundary_edges() const {
  return static_cast<int>(std::count_if(edge_tags_.begin(), edge_tags_.end(),
                                        [](BoundaryTag t) { return t != BoundaryTag::kInterior; }));
}

std::vector<TaggedEdge> Mesh::boundary_edges() const {
  std::vector<TaggedEdge> out;
  for (int e = 0; e < num_edges(); ++e) {
    if (edge_tags_[e] != BoundaryTag::kInterior) out.push_back({edges_[e][0], edges_[e][1], edge_tags_[e]});
  }
  return out;
}

void Mesh::check() const {
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    if (!(signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]) > 0.0)) {
      throw MeshError("triangle " + std::to_string(t) + " has nonpositive signed area");
    }
    for (int i = 0; i < 3; ++i) {
      const int e = triangle_edges_[t][i];
      const auto [a, b] = local_edge(tri, i);
      if (edges_[e] != EdgeVertices{std::min(a, b), std::max(a, b)}) {
        throw MeshError("triangle/edge map inconsistent at triangle " + std::to_string(t));
      }
    }
  }
  for (int e = 0; e < num_edges(); ++e) {
    const auto& adj = edge_triangles_[e];
    const bool boundary = adj[1] < 0;
    if (adj[0] < 0) throw MeshError("edge " + std::to_string(e) + " has no triangle");
    if (boundary != (edge_tags_[e] != BoundaryTag::kInterior)) {
      throw MeshError("edge " + std::to_string(e) + " tag does not match incidence count");
    }
    if (!boundary) {
      int s[2];
      for (int q = 0; q < 2; ++q) {
        const auto& te = triangle_edges_[adj[q]];
        const int local = static_cast<int>(std::find(te.begin(), te.end(), e) - te.begin());
        s[q] = triangle_edge_signs_[adj[q]][local];
      }
      if (s[0] != -s[1]) {
        throw MeshError("interior edge " + std::to_string(e) + " has equal orientation signs");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Generators

Mesh generate_unit_square(int n) {
  if (n < 1) throw std::invalid_argument("generate_unit_square: n must be >= 1");
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  const auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Triangle> tris;
  tris.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh::with_classifier(std::move(verts), std::move(tris),
                               [](Vec2, Vec2) { return BoundaryTag::kDirichlet; });
}

namespace {

constexpr std::array<Vec2, 5> kDiamond = {
    Vec2{0.0, -0.5}, Vec2{0.75, -1.25}, Vec2{2.0, 0.0}, Vec2{0.75, 1.25}, Vec2{0.0, 0.5}};
constexpr double kDiamondDiameter = 2.5;

}  // namespace

std::span<const Vec2> diamond_polygon() { return kDiamond; }

Mesh generate_diamond(double h_target) {
  if (!(h_target > 0.0)) throw std::invalid_argument("generate_diamond: h_target must be > 0");
  if (h_target > kDiamondDiameter) {
    throw std::invalid_argument("generate_diamond: h_target exceeds the domain diameter 2.5");
  }
  // Coarse fan around (0.75, 0): five triangles, h_T ratio ~1.44.
  std::vector<Vec2> verts(kDiamond.begin(), kDiamond.end());
  verts.push_back({0.75, 0.0});
  std::vector<Triangle> tris = {{0, 1, 5}, {1, 2, 5}, {2, 3, 5}, {3, 4, 5}, {4, 0, 5}};
  const Mesh coarse = Mesh::with_classifier(std::move(verts), std::move(tris), [](Vec2 a, Vec2 b) {
    return (a.x == 0.0 && b.x == 0.0) ? BoundaryTag::kDirichlet : BoundaryTag::kNeumann;
  });
  const int n = std::max(1, static_cast<int>(std::ceil(coarse.h_max() / h_target - 1e-12)));
  return subdivide_uniform(coarse, n);
}

Mesh subdivide_uniform(const Mesh& mesh, int n) {
  if (n < 1) throw std::invalid_argument("subdivide_uniform: n must be >= 1");
  if (n == 1) return mesh;

  std::vector<Vec2> verts = mesh.vertices();
  // Lattice points on coarse edges, stored from the lower to the higher vertex.
  std::vector<int> edge_first(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    edge_first[e] = static_cast<int>(verts.size());
    const Vec2 p = mesh.vertex(mesh.edge(e)[0]);
    const Vec2 q = mesh.vertex(mesh.edge(e)[1]);
    for (int s = 1; s < n; ++s) {
      const double w = static_cast<double>(s) / n;
      verts.push_back(p + w * (q - p));
    }
  }

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(mesh.num_triangles()) * n * n);
  std::vector<int> lattice(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangle(t);
    const Vec2 A = mesh.vertex(tri[0]);
    const Vec2 B = mesh.vertex(tri[1]);
    const Vec2 C = mesh.vertex(tri[2]);
    const auto& te = mesh.triangle_edges(t);
    // Local edge 2 is AB, local edge 1 is CA, local edge 0 is BC.
    const auto on_edge = [&](int local, int from, int s) {
      const int e = te[local];
      const int step = (from == mesh.edge(e)[0]) ? s : n - s;
      return edge_first[e] + step - 1;
    };
    const auto idx = [n](int a, int b) { return a * (n + 1) + b; };
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; a + b <= n; ++b) {
        int id;
        if (a == 0 && b == 0) {
          id = tri[0];
        } else if (a == n) {
          id = tri[1];
        } else if (b == n) {
          id = tri[2];
        } else if (b == 0) {
          id = on_edge(2, tri[0], a);
        } else if (a == 0) {
          id = on_edge(1, tri[0], b);
        } else if (a + b == n) {
          id = on_edge(0, tri[1], b);
        } else {
          id = static_cast<int>(verts.size());
          const double wa = static_cast<double>(a) / n;
          const double wb = static_cast<double>(b) / n;
          verts.push_back(A + wa * (B - A) + wb * (C - A));
        }
        lattice[idx(a, b)] = id;
      }
    }
    for (int a = 0; a < n; ++a) {
      for (int b = 0; a + b < n; ++b) {
        tris.push_back({lattice[idx(a, b)], lattice[idx(a + 1, b)], lattice[idx(a, b + 1)]});
        if (a + b < n - 1) {
          tris.push_back(
              {lattice[idx(a + 1, b)], lattice[idx(a + 1, b + 1)], lattice[idx(a, b + 1)]});
        }
      }
    }
  }

  std::vector<TaggedEdge> tags;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const BoundaryTag tag = mesh.edge_tag(e);
    if (tag == BoundaryTag::kInterior) continue;
    int prev = mesh.edge(e)[0];
    for (int s = 1; s <= n; ++s) {
      const int next = (s == n) ? mesh.edge(e)[1] : edge_first[e] + s - 1;
      tags.push_back({prev, next, tag});
      prev = next;
    }
  }
  return Mesh(std::move(verts), std::move(tris), tags);
}

Mesh refine_uniform(const Mesh& mesh) { return subdivide_uniform(mesh, 2); }

}  // namespace netmorph
