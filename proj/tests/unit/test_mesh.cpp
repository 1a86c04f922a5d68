#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "netmorph/mesh.hpp"

using namespace netmorph;

namespace {

double shoelace(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

double tagged_length(const Mesh& m, BoundaryTag tag) {
  double len = 0.0;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.edge_tag(e) == tag) len += m.edge_length(e);
  }
  return len;
}

// Signs must say whether the global normal leaves the triangle.
void check_orientation(const Mesh& m) {
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Vec2 c = m.centroid(t);
    for (int i = 0; i < 3; ++i) {
      const int e = m.triangle_edges(t)[i];
      const auto& ev = m.edge(e);
      const Vec2 mid = 0.5 * (m.vertex(ev[0]) + m.vertex(ev[1]));
      const double out = dot(m.edge_normal(e), mid - c);
      CHECK((out > 0.0) == (m.triangle_edge_signs(t)[i] > 0));
    }
  }
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("unit square counts, area and tags") {
    for (int n : {1, 2, 5, 8}) {
      const Mesh m = generate_unit_square(n);
      CHECK(m.num_triangles() == 2 * n * n);
      CHECK(m.num_vertices() == (n + 1) * (n + 1));
      CHECK(m.num_edges() == 3 * n * n + 2 * n);
      CHECK(m.num_boundary_edges() == 4 * n);
      CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(tagged_length(m, BoundaryTag::kDirichlet) == doctest::Approx(4.0).epsilon(1e-14));
      CHECK(tagged_length(m, BoundaryTag::kNeumann) == 0.0);
      CHECK_NOTHROW(m.check());
      check_orientation(m);
    }
  }

  TEST_CASE("Euler characteristic of generated and refined meshes") {
    std::vector<Mesh> meshes;
    meshes.push_back(generate_unit_square(3));
    meshes.push_back(generate_diamond(0.3));
    meshes.push_back(refine_uniform(generate_diamond(0.5)));
    meshes.push_back(subdivide_uniform(generate_unit_square(2), 3));
    for (const Mesh& m : meshes) {
      CHECK(m.num_vertices() - m.num_edges() + m.num_triangles() == 1);
      for (int e = 0; e < m.num_edges(); ++e) {
        const auto& adj = m.edge_triangles(e);
        CHECK((adj[1] < 0) == m.is_boundary_edge(e));
        if (adj[1] >= 0) {
          // opposite signs from the two sides
          int s0 = 0, s1 = 0;
          for (int i = 0; i < 3; ++i) {
            if (m.triangle_edges(adj[0])[i] == e) s0 = m.triangle_edge_signs(adj[0])[i];
            if (m.triangle_edges(adj[1])[i] == e) s1 = m.triangle_edge_signs(adj[1])[i];
          }
          CHECK(s0 * s1 == -1);
        }
      }
    }
  }

  TEST_CASE("diamond polygon area and boundary split") {
    const std::vector<Vec2> corners = {{0, -0.5}, {0.75, -1.25}, {2, 0}, {0.75, 1.25}, {0, 0.5}};
    const auto poly = diamond_polygon();
    REQUIRE(poly.size() == corners.size());
    for (std::size_t i = 0; i < corners.size(); ++i) CHECK(poly[i] == corners[i]);

    const double area = shoelace(corners);
    double perimeter = 0.0;
    for (std::size_t i = 0; i < corners.size(); ++i) perimeter += norm(corners[(i + 1) % corners.size()] - corners[i]);

    for (double h : {0.8, 0.25, 0.1}) {
      const Mesh m = generate_diamond(h);
      CHECK_NOTHROW(m.check());
      CHECK(m.total_area() == doctest::Approx(area).epsilon(1e-13));
      CHECK(tagged_length(m, BoundaryTag::kDirichlet) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(tagged_length(m, BoundaryTag::kNeumann) == doctest::Approx(perimeter - 1.0).epsilon(1e-13));
      CHECK(m.h_max() <= h);
      CHECK(m.h_max() > 0.5 * h);
      for (int e = 0; e < m.num_edges(); ++e) {
        if (m.edge_tag(e) != BoundaryTag::kDirichlet) continue;
        CHECK(m.vertex(m.edge(e)[0]).x == 0.0);
        CHECK(m.vertex(m.edge(e)[1]).x == 0.0);
      }
      check_orientation(m);
    }
  }

  TEST_CASE("red refinement quadruples triangles and halves h") {
    const Mesh coarse = generate_diamond(0.4);
    const Mesh fine = refine_uniform(coarse);
    CHECK(fine.num_triangles() == 4 * coarse.num_triangles());
    CHECK(fine.num_vertices() == coarse.num_vertices() + coarse.num_edges());
    CHECK(fine.total_area() == doctest::Approx(coarse.total_area()).epsilon(1e-14));
    CHECK(fine.h_max() == doctest::Approx(0.5 * coarse.h_max()).epsilon(1e-12));
    CHECK(tagged_length(fine, BoundaryTag::kDirichlet) ==
          doctest::Approx(tagged_length(coarse, BoundaryTag::kDirichlet)).epsilon(1e-14));
    for (int v = 0; v < coarse.num_vertices(); ++v) CHECK(fine.vertex(v) == coarse.vertex(v));
    CHECK_THROWS_AS(subdivide_uniform(coarse, 0), std::invalid_argument);
  }

  TEST_CASE("text format round trip is byte stable") {
    const Mesh m = refine_uniform(generate_diamond(0.5));
    std::ostringstream a;
    write_mesh(m, a);
    std::istringstream in(a.str());
    const Mesh back = read_mesh(in);
    std::ostringstream b;
    write_mesh(back, b);
    CHECK(a.str() == b.str());
    CHECK(back.num_edges() == m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e) CHECK(back.edge_tag(e) == m.edge_tag(e));
  }

  TEST_CASE("invalid input is rejected") {
    const std::vector<Vec2> v = {{0, 0}, {1, 0}, {0, 1}};
    const std::vector<TaggedEdge> all = {{0, 1, BoundaryTag::kDirichlet},
                                         {1, 2, BoundaryTag::kNeumann},
                                         {0, 2, BoundaryTag::kNeumann}};
    CHECK_NOTHROW(Mesh(v, {{0, 1, 2}}, all));
    // clockwise
    CHECK_THROWS_AS(Mesh(v, {{0, 2, 1}}, all), MeshError);
    // missing boundary tag
    CHECK_THROWS_AS(Mesh(v, {{0, 1, 2}}, std::span(all).first(2)), MeshError);
    // out-of-range vertex
    CHECK_THROWS_AS(Mesh(v, {{0, 1, 3}}, all), MeshError);
    std::istringstream junk("vertices 3\n0 0\n1 zero\n");
    CHECK_THROWS_AS(read_mesh(junk), MeshError);
    CHECK_THROWS_AS(boundary_tag_from_string("ROBIN"), MeshError);
    CHECK_THROWS_AS(generate_diamond(-1.0), std::invalid_argument);
  }
}
