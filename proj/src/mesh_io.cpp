#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "netmorph/mesh.hpp"

namespace netmorph {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int read_header(std::istream& in, const char* key) {
  std::string line;
  if (!std::getline(in, line)) throw MeshError(std::string("mesh file: missing '") + key + "' header");
  std::istringstream ls(line);
  std::string word;
  long long n = -1;
  if (!(ls >> word >> n) || word != key || n < 0) {
    throw MeshError(std::string("mesh file: expected '") + key + " <count>', got '" + line + "'");
  }
  return static_cast<int>(n);
}

}  // namespace

void write_mesh(const Mesh& mesh, std::ostream& out) {
  const auto boundary = mesh.boundary_edges();
  out << "vertices " << mesh.num_vertices() << '\n';
  out << "triangles " << mesh.num_triangles() << '\n';
  out << "boundary " << boundary.size() << '\n';
  for (const Vec2& v : mesh.vertices()) out << fmt17(v.x) << ' ' << fmt17(v.y) << '\n';
  for (const Triangle& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const TaggedEdge& e : boundary) {
    out << "edge " << e.v0 << ' ' << e.v1 << ' ' << to_string(e.tag) << '\n';
  }
}

Mesh read_mesh(std::istream& in) {
  const int nv = read_header(in, "vertices");
  const int nt = read_header(in, "triangles");
  const int nb = read_header(in, "boundary");
  std::vector<Vec2> verts(nv);
  for (int i = 0; i < nv; ++i) {
    if (!(in >> verts[i].x >> verts[i].y)) {
      throw MeshError("mesh file: bad coordinate row " + std::to_string(i));
    }
  }
  std::vector<Triangle> tris(nt);
  for (int i = 0; i < nt; ++i) {
    if (!(in >> tris[i][0] >> tris[i][1] >> tris[i][2])) {
      throw MeshError("mesh file: bad triangle row " + std::to_string(i));
    }
  }
  std::vector<TaggedEdge> tags(nb);
  for (int i = 0; i < nb; ++i) {
    std::string kw, tag;
    if (!(in >> kw >> tags[i].v0 >> tags[i].v1 >> tag) || kw != "edge") {
      throw MeshError("mesh file: bad edge row " + std::to_string(i));
    }
    tags[i].tag = boundary_tag_from_string(tag);
  }
  return Mesh(std::move(verts), std::move(tris), tags);
}

}  // namespace netmorph
