#include "netmorph/snapshot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace netmorph {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Snapshot make_snapshot(const Mesh& mesh, const ScalarFieldP1& p, const VectorFieldP0& m,
                       const VectorFieldP0& u, std::string title) {
  const auto nt = static_cast<std::size_t>(mesh.num_triangles());
  if (p.size() != static_cast<std::size_t>(mesh.num_vertices()) || m.size() != nt || u.size() != nt) {
    throw std::invalid_argument("make_snapshot: field sizes do not match the mesh");
  }
  Snapshot s;
  s.title = std::move(title);
  s.points = mesh.vertices();
  s.cells = mesh.triangles();
  s.p = p;
  s.m = m;
  s.u_abs.resize(nt);
  s.log_u_abs.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    s.u_abs[t] = norm(u[t]);
    s.log_u_abs[t] = s.u_abs[t] > 0.0 ? std::log10(s.u_abs[t]) : 0.0;
  }
  return s;
}

Snapshot make_snapshot(const Mesh& mesh, const StepState& state, const CellCoefficient& r) {
  return make_snapshot(mesh, state.p, state.m, velocity(state.m, state.grad_p, r),
                       "netmorph k=" + std::to_string(state.k) + " t=" + format_double(state.t));
}

void write_vtk(const Snapshot& s, std::ostream& out) {
  const std::size_t np = s.points.size();
  const std::size_t nc = s.cells.size();
  out << "# vtk DataFile Version 3.0\n" << s.title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (const Vec2& v : s.points) out << format_double(v.x) << ' ' << format_double(v.y) << " 0\n";
  out << "CELLS " << nc << ' ' << 4 * nc << '\n';
  for (const Triangle& t : s.cells) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t i = 0; i < nc; ++i) out << "5\n";
  out << "POINT_DATA " << np << "\nSCALARS p double 1\nLOOKUP_TABLE default\n";
  for (double v : s.p) out << format_double(v) << '\n';
  out << "CELL_DATA " << nc << "\nVECTORS m double\n";
  for (const Vec2& v : s.m) out << format_double(v.x) << ' ' << format_double(v.y) << " 0\n";
  out << "SCALARS u_abs double 1\nLOOKUP_TABLE default\n";
  for (double v : s.u_abs) out << format_double(v) << '\n';
  out << "SCALARS log10_u_abs double 1\nLOOKUP_TABLE default\n";
  for (double v : s.log_u_abs) out << format_double(v) << '\n';
}

void write_vtk(const Snapshot& snap, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_vtk(snap, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

struct Reader {
  std::istream& in;

  std::string line() {
    std::string l;
    if (!std::getline(in, l)) throw std::runtime_error("read_vtk: unexpected end of file");
    return l;
  }
  void expect(const std::string& want) {
    const std::string got = line();
    if (got != want) throw std::runtime_error("read_vtk: expected '" + want + "', got '" + got + "'");
  }
  std::size_t header(const std::string& keyword) {
    std::istringstream ss(line());
    std::string kw;
    std::size_t n = 0;
    if (!(ss >> kw >> n) || kw != keyword) throw std::runtime_error("read_vtk: expected " + keyword);
    return n;
  }
  double number(std::istringstream& ss) {
    std::string tok;
    if (!(ss >> tok)) throw std::runtime_error("read_vtk: missing value");
    if (tok == "nan") return std::nan("");
    if (tok == "inf") return HUGE_VAL;
    if (tok == "-inf") return -HUGE_VAL;
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::runtime_error("read_vtk: bad number '" + tok + "'");
    return v;
  }
  std::vector<double> scalars(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) {
      std::istringstream ss(line());
      x = number(ss);
    }
    return v;
  }
  std::vector<Vec2> vectors(std::size_t n) {
    std::vector<Vec2> v(n);
    for (auto& x : v) {
      std::istringstream ss(line());
      x.x = number(ss);
      x.y = number(ss);
      number(ss);
    }
    return v;
  }
};

}  // namespace

Snapshot read_vtk(std::istream& in) {
  Reader r{in};
  Snapshot s;
  r.expect("# vtk DataFile Version 3.0");
  s.title = r.line();
  r.expect("ASCII");
  r.expect("DATASET UNSTRUCTURED_GRID");
  {
    std::istringstream ss(r.line());
    std::string kw, type;
    std::size_t n = 0;
    if (!(ss >> kw >> n >> type) || kw != "POINTS") throw std::runtime_error("read_vtk: expected POINTS");
    s.points = r.vectors(n);
  }
  const std::size_t nc = r.header("CELLS");
  s.cells.resize(nc);
  for (auto& t : s.cells) {
    std::istringstream ss(r.line());
    int k = 0;
    if (!(ss >> k >> t[0] >> t[1] >> t[2]) || k != 3) throw std::runtime_error("read_vtk: bad cell");
  }
  if (r.header("CELL_TYPES") != nc) throw std::runtime_error("read_vtk: CELL_TYPES count");
  for (std::size_t i = 0; i < nc; ++i) {
    if (r.line() != "5") throw std::runtime_error("read_vtk: only triangles are supported");
  }
  if (r.header("POINT_DATA") != s.points.size()) throw std::runtime_error("read_vtk: POINT_DATA count");
  r.expect("SCALARS p double 1");
  r.expect("LOOKUP_TABLE default");
  s.p = r.scalars(s.points.size());
  if (r.header("CELL_DATA") != nc) throw std::runtime_error("read_vtk: CELL_DATA count");
  r.expect("VECTORS m double");
  s.m = r.vectors(nc);
  r.expect("SCALARS u_abs double 1");
  r.expect("LOOKUP_TABLE default");
  s.u_abs = r.scalars(nc);
  r.expect("SCALARS log10_u_abs double 1");
  r.expect("LOOKUP_TABLE default");
  s.log_u_abs = r.scalars(nc);
  return s;
}

void write_diagnostics_csv(const std::vector<Diagnostics>& rows, std::ostream& out) {
  out << "k,t,dt,E_h,E_ht,m_ht,s_k,grad_inf,min_abs_m\n";
  for (const Diagnostics& d : rows) {
    out << d.k << ',' << format_double(d.t) << ',' << format_double(d.dt) << ',' << format_double(d.E_h) << ','
        << format_double(d.E_ht) << ',' << format_double(d.m_ht) << ',' << format_double(d.s_k) << ','
        << format_double(d.grad_inf) << ',' << format_double(d.min_abs_m) << '\n';
  }
}

void write_profile_csv(const std::vector<double>& x, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& profiles, std::ostream& out) {
  if (times.size() != profiles.size()) throw std::invalid_argument("write_profile_csv: size mismatch");
  out << "t,x,m\n";
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (profiles[j].size() != x.size()) throw std::invalid_argument("write_profile_csv: profile size");
    for (std::size_t i = 0; i < x.size(); ++i) {
      out << format_double(times[j]) << ',' << format_double(x[i]) << ',' << format_double(profiles[j][i]) << '\n';
    }
  }
}

}  // namespace netmorph
