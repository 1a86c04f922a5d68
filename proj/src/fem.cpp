#include "netmorph/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace netmorph {

double CellCoefficient::min_value(int num_cells) const {
  if (per_cell_.empty()) return constant_;
  if (static_cast<int>(per_cell_.size()) != num_cells) {
    throw std::invalid_argument("per-cell coefficient has " + std::to_string(per_cell_.size()) +
                                " values for " + std::to_string(num_cells) + " triangles");
  }
  return *std::min_element(per_cell_.begin(), per_cell_.end());
}

namespace {

// Midpoint of the edge opposite local vertex k.
Vec2 edge_midpoint(const Mesh& mesh, int t, int k) {
  const auto& tri = mesh.triangle(t);
  return 0.5 * (mesh.vertex(tri[(k + 1) % 3]) + mesh.vertex(tri[(k + 2) % 3]));
}

}  // namespace

std::array<double, 3> SourceTerm::load(const Mesh& mesh, int t) const {
  const double a = mesh.area(t);
  if (const double* c = std::get_if<double>(&data_)) {
    const double v = *c * a / 3.0;
    return {v, v, v};
  }
  if (const auto* cells = std::get_if<std::vector<double>>(&data_)) {
    const double v = (*cells)[t] * a / 3.0;
    return {v, v, v};
  }
  const Fn& f = std::get<Fn>(data_);
  const double s[3] = {f(edge_midpoint(mesh, t, 0)), f(edge_midpoint(mesh, t, 1)),
                       f(edge_midpoint(mesh, t, 2))};
  // φ_i is 1/2 at the two midpoints adjacent to vertex i and 0 at the third.
  return {a / 6.0 * (s[1] + s[2]), a / 6.0 * (s[0] + s[2]), a / 6.0 * (s[0] + s[1])};
}

double SourceTerm::integral(const Mesh& mesh, int t) const {
  const auto l = load(mesh, t);
  return l[0] + l[1] + l[2];
}

std::optional<double> SourceTerm::constant_value() const {
  if (const double* v = std::get_if<double>(&data_)) return *v;
  return std::nullopt;
}

bool SourceTerm::is_zero() const {
  if (const double* c = std::get_if<double>(&data_)) return *c == 0.0;
  if (const auto* cells = std::get_if<std::vector<double>>(&data_)) {
    return std::all_of(cells->begin(), cells->end(), [](double v) { return v == 0.0; });
  }
  return false;
}

P1Space::P1Space(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  grads_.resize(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    const double inv2a = 1.0 / (2.0 * m.area(t));
    for (int i = 0; i < 3; ++i) {
      const Vec2 p1 = m.vertex(tri[(i + 1) % 3]);
      const Vec2 p2 = m.vertex(tri[(i + 2) % 3]);
      grads_[t][i] = {(p1.y - p2.y) * inv2a, (p2.x - p1.x) * inv2a};
    }
  }
  dirichlet_.resize(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) dirichlet_[v] = m.is_dirichlet_vertex(v) ? 1 : 0;

  TripletBuilder b(m.num_vertices());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) b.add(tri[i], tri[j], 0.0);
    }
  }
  pattern_ = b.build();
  scatter_.resize(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const int* first = pattern_.cols.data() + pattern_.row_ptr[tri[i]];
      const int* last = pattern_.cols.data() + pattern_.row_ptr[tri[i] + 1];
      for (int j = 0; j < 3; ++j) {
        scatter_[t][3 * i + j] = static_cast<std::size_t>(std::lower_bound(first, last, tri[j]) - pattern_.cols.data());
      }
    }
  }
}

CsrMatrix P1Space::stiffness(const std::function<std::array<double, 3>(int)>& tensor) const {
  const Mesh& m = *mesh_;
  CsrMatrix out = pattern_;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto k = tensor(t);
    const auto& g = grads_[t];
    const double a = m.area(t);
    for (int i = 0; i < 3; ++i) {
      const Vec2 kg{k[0] * g[i].x + k[1] * g[i].y, k[1] * g[i].x + k[2] * g[i].y};
      for (int j = 0; j < 3; ++j) out.vals[scatter_[t][3 * i + j]] += a * dot(kg, g[j]);
    }
  }
  return out;
}

CsrMatrix P1Space::mass() const {
  const Mesh& m = *mesh_;
  CsrMatrix out = pattern_;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const double a = m.area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out.vals[scatter_[t][3 * i + j]] += a * (i == j ? 1.0 / 6.0 : 1.0 / 12.0);
    }
  }
  return out;
}

SparseSystem assemble_pressure_system(const P1Space& space, const VectorFieldP0& m,
                                      const CellCoefficient& r, const SourceTerm& source) {
  const Mesh& mesh = space.mesh();
  const int nt = mesh.num_triangles();
  if (static_cast<int>(m.size()) != nt) {
    throw std::invalid_argument("assemble_pressure_system: conductance has wrong length");
  }
  if (!(r.min_value(nt) > 0.0)) {
    throw std::invalid_argument("assemble_pressure_system: background permeability r must be > 0");
  }
  SparseSystem sys;
  sys.matrix = space.stiffness([&](int t) {
    const Vec2 mt = m[t];
    const double rt = r(t);
    return std::array<double, 3>{rt + mt.x * mt.x, mt.x * mt.y, rt + mt.y * mt.y};
  });
  sys.rhs.assign(mesh.num_vertices(), 0.0);
  for (int t = 0; t < nt; ++t) {
    const auto l = source.load(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) sys.rhs[tri[i]] += l[i];
  }
  sys.constrained = space.dirichlet_mask();
  sys.apply_constraints();
  return sys;
}

ScalarFieldP1 solve_pressure(const P1Space& space, const VectorFieldP0& m, const CellCoefficient& r,
                             const SourceTerm& source, const SolveOptions& opts) {
  return solve_spd(assemble_pressure_system(space, m, r, source), opts);
}

ScalarFieldP1 PressureSolver::solve(const VectorFieldP0& m, const CellCoefficient& r, const SourceTerm& source,
                                    double tol) {
  const SparseSystem sys = assemble_pressure_system(*space_, m, r, source);
  if (factor_) {
    factor_->refactor(sys.matrix);
  } else {
    factor_.emplace(sys.matrix);
  }
  const auto free_norm = [&](const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!sys.is_constrained(static_cast<int>(i))) acc += v[i] * v[i];
    }
    return std::sqrt(acc);
  };
  const double bnorm = free_norm(sys.rhs);
  std::vector<double> x(sys.rhs.size(), 0.0);
  if (bnorm == 0.0) return x;
  x = factor_->solve(sys.rhs);
  std::vector<double> res;
  double rel = 0.0;
  for (int pass = 0;; ++pass) {
    sys.matrix.multiply(x, res);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = sys.rhs[i] - res[i];
    rel = free_norm(res) / bnorm;
    if (rel <= tol) break;
    if (pass == 2) throw SolverError("pressure solve: residual " + std::to_string(rel) + " above tolerance", rel, pass + 1);
    const std::vector<double> dx = factor_->solve(res);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sys.is_constrained(static_cast<int>(i))) x[i] = 0.0;
  }
  return x;
}

VectorFieldP0 gradient_per_triangle(const P1Space& space, const ScalarFieldP1& p) {
  const Mesh& mesh = space.mesh();
  VectorFieldP0 g(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto& gr = space.basis_gradients(t);
    g[t] = p[tri[0]] * gr[0] + p[tri[1]] * gr[1] + p[tri[2]] * gr[2];
  }
  return g;
}

VectorFieldP0 velocity(const VectorFieldP0& m, const VectorFieldP0& grad_p, const CellCoefficient& r) {
  VectorFieldP0 u(m.size());
  for (std::size_t t = 0; t < m.size(); ++t) {
    u[t] = r(static_cast<int>(t)) * grad_p[t] + dot(m[t], grad_p[t]) * m[t];
  }
  return u;
}

VectorFieldP0 l2_project_p0(const Mesh& mesh, const std::function<Vec2(Vec2)>& f, int n) {
  if (n < 1) throw std::invalid_argument("l2_project_p0: n must be >= 1");
  VectorFieldP0 out(mesh.num_triangles());
  const double inv = 1.0 / n;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const Vec2 A = mesh.vertex(tri[0]);
    const Vec2 e1 = mesh.vertex(tri[1]) - A;
    const Vec2 e2 = mesh.vertex(tri[2]) - A;
    const auto pt = [&](double a, double b) { return A + (a * inv) * e1 + (b * inv) * e2; };
    Vec2 sum;
    int count = 0;
    const auto sub = [&](Vec2 p, Vec2 q, Vec2 r) {
      sum += f(0.5 * (p + q));
      sum += f(0.5 * (q + r));
      sum += f(0.5 * (r + p));
      count += 3;
    };
    for (int a = 0; a < n; ++a) {
      for (int b = 0; a + b < n; ++b) {
        sub(pt(a, b), pt(a + 1, b), pt(a, b + 1));
        if (a + b < n - 1) sub(pt(a + 1, b), pt(a + 1, b + 1), pt(a, b + 1));
      }
    }
    out[t] = (1.0 / count) * sum;
  }
  return out;
}

namespace {

using Polygon = std::vector<Vec2>;

// Keeps the part of `poly` where s*(coord - bound) <= 0.
Polygon clip(const Polygon& poly, bool use_x, double bound, double s) {
  Polygon out;
  const auto val = [&](Vec2 p) { return s * ((use_x ? p.x : p.y) - bound); };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    const double fa = val(a);
    const double fb = val(b);
    if (fa <= 0.0) out.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      const double w = fa / (fa - fb);
      out.push_back(a + w * (b - a));
    }
  }
  return out;
}

double polygon_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

}  // namespace

std::vector<double> box_area_fraction(const Mesh& mesh, Vec2 lo, Vec2 hi) {
  std::vector<double> frac(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    Polygon poly{mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2])};
    if (std::isfinite(hi.x)) poly = clip(poly, true, hi.x, 1.0);
    if (std::isfinite(lo.x)) poly = clip(poly, true, lo.x, -1.0);
    if (std::isfinite(hi.y)) poly = clip(poly, false, hi.y, 1.0);
    if (std::isfinite(lo.y)) poly = clip(poly, false, lo.y, -1.0);
    const double a = poly.size() < 3 ? 0.0 : polygon_area(poly);
    frac[t] = std::clamp(a / mesh.area(t), 0.0, 1.0);
  }
  return frac;
}

double l2_norm(const Mesh& mesh, const VectorFieldP0& v) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) s += mesh.area(t) * norm2(v[t]);
  return std::sqrt(s);
}

double l1_norm(const Mesh& mesh, const VectorFieldP0& v) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) s += mesh.area(t) * norm(v[t]);
  return s;
}

double l2_norm(const Mesh& mesh, const std::vector<double>& cell_values) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) s += mesh.area(t) * cell_values[t] * cell_values[t];
  return std::sqrt(s);
}

double h1_seminorm(const P1Space& space, const ScalarFieldP1& p) {
  return l2_norm(space.mesh(), gradient_per_triangle(space, p));
}

std::array<QuadPoint, 7> quadrature7(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  const Vec2 P[3] = {mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2])};
  const double area = mesh.area(t);
  const double s15 = std::sqrt(15.0);
  const double a1 = (6.0 - s15) / 21.0, b1 = (9.0 + 2.0 * s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
  const double a2 = (6.0 + s15) / 21.0, b2 = (9.0 - 2.0 * s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
  const auto bary = [&](double l0, double l1, double l2) { return l0 * P[0] + l1 * P[1] + l2 * P[2]; };
  return {{{bary(1.0 / 3, 1.0 / 3, 1.0 / 3), area * 9.0 / 40.0},
           {bary(b1, a1, a1), area * w1},
           {bary(a1, b1, a1), area * w1},
           {bary(a1, a1, b1), area * w1},
           {bary(b2, a2, a2), area * w2},
           {bary(a2, b2, a2), area * w2},
           {bary(a2, a2, b2), area * w2}}};
}

double integrate(const Mesh& mesh, const std::function<double(Vec2)>& f) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (const auto& q : quadrature7(mesh, t)) s += q.w * f(q.x);
  }
  return s;
}

double p1_l2_error(const P1Space& space, const ScalarFieldP1& p, const std::function<double(Vec2)>& f) {
  const Mesh& mesh = space.mesh();
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const Vec2 x0 = mesh.vertex(tri[0]);
    const auto& g = space.basis_gradients(t);
    for (const auto& q : quadrature7(mesh, t)) {
      // p_h is affine: p(x0) + ∇p_h·(x − x0).
      const Vec2 gp = p[tri[0]] * g[0] + p[tri[1]] * g[1] + p[tri[2]] * g[2];
      const double ph = p[tri[0]] + dot(gp, q.x - x0);
      const double d = ph - f(q.x);
      s += q.w * d * d;
    }
  }
  return std::sqrt(s);
}

double p1_h1_error(const P1Space& space, const ScalarFieldP1& p, const std::function<Vec2(Vec2)>& g) {
  const Mesh& mesh = space.mesh();
  const VectorFieldP0 gp = gradient_per_triangle(space, p);
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (const auto& q : quadrature7(mesh, t)) s += q.w * norm2(gp[t] - g(q.x));
  }
  return std::sqrt(s);
}

}  // namespace netmorph
