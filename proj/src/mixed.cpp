#include "netmorph/mixed.hpp"

#include <cmath>
#include <stdexcept>

namespace netmorph {

RT0Space::RT0Space(std::shared_ptr<const Mesh> mesh, ConductanceBC bc) : mesh_(std::move(mesh)), bc_(bc) {
  const Mesh& m = *mesh_;
  local_mass_.resize(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    Vec2 mid[3];
    for (int k = 0; k < 3; ++k) {
      mid[k] = 0.5 * (m.vertex(tri[(k + 1) % 3]) + m.vertex(tri[(k + 2) % 3]));
    }
    // The integrand is quadratic, so the edge-midpoint rule is exact.
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int q = 0; q < 3; ++q) s += dot(basis_value(t, i, mid[q]), basis_value(t, j, mid[q]));
        local_mass_[t][3 * i + j] = s * m.area(t) / 3.0;
      }
    }
  }
  constrained_.assign(m.num_edges(), 0);
  if (bc_ == ConductanceBC::kNeumann) {
    for (int e = 0; e < m.num_edges(); ++e) constrained_[e] = m.is_boundary_edge(e) ? 1 : 0;
  }
}

Vec2 RT0Space::basis_value(int t, int i, Vec2 x) const {
  const Mesh& m = *mesh_;
  const double s = m.triangle_edge_signs(t)[i];
  return (s / (2.0 * m.area(t))) * (x - m.vertex(m.triangle(t)[i]));
}

CsrMatrix RT0Space::mass() const {
  const Mesh& m = *mesh_;
  TripletBuilder b(m.num_edges());
  b.reserve(9 * static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& te = m.triangle_edges(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) b.add(te[i], te[j], local_mass_[t][3 * i + j]);
    }
  }
  return b.build();
}

double RT0Space::mass_norm2(const std::vector<double>& sigma) const {
  const Mesh& m = *mesh_;
  double s = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& te = m.triangle_edges(t);
    const double v[3] = {sigma[te[0]], sigma[te[1]], sigma[te[2]]};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) s += v[i] * local_mass_[t][3 * i + j] * v[j];
    }
  }
  return s;
}

SparseSystem assemble_mixed_operator(const RT0Space& space, double D, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("assemble_mixed_operator: time step must be > 0");
  if (!(D >= 0.0)) throw std::invalid_argument("assemble_mixed_operator: D must be >= 0");
  const Mesh& m = space.mesh();
  const double k = delta * D * D;
  TripletBuilder b(m.num_edges());
  b.reserve(18 * static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    const auto& lm = space.local_mass(t);
    const double w = k / m.area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) b.add(te[i], te[j], lm[3 * i + j] + w * sg[i] * sg[j]);
    }
  }
  SparseSystem sys;
  sys.matrix = b.build();
  sys.rhs.assign(m.num_edges(), 0.0);
  sys.constrained.resize(m.num_edges());
  for (int e = 0; e < m.num_edges(); ++e) sys.constrained[e] = space.is_constrained(e) ? 1 : 0;
  sys.apply_constraints();
  return sys;
}

void MixedDiffusionSolver::prepare(double D, double delta) {
  if (factor_ && D == cached_D_ && delta == cached_delta_) return;
  SparseSystem sys = assemble_mixed_operator(*space_, D, delta);
  factor_.emplace(sys.matrix);
  constrained_ = std::move(sys.constrained);
  cached_D_ = D;
  cached_delta_ = delta;
}

VectorFieldP0 MixedDiffusionSolver::solve(const VectorFieldP0& g, double D, double delta,
                                          FluxFieldRT0& sigma) {
  const Mesh& m = space_->mesh();
  const int nt = m.num_triangles();
  const int ne = m.num_edges();
  if (static_cast<int>(g.size()) != nt) throw std::invalid_argument("MixedDiffusionSolver: bad input length");
  if (!(delta > 0.0)) throw std::invalid_argument("MixedDiffusionSolver: time step must be > 0");
  if (D == 0.0) {
    sigma = FluxFieldRT0::zeros(ne);
    return g;
  }
  prepare(D, delta);
  std::vector<double> b1(ne, 0.0), b2(ne, 0.0);
  for (int t = 0; t < nt; ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    for (int i = 0; i < 3; ++i) {
      b1[te[i]] -= sg[i] * g[t].x;
      b2[te[i]] -= sg[i] * g[t].y;
    }
  }
  for (int e = 0; e < ne; ++e) {
    if (constrained_[e]) b1[e] = b2[e] = 0.0;
  }
  sigma.s1 = factor_->solve(b1);
  sigma.s2 = factor_->solve(b2);
  for (int e = 0; e < ne; ++e) {
    if (constrained_[e]) sigma.s1[e] = sigma.s2[e] = 0.0;
  }
  const double k = delta * D * D;
  VectorFieldP0 out(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    Vec2 div;
    for (int i = 0; i < 3; ++i) {
      div.x += sg[i] * sigma.s1[te[i]];
      div.y += sg[i] * sigma.s2[te[i]];
    }
    out[t] = g[t] + (k / m.area(t)) * div;
  }
  return out;
}

std::vector<double> MixedDiffusionSolver::apply_m_schur(const std::vector<double>& x, double D,
                                                        double delta) {
  const Mesh& m = space_->mesh();
  const int nt = m.num_triangles();
  const int ne = m.num_edges();
  std::vector<double> out(nt);
  for (int t = 0; t < nt; ++t) out[t] = m.area(t) * x[t];
  if (D == 0.0) return out;
  // M_σ restricted to free edges, factored on each call (tests only).
  SparseSystem ms;
  ms.matrix = space_->mass();
  ms.rhs.assign(ne, 0.0);
  ms.constrained.resize(ne);
  for (int e = 0; e < ne; ++e) ms.constrained[e] = space_->is_constrained(e) ? 1 : 0;
  ms.apply_constraints();
  std::vector<double> btx(ne, 0.0);
  for (int t = 0; t < nt; ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    for (int i = 0; i < 3; ++i) btx[te[i]] += sg[i] * x[t];
  }
  for (int e = 0; e < ne; ++e) {
    if (ms.constrained[e]) btx[e] = 0.0;
  }
  std::vector<double> y = CholeskyFactor(ms.matrix).solve(btx);
  for (int t = 0; t < nt; ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (!ms.constrained[te[i]]) s += sg[i] * y[te[i]];
    }
    out[t] += delta * D * D * s;
  }
  return out;
}

FluxFieldRT0 MixedDiffusionSolver::discrete_gradient(const VectorFieldP0& mfield) {
  const Mesh& m = space_->mesh();
  const int ne = m.num_edges();
  std::vector<std::uint8_t> fixed(ne);
  for (int e = 0; e < ne; ++e) fixed[e] = space_->is_constrained(e) ? 1 : 0;
  if (!mass_factor_) {
    SparseSystem ms;
    ms.matrix = space_->mass();
    ms.rhs.assign(ne, 0.0);
    ms.constrained = fixed;
    ms.apply_constraints();
    mass_factor_.emplace(ms.matrix);
  }
  std::vector<double> b1(ne, 0.0), b2(ne, 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    for (int i = 0; i < 3; ++i) {
      b1[te[i]] -= sg[i] * mfield[t].x;
      b2[te[i]] -= sg[i] * mfield[t].y;
    }
  }
  for (int e = 0; e < ne; ++e) {
    if (fixed[e]) b1[e] = b2[e] = 0.0;
  }
  FluxFieldRT0 out{mass_factor_->solve(b1), mass_factor_->solve(b2)};
  for (int e = 0; e < ne; ++e) {
    if (fixed[e]) out.s1[e] = out.s2[e] = 0.0;
  }
  return out;
}

std::vector<double> MixedDiffusionSolver::flux_residual(const std::vector<double>& m_component,
                                                        const std::vector<double>& sigma) const {
  const Mesh& m = space_->mesh();
  std::vector<double> r;
  space_->mass().multiply(sigma, r);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& te = m.triangle_edges(t);
    const auto& sg = m.triangle_edge_signs(t);
    for (int i = 0; i < 3; ++i) r[te[i]] += sg[i] * m_component[t];
  }
  for (int e = 0; e < m.num_edges(); ++e) {
    if (space_->is_constrained(e)) r[e] = 0.0;
  }
  return r;
}

}  // namespace netmorph
