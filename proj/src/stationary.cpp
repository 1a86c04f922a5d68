#include "netmorph/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "netmorph/log.hpp"

namespace netmorph {

// ---------------------------------------------------------------------------
// Roots

namespace {

// Bisection in log z for G(ln z) = 0 where G changes sign on [lo, hi].
double bisect_log(const std::function<double(double)>& G, double lo, double hi) {
  double glo = G(lo);
  for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = G(mid);
    if (gm == 0.0) return std::exp(mid);
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

RootSet solve_z(double u_norm, double gamma, double c) {
  if (gamma < 0.5) throw std::invalid_argument("solve_z: gamma must be >= 1/2");
  if (!(u_norm >= 0.0) || !(c > 0.0)) throw std::invalid_argument("solve_z: need |u| >= 0 and c > 0");
  RootSet rs;
  const double rhs = c * u_norm;
  if (!(rhs > 0.0)) return rs;
  const double lr = std::log(rhs);
  // G(y) = ln g(e^y) − ln(c|u|), g(z) = z^{γ−1}(1 + z²).
  const auto G = [&](double y) { return (gamma - 1.0) * y + std::log1p(std::exp(2.0 * y)) - lr; };

  if (gamma == 1.0) {
    if (rhs > 1.0) {
      const double z = std::sqrt(rhs - 1.0);
      rs.roots = {z};
      rs.z2 = z;
    }
    return rs;
  }
  if (gamma > 1.0) {
    double lo = -1.0, hi = 1.0;
    while (G(lo) > 0.0) lo *= 2.0;
    while (G(hi) < 0.0) hi *= 2.0;
    const double z = bisect_log(G, lo, hi);
    rs.roots = {z};
    rs.z2 = z;
    return rs;
  }
  const double zs = std::sqrt((1.0 - gamma) / (1.0 + gamma));
  const double ys = std::log(zs);
  const double gmin = G(ys);
  if (gmin > 0.0) return rs;
  if (gmin == 0.0) {
    rs.roots = {zs};
    rs.z1 = rs.z2 = zs;
    return rs;
  }
  double lo = ys - 1.0;
  while (G(lo) < 0.0) lo = ys + 2.0 * (lo - ys);
  double hi = ys + 1.0;
  while (G(hi) < 0.0) hi = ys + 2.0 * (hi - ys);
  const double z1 = bisect_log(G, lo, ys);
  const double z2 = bisect_log(G, ys, hi);
  rs.roots = {z1, z2};
  rs.z1 = z1;
  rs.z2 = z2;
  return rs;
}

double threshold_alpha(double gamma, double c) {
  if (!(gamma >= 0.5 && gamma < 1.0)) throw std::invalid_argument("threshold_alpha: need 1/2 <= gamma < 1");
  if (!(c > 0.0)) throw std::invalid_argument("threshold_alpha: c must be > 0");
  return std::pow(c, -0.25) * std::pow((1.0 - gamma) / (1.0 + gamma), 0.5 * (gamma - 1.0));
}

double convexity_threshold(double gamma, double c, double r) {
  if (!(gamma < 1.0 && gamma > -1.0)) throw std::invalid_argument("convexity_threshold: need -1 < gamma < 1");
  return std::pow(r * (1.0 - gamma) / (1.0 + gamma), 0.5 * (gamma - 1.0)) / c;
}

// ---------------------------------------------------------------------------
// F_alpha

CellMask cells_where(const Mesh& mesh, const std::function<bool(Vec2)>& pred) {
  CellMask m(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) m[t] = pred(mesh.centroid(t)) ? 1 : 0;
  return m;
}

CellMask hyperbola_set(const Mesh& mesh) {
  return cells_where(mesh, [](Vec2 x) { return (x.x - 1.0) * (x.x - 1.0) - x.y * x.y < 0.25; });
}

std::vector<double> load_vector(const P1Space& space, const SourceTerm& source) {
  const Mesh& mesh = space.mesh();
  std::vector<double> b(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto l = source.load(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) b[tri[i]] += l[i];
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (space.is_dirichlet(v)) b[v] = 0.0;
  }
  return b;
}

namespace {

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Scatter per-cell flux coefficient k_T times ∇p into the P1 dual.
std::vector<double> weighted_residual(const P1Space& space, const VectorFieldP0& grad,
                                      const std::function<double(int)>& coeff, const std::vector<double>& b) {
  const Mesh& mesh = space.mesh();
  std::vector<double> r(mesh.num_vertices(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto& gr = space.basis_gradients(t);
    const Vec2 flux = (mesh.area(t) * coeff(t)) * grad[t];
    for (int i = 0; i < 3; ++i) r[tri[i]] += dot(flux, gr[i]);
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) r[v] = space.is_dirichlet(v) ? 0.0 : r[v] - b[v];
  return r;
}

SparseSystem constrained(const P1Space& space, CsrMatrix a) {
  SparseSystem s;
  s.matrix = std::move(a);
  s.rhs.assign(s.matrix.n, 0.0);
  s.constrained = space.dirichlet_mask();
  s.apply_constraints();
  return s;
}

}  // namespace

FAlphaProblem::FAlphaProblem(const P1Space& space, CellMask active, double alpha, double gamma, double c,
                             CellCoefficient r, SourceTerm source)
    : space_(&space), active_(std::move(active)), alpha_(alpha), gamma_(gamma), c_(c), r_(std::move(r)) {
  const int nt = space.mesh().num_triangles();
  if (!(gamma >= 0.5 && gamma < 1.0)) throw std::invalid_argument("F_alpha: need 1/2 <= gamma < 1");
  if (!(c > 0.0)) throw std::invalid_argument("F_alpha: c must be > 0");
  if (static_cast<int>(active_.size()) != nt) throw std::invalid_argument("F_alpha: active set has wrong length");
  const double rmin = r_.min_value(nt);
  if (!(rmin > 0.0)) throw std::invalid_argument("F_alpha: r must be > 0");
  const double amin = convexity_threshold(gamma, c, rmin);
  if (!(alpha > amin)) {
    std::ostringstream msg;
    msg << "F_alpha: alpha = " << alpha << " does not exceed the convexity threshold " << amin;
    throw std::invalid_argument(msg.str());
  }
  load_ = load_vector(space, source);
}

double FAlphaProblem::conductance_norm(int t, double s) const {
  if (!active_[t] || !(s > alpha_)) return 0.0;
  return std::pow(c_ * s, 1.0 / (gamma_ - 1.0));
}

double FAlphaProblem::value(const ScalarFieldP1& p) const {
  const Mesh& mesh = space_->mesh();
  const VectorFieldP0 g = gradient_per_triangle(*space_, p);
  const double e = 2.0 * gamma_ / (gamma_ - 1.0);
  const double k = std::pow(c_, 2.0 / (gamma_ - 1.0)) * (gamma_ - 1.0) / (2.0 * gamma_);
  const double ae = std::pow(alpha_, e);
  double f = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double s = norm(g[t]);
    double cell = 0.5 * r_(t) * s * s;
    if (active_[t] && s > alpha_) cell += k * std::min(std::pow(s, e) - ae, 0.0);
    f += mesh.area(t) * cell;
  }
  return f - dot_vec(load_, p);
}

std::vector<double> FAlphaProblem::gradient(const ScalarFieldP1& p) const {
  const VectorFieldP0 g = gradient_per_triangle(*space_, p);
  return weighted_residual(
      *space_, g,
      [&](int t) {
        const double mn = conductance_norm(t, norm(g[t]));
        return r_(t) + mn * mn;
      },
      load_);
}

VectorFieldP0 construct_m0(const P1Space& space, const ScalarFieldP1& p0, const CellMask& active, double alpha,
                           double gamma, double c) {
  if (!(alpha > 0.0)) throw std::invalid_argument("construct_m0: alpha must be > 0");
  const VectorFieldP0 g = gradient_per_triangle(space, p0);
  VectorFieldP0 m(g.size());
  const double ec = 1.0 / (gamma - 1.0);
  const double eg = (2.0 - gamma) / (gamma - 1.0);
  for (std::size_t t = 0; t < g.size(); ++t) {
    const double s = norm(g[t]);
    if (active[t] && s > alpha) m[t] = (std::pow(c, ec) * std::pow(s, eg)) * g[t];
  }
  return m;
}

double stationarity_residual(const P1Space& space, const VectorFieldP0& m0, const ScalarFieldP1& p0, double gamma,
                             double c) {
  const Mesh& mesh = space.mesh();
  const VectorFieldP0 g = gradient_per_triangle(space, p0);
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double mm = norm2(m0[t]);
    if (mm == 0.0) continue;
    const Vec2 cg = c * g[t];
    const Vec2 d = dot(cg, m0[t]) * cg - std::pow(mm, gamma - 1.0) * m0[t];
    s += mesh.area(t) * norm2(d);
  }
  return std::sqrt(s);
}

VariationalResult f_alpha_minimize(const FAlphaProblem& prob, const MinimizeOptions& opts) {
  const P1Space& space = prob.space();
  const Mesh& mesh = space.mesh();
  const int nv = mesh.num_vertices();
  const CellCoefficient& r = prob.r();

  const CsrMatrix stiff = space.stiffness([&](int t) { return std::array<double, 3>{r(t), 0.0, r(t)}; });
  const CholeskyFactor precond(constrained(space, stiff).matrix);
  const CsrMatrix mass = space.mass();
  const auto h1_norm = [&](const std::vector<double>& v) {
    std::vector<double> a, m;
    stiff.multiply(v, a);
    mass.multiply(v, m);
    return std::sqrt(std::max(0.0, dot_vec(v, a) + dot_vec(v, m)));
  };

  VariationalResult res;
  std::vector<double> p(nv, 0.0);
  if (opts.initial != nullptr) {
    p = *opts.initial;
    for (int v = 0; v < nv; ++v) {
      if (space.is_dirichlet(v)) p[v] = 0.0;
    }
  }
  double f = prob.value(p);
  double best_change = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const std::vector<double> grad = prob.gradient(p);
    std::vector<double> d = precond.solve(grad);
    for (int v = 0; v < nv; ++v) d[v] = space.is_dirichlet(v) ? 0.0 : -d[v];
    const double slope = dot_vec(grad, d);
    res.iterations = it;
    if (!(slope < 0.0)) {
      res.last_relative_change = 0.0;
      break;  // stationary up to round-off
    }
    double lambda = 1.0;
    std::vector<double> trial(nv);
    double ft = 0.0;
    // Round-off allowance on the decrease test.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(f) + 1.0);
    for (;;) {
      for (int v = 0; v < nv; ++v) trial[v] = p[v] + lambda * d[v];
      ft = prob.value(trial);
      if (ft <= f + opts.armijo_c * lambda * slope + slack) break;
      lambda *= 0.5;
      if (lambda < opts.min_step) {
        std::ostringstream msg;
        msg << "F_alpha minimization: Armijo line search failed at iteration " << it << " (F = " << f << ")";
        throw std::runtime_error(msg.str());
      }
    }
    std::vector<double> step(nv);
    for (int v = 0; v < nv; ++v) step[v] = trial[v] - p[v];
    const double pn = h1_norm(p);
    const double change = pn > 0.0 ? h1_norm(step) / pn : (h1_norm(step) > 0.0 ? 1.0 : 0.0);
    p = std::move(trial);
    f = ft;
    res.iterations = it + 1;
    res.last_relative_change = change;
    if (change < opts.rel_change_tol) break;
    // Once at round-off level, stop if the change no longer improves.
    if (change < best_change * 0.5) {
      best_change = change;
      stalled = 0;
    } else if (change < 1e-12 && ++stalled >= 5) {
      break;
    }
  }
  res.p0 = std::move(p);
  res.functional = f;
  res.m0 = construct_m0(space, res.p0, prob.active(), prob.alpha(), prob.gamma(), prob.c());
  res.active_set.assign(mesh.num_triangles(), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) res.active_set[t] = norm2(res.m0[t]) > 0.0 ? 1 : 0;
  res.stationarity_residual = stationarity_residual(space, res.m0, res.p0, prob.gamma(), prob.c());
  return res;
}

VectorFieldP0 perturb(const Mesh& mesh, const VectorFieldP0& m0, double amplitude, std::uint64_t seed) {
  const bool all_zero = std::all_of(m0.begin(), m0.end(), [](Vec2 v) { return v.x == 0.0 && v.y == 0.0; });
  if (all_zero) {
    log::warn("perturb: conductance is identically zero; returned unchanged");
    return m0;
  }
  std::mt19937_64 rng(seed);
  std::vector<double> eta(m0.size());
  for (double& e : eta) e = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  const double nrm = l2_norm(mesh, eta);
  VectorFieldP0 out(m0.size());
  for (std::size_t t = 0; t < m0.size(); ++t) out[t] = (1.0 + amplitude * eta[t] / nrm) * m0[t];
  return out;
}

// ---------------------------------------------------------------------------
// Penalty

namespace {

struct PenaltyEval {
  const P1Space& space;
  const std::vector<double>& b;
  double kappa;  // 1/c²
  double eps;

  double value(const std::vector<double>& p) const {
    const Mesh& mesh = space.mesh();
    const VectorFieldP0 g = gradient_per_triangle(space, p);
    double f = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double s2 = norm2(g[t]);
      const double v = std::max(s2 - kappa, 0.0);
      f += mesh.area(t) * (0.5 * s2 + v * v / (4.0 * eps));
    }
    return f - dot_vec(b, p);
  }
};

}  // namespace

PenaltyResult penalty_solve(const P1Space& space, const SourceTerm& source, double c, double eps,
                            const PenaltyOptions& opts, const ScalarFieldP1* initial) {
  if (!(eps > 0.0)) throw std::invalid_argument("penalty_solve: eps must be > 0");
  if (!(c > 0.0)) throw std::invalid_argument("penalty_solve: c must be > 0");
  const Mesh& mesh = space.mesh();
  const int nv = mesh.num_vertices();
  const int nt = mesh.num_triangles();
  const double kappa = 1.0 / (c * c);
  const std::vector<double> b = load_vector(space, source);
  const double bnorm = std::sqrt(dot_vec(b, b));
  const PenaltyEval F{space, b, kappa, eps};

  std::vector<double> p(nv, 0.0);
  if (initial != nullptr) {
    p = *initial;
    for (int v = 0; v < nv; ++v) {
      if (space.is_dirichlet(v)) p[v] = 0.0;
    }
  }

  PenaltyResult res;
  res.eps = eps;
  double f = F.value(p);
  double gnorm = 0.0;
  double best = std::numeric_limits<double>::infinity();
  int no_progress = 0;
  int it = 0;
  for (;; ++it) {
    const VectorFieldP0 g = gradient_per_triangle(space, p);
    const std::vector<double> grad = weighted_residual(
        space, g, [&](int t) { return 1.0 + std::max(norm2(g[t]) - kappa, 0.0) / eps; }, b);
    gnorm = bnorm > 0.0 ? std::sqrt(dot_vec(grad, grad)) / bnorm : std::sqrt(dot_vec(grad, grad));
    if (gnorm <= opts.tol || (bnorm == 0.0 && gnorm == 0.0)) break;
    // For small eps the gradient bottoms out at a round-off floor of order
    // eps_mach |grad p|^2 / eps; accept it once Newton stops making progress.
    if (gnorm < 0.5 * best) {
      best = gnorm;
      no_progress = 0;
    } else {
      ++no_progress;
    }
    if (gnorm <= opts.stall_tol && (no_progress >= 5 || it >= opts.max_newton)) break;
    if (it >= opts.max_newton) {
      std::ostringstream msg;
      msg << "penalty_solve: no convergence in " << it << " Newton steps (eps = " << eps
          << ", relative gradient " << gnorm << ")";
      throw std::runtime_error(msg.str());
    }
    const CsrMatrix hess = space.stiffness([&](int t) {
      const Vec2 q = g[t];
      const double s2 = norm2(q);
      const double a = std::max(s2 - kappa, 0.0) / eps;
      const double w = s2 > kappa ? 2.0 / eps : 0.0;
      return std::array<double, 3>{1.0 + a + w * q.x * q.x, w * q.x * q.y, 1.0 + a + w * q.y * q.y};
    });
    std::vector<double> d = CholeskyFactor(constrained(space, hess).matrix).solve(grad);
    for (int v = 0; v < nv; ++v) d[v] = space.is_dirichlet(v) ? 0.0 : -d[v];
    const double slope = dot_vec(grad, d);
    double lambda = 1.0;
    std::vector<double> trial(nv);
    double ft = 0.0;
    bool accepted = false;
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(f) + 1.0);
    while (lambda >= 1e-12) {
      for (int v = 0; v < nv; ++v) trial[v] = p[v] + lambda * d[v];
      ft = F.value(trial);
      if (ft <= f + opts.armijo_c * lambda * slope + slack) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      if (gnorm <= opts.stall_tol) break;
      std::ostringstream msg;
      msg << "penalty_solve: line search failed (eps = " << eps << ", relative gradient " << gnorm << ")";
      throw std::runtime_error(msg.str());
    }
    p = std::move(trial);
    f = ft;
  }

  res.p = std::move(p);
  res.functional = f;
  res.gradient_norm = gnorm;
  res.newton_iterations = it;
  const VectorFieldP0 g = gradient_per_triangle(space, res.p);
  res.a.resize(nt);
  double v1 = 0.0, v2 = 0.0, comp = 0.0, a2 = 0.0;
  for (int t = 0; t < nt; ++t) {
    const double v = std::max(norm2(g[t]) - kappa, 0.0);
    const double a = v / eps;
    res.a[t] = a;
    const double area = mesh.area(t);
    v1 += area * v;
    v2 += area * v * v;
    comp += area * eps * a * a;
    a2 += area * a * a;
  }
  res.violation_l1 = v1;
  res.violation_l2 = std::sqrt(v2);
  res.complementarity = comp;
  res.a_l2 = std::sqrt(a2);
  res.kkt = kkt_residuals(space, res.p, res.a, c, source);
  return res;
}

std::vector<PenaltyResult> penalty_continuation(const P1Space& space, const SourceTerm& source, double c,
                                                const std::vector<double>& schedule, const PenaltyOptions& opts) {
  std::vector<PenaltyResult> out;
  out.reserve(schedule.size());
  for (double eps : schedule) {
    const ScalarFieldP1* warm = out.empty() ? nullptr : &out.back().p;
    out.push_back(penalty_solve(space, source, c, eps, opts, warm));
  }
  return out;
}

std::vector<double> eps_schedule(int first_exp, int last_exp) {
  std::vector<double> s;
  for (int e = first_exp; e <= last_exp; ++e) s.push_back(std::pow(10.0, -e));
  return s;
}

KktResiduals kkt_residuals(const P1Space& space, const ScalarFieldP1& p, const std::vector<double>& a_sq, double c,
                           const SourceTerm& source) {
  const Mesh& mesh = space.mesh();
  const std::vector<double> b = load_vector(space, source);
  const VectorFieldP0 g = gradient_per_triangle(space, p);
  for (double a : a_sq) {
    if (a < 0.0) throw std::invalid_argument("kkt_residuals: multiplier must be >= 0");
  }
  KktResiduals k;
  const std::vector<double> res = weighted_residual(space, g, [&](int t) { return 1.0 + a_sq[t]; }, b);
  if (dot_vec(res, res) > 0.0) {
    const CsrMatrix lap = space.stiffness([](int) { return std::array<double, 3>{1.0, 0.0, 1.0}; });
    const std::vector<double> y = CholeskyFactor(constrained(space, lap).matrix).solve(res);
    k.r_pde = std::sqrt(std::max(0.0, dot_vec(res, y)));
  }
  const double c2 = c * c;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double q = c2 * norm2(g[t]) - 1.0;
    k.r_feas += mesh.area(t) * std::max(q, 0.0);
    k.r_comp += mesh.area(t) * std::abs(a_sq[t] * q);
  }
  return k;
}

JValue j_functional(const P1Space& space, const ScalarFieldP1& p, const SourceTerm& source, double c, double slack) {
  const Mesh& mesh = space.mesh();
  const VectorFieldP0 g = gradient_per_triangle(space, p);
  const std::vector<double> b = load_vector(space, source);
  JValue j;
  j.feasible_cells.resize(mesh.num_triangles());
  double e = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    e += 0.5 * mesh.area(t) * norm2(g[t]);
    const bool ok = c * c * norm2(g[t]) <= 1.0 + slack;
    j.feasible_cells[t] = ok ? 1 : 0;
    j.feasible = j.feasible && ok;
  }
  j.value = e - dot_vec(b, p);
  return j;
}

}  // namespace netmorph
