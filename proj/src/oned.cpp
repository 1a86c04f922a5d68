#include "netmorph/oned.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace netmorph::oned {

double z_constant(double gamma) {
  if (!(gamma >= -1.0 && gamma <= 1.0)) throw std::invalid_argument("z_constant: need -1 <= gamma <= 1");
  if (gamma == 1.0 || gamma == -1.0) return 1.0;
  return 2.0 / (gamma + 1.0) * std::pow((1.0 - gamma) / (1.0 + gamma), 0.5 * (gamma - 1.0));
}

double h_gamma(double m, double gamma) {
  if (!(m > 0.0)) throw std::invalid_argument("h_gamma: m must be > 0");
  const double q = 1.0 + m * m;
  return std::pow(m, 2.0 * (gamma - 1.0)) * q * q;
}

HMin h_gamma_min(double gamma) {
  if (!(gamma >= -1.0 && gamma <= 1.0)) throw std::invalid_argument("h_gamma_min: need -1 <= gamma <= 1");
  const double z = z_constant(gamma);
  if (gamma == 1.0) return {0.0, 1.0};
  if (gamma == -1.0) return {std::numeric_limits<double>::infinity(), 1.0};
  return {std::sqrt((1.0 - gamma) / (1.0 + gamma)), z * z};
}

Profile1D make_profile(int n, const std::function<double(double)>& S, const std::function<double(double)>& m0) {
  if (n < 1) throw std::invalid_argument("make_profile: need at least one cell");
  Profile1D p;
  p.x.resize(n + 1);
  p.S.resize(n + 1);
  p.B.resize(n + 1);
  p.m.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    p.x[i] = static_cast<double>(i) / n;
    p.S[i] = S(p.x[i]);
    p.m[i] = m0(p.x[i]);
  }
  p.B[0] = 0.0;
  const double h = 1.0 / n;
  for (int i = 1; i <= n; ++i) p.B[i] = p.B[i - 1] + 0.5 * h * (p.S[i - 1] + p.S[i]);
  return p;
}

Profile1D make_profile(int n, const std::function<double(double)>& S, double m0) {
  return make_profile(n, S, [m0](double) { return m0; });
}

std::vector<double> pressure_gradient_1d(const Profile1D& p) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -p.B[i] / (1.0 + p.m[i] * p.m[i]);
  return g;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::kStable:
      return "stable";
    case Stability::kUnstable:
      return "unstable";
    case Stability::kSemistable:
      return "semistable";
  }
  return "?";
}

double ode_rhs(double m, double cB, double gamma) {
  if (m == 0.0) return 0.0;
  const double q = 1.0 + m * m;
  return (cB * cB / (q * q) - std::pow(std::abs(m), 2.0 * (gamma - 1.0))) * m;
}

namespace {

// log h_γ(e^y) − 2 ln(cB)
double log_h_shift(double y, double gamma, double lcb) {
  return 2.0 * (gamma - 1.0) * y + 2.0 * std::log1p(std::exp(2.0 * y)) - 2.0 * lcb;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Root of F on a monotone branch starting at y0, expanding in direction dir.
double branch_root(const std::function<double(double)>& F, double y0, double dir) {
  double step = 1.0;
  double y1 = y0 + dir * step;
  while ((F(y1) > 0.0) == (F(y0) > 0.0)) {
    step *= 2.0;
    y1 = y0 + dir * step;
    if (step > 2000.0) throw std::runtime_error("classify_stationary: root bracket not found");
  }
  return std::exp(dir > 0 ? bisect(F, y0, y1) : bisect(F, y1, y0));
}

}  // namespace

ClassificationReport classify_stationary(double cB, double gamma) {
  if (gamma < 0.5) throw std::invalid_argument("classify_stationary: gamma must be >= 1/2");
  if (!(cB >= 0.0)) throw std::invalid_argument("classify_stationary: cB must be >= 0");
  ClassificationReport rep;
  rep.gamma = gamma;
  rep.cB = cB;
  const auto symmetric = [&](double ms, Stability outer, Stability zero) {
    rep.points = {{-ms, outer}, {0.0, zero}, {ms, outer}};
  };
  if (cB == 0.0) {
    rep.points = {{0.0, Stability::kStable}};
    return rep;
  }
  const double lcb = std::log(cB);
  const auto F = [&](double y) { return log_h_shift(y, gamma, lcb); };
  if (gamma > 1.0) {
    symmetric(branch_root(F, 0.0, F(0.0) > 0.0 ? -1.0 : 1.0), Stability::kStable, Stability::kUnstable);
    return rep;
  }
  if (gamma == 1.0) {
    if (cB > 1.0) {
      symmetric(std::sqrt(cB - 1.0), Stability::kStable, Stability::kUnstable);
    } else {
      rep.points = {{0.0, Stability::kStable}};
    }
    return rep;
  }
  const double z = z_constant(gamma);
  const double ys = 0.5 * std::log((1.0 - gamma) / (1.0 + gamma));
  const double gap = lcb - std::log(z);
  if (std::abs(gap) <= 1e-14) {
    symmetric(std::exp(ys), Stability::kSemistable, Stability::kStable);
  } else if (gap < 0.0) {
    rep.points = {{0.0, Stability::kStable}};
  } else {
    const double mu = branch_root(F, ys, -1.0);
    const double ms = branch_root(F, ys, 1.0);
    rep.points = {{-ms, Stability::kStable},
                  {-mu, Stability::kUnstable},
                  {0.0, Stability::kStable},
                  {mu, Stability::kUnstable},
                  {ms, Stability::kStable}};
  }
  return rep;
}

double l1_norm(const std::vector<double>& v, double dx) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
    s += w * std::abs(v[i]);
  }
  return s * dx;
}

namespace {

// Reaction rate R(m) with ∂t m = R m; 0 at m = 0 for γ >= 1/2.
double rate(double m, double cB, double gamma) {
  const double q = 1.0 + m * m;
  const double act = cB * cB / (q * q);
  if (gamma == 1.0) return act - 1.0;
  if (m == 0.0) {
    if (gamma < 0.5) throw std::domain_error("integrate_1d: relaxation singular at m = 0 for gamma < 1/2");
    return act;
  }
  return act - std::pow(std::abs(m), 2.0 * (gamma - 1.0));
}

// Neumann backward-Euler diffusion: (I − k Δ_h) u = rhs, k = dt D²/h².
void solve_diffusion(std::vector<double>& u, double k) {
  const std::size_t n = u.size();
  if (n == 1 || k == 0.0) return;
  std::vector<double> c(n), d(n);
  // Row i: −k u_{i−1} + (1+2k) u_i − k u_{i+1}; ghost nodes mirror the neighbours.
  const auto lower = [&](std::size_t i) { return i == 0 ? 0.0 : (i + 1 == n ? -2.0 * k : -k); };
  const auto upper = [&](std::size_t i) { return i + 1 == n ? 0.0 : (i == 0 ? -2.0 * k : -k); };
  const double diag = 1.0 + 2.0 * k;
  c[0] = upper(0) / diag;
  d[0] = u[0] / diag;
  for (std::size_t i = 1; i < n; ++i) {
    const double den = diag - lower(i) * c[i - 1];
    c[i] = upper(i) / den;
    d[i] = (u[i] - lower(i) * d[i - 1]) / den;
  }
  u[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) u[i] = d[i] - c[i] * u[i + 1];
}

}  // namespace

Trajectory1D integrate_1d(const Profile1D& profile, const Params1D& params, const Options1D& opts) {
  if (!(params.D >= 0.0)) throw std::invalid_argument("integrate_1d: D must be >= 0");
  if (!(params.c > 0.0)) throw std::invalid_argument("integrate_1d: c must be > 0");
  if (!(params.gamma >= -1.0)) throw std::invalid_argument("integrate_1d: gamma must be >= -1");
  if (!(opts.cfl > 0.0) || !(opts.dt_max > 0.0)) throw std::invalid_argument("integrate_1d: bad step options");
  const std::size_t n = profile.size();
  const double h = profile.dx();
  std::vector<double> cB(n);
  for (std::size_t i = 0; i < n; ++i) cB[i] = params.c * profile.B[i];

  Trajectory1D tr;
  std::vector<double> m = profile.m;
  double t = 0.0;
  long k = 0;
  const auto record = [&](bool snapshot) {
    tr.t.push_back(t);
    tr.l1.push_back(l1_norm(m, h));
    double mx = 0.0;
    for (double v : m) mx = std::max(mx, std::abs(v));
    tr.linf.push_back(mx);
    if (snapshot) {
      tr.snapshot_t.push_back(t);
      tr.snapshots.push_back(m);
    }
  };
  const auto min_abs = [&] {
    double mn = std::numeric_limits<double>::infinity();
    for (double v : m) mn = std::min(mn, std::abs(v));
    return mn;
  };
  record(true);

  const auto finish = [&](const char* why) {
    tr.stop_reason = why;
    if (tr.snapshot_t.empty() || tr.snapshot_t.back() != t) {
      tr.snapshot_t.push_back(t);
      tr.snapshots.push_back(m);
    }
    tr.final_m = m;
    return tr;
  };

  if (opts.stop_on_extinction && min_abs() < opts.extinction_threshold) {
    tr.t_extinct = 0.0;
    return finish("extinction");
  }

  std::vector<double> r(n), prev;
  while (t < opts.final_time) {
    if (k >= opts.max_steps) return finish("step limit reached");
    double rmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i] == 0.0 && params.gamma < 0.5) {
        throw std::domain_error("integrate_1d: m reached 0 at node " + std::to_string(i) +
                                " with gamma < 1/2 (solution cannot be continued)");
      }
      r[i] = rate(m[i], cB[i], params.gamma);
      rmax = std::max(rmax, std::abs(r[i]));
    }
    double dt = std::min(opts.dt_max, opts.final_time - t);
    if (rmax > 0.0) dt = std::min(dt, opts.cfl / rmax);
    dt = std::max(dt, std::min(opts.dt_min, opts.final_time - t));

    prev = m;
    for (std::size_t i = 0; i < n; ++i) m[i] += dt * r[i] * m[i];
    solve_diffusion(m, dt * params.D * params.D / (h * h));
    t += dt;
    ++k;

    int crossed = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(m[i]) < opts.extinction_threshold || (prev[i] != 0.0 && m[i] * prev[i] <= 0.0)) {
        crossed = static_cast<int>(i);
        break;
      }
    }
    const bool snap = opts.record_stride > 0 && k % opts.record_stride == 0;
    record(snap);
    if (crossed >= 0) {
      if (opts.stop_on_extinction) {
        tr.t_extinct = t;
        tr.extinct_node = crossed;
        return finish("extinction");
      }
      if (params.gamma < 0.5) {
        throw std::domain_error("integrate_1d: m reached 0 at node " + std::to_string(crossed) +
                                " with gamma < 1/2 (solution cannot be continued)");
      }
    }
  }
  return finish("final time reached");
}

double breakdown_margin(double gamma, double c, double B_sup, double M) {
  if (!(gamma >= -1.0 && gamma <= 1.0)) throw std::invalid_argument("breakdown_margin: need -1 <= gamma <= 1");
  if (!(M > 0.0) || !(c > 0.0) || !(B_sup >= 0.0)) throw std::invalid_argument("breakdown_margin: bad arguments");
  if (!(c * B_sup < z_constant(gamma))) {
    throw std::invalid_argument("breakdown_margin: requires c * B_sup < Z_gamma");
  }
  const double cb2 = c * c * B_sup * B_sup;
  const auto f = [&](double m) {
    const double q = 1.0 + m * m;
    if (gamma >= 0.5) return cb2 / (q * q) - std::pow(m, 2.0 * (gamma - 1.0));
    return cb2 * m / (q * q) - std::pow(m, 2.0 * gamma - 1.0);
  };
  // Log grid on (M·1e-12, M], then golden-section refinement around the best node.
  const int N = 4000;
  const double lo = std::log(M) - 12.0 * std::log(10.0);
  const double hi = std::log(M);
  int best = N;
  double fbest = f(M);
  for (int i = 0; i < N; ++i) {
    const double v = f(std::exp(lo + (hi - lo) * i / N));
    if (v > fbest) {
      fbest = v;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / N;
  double b = lo + (hi - lo) * std::min(best + 1, N) / N;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(std::exp(x2));
    }
  }
  fbest = std::max({fbest, f1, f2});
  return -fbest;
}

}  // namespace netmorph::oned
