#include "netmorph/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "netmorph/log.hpp"

namespace netmorph {

void validate(const ModelParams& p, int num_cells, bool extinction_mode) {
  if (!(p.D >= 0.0) || !std::isfinite(p.D)) throw std::invalid_argument("D must be a finite value >= 0");
  if (!(p.c > 0.0) || !std::isfinite(p.c)) throw std::invalid_argument("c must be > 0");
  if (!std::isfinite(p.gamma)) throw std::invalid_argument("gamma must be finite");
  if (!(p.rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  if (!(p.r.min_value(num_cells) > 0.0)) throw std::invalid_argument("r must be > 0 on every triangle");
  if (p.gamma < 1.0 && p.rho == 0.0 && !extinction_mode) {
    throw std::invalid_argument(
        "gamma < 1 requires rho > 0 unless the extinction stop rule is used (relaxation is singular at m = 0)");
  }
}

Vec2 relaxation_forcing(Vec2 m, Vec2 grad_p, const ModelParams& params) {
  const double act = params.c * params.c * dot(grad_p, m);
  const double a2 = norm2(m) + params.rho;
  double relax;
  if (params.gamma == 1.0) {
    relax = 1.0;
  } else if (a2 == 0.0) {
    if (params.gamma < 1.0) throw std::domain_error("relaxation term is singular at m = 0 for gamma < 1 and rho = 0");
    relax = 0.0;
  } else {
    relax = std::pow(a2, params.gamma - 1.0);
  }
  return act * grad_p - relax * m;
}

double activation_dt(double delta_k, double grad_sup, double c, double dt_max) {
  const double s = c * c * grad_sup * grad_sup;
  if (!(s > 0.0)) return dt_max;
  double next = 0.5 / s;
  if (delta_k > 0.05 / s && delta_k < 0.9 / s) next = delta_k;
  return std::min(next, dt_max);
}

double sparsity_index(const Mesh& mesh, const VectorFieldP0& u) {
  const double l1 = l1_norm(mesh, u);
  if (!(l1 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return l2_norm(mesh, u) / l1;
}

VectorFieldP0 strip_initial_datum(const Mesh& mesh, double shift) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto frac = box_area_fraction(mesh, {-inf, -0.0125}, {0.3, 0.0125});
  VectorFieldP0 m(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) m[t] = {frac[t] + shift, 0.0};
  return m;
}

Stepper::Stepper(std::shared_ptr<const Mesh> mesh, ModelParams params, StepperOptions opts)
    : mesh_(std::move(mesh)),
      params_(std::move(params)),
      opts_(opts),
      p1_(mesh_),
      rt0_(mesh_, params_.m_bc),
      mixed_(rt0_),
      pressure_(p1_) {
  if (!(opts_.dt_max > 0.0) || !(opts_.dt_min > 0.0) || opts_.dt_min > opts_.dt_max) {
    throw std::invalid_argument("time step bounds must satisfy 0 < dt_min <= dt_max");
  }
}

double Stepper::grad_sup(const VectorFieldP0& grad_p) {
  double g = 0.0;
  for (const Vec2& v : grad_p) g = std::max(g, norm(v));
  return g;
}

void Stepper::refresh_pressure(StepState& s) const {
  s.p = pressure_.solve(s.m, params_.r, params_.S, opts_.pressure_tol);
  s.grad_p = gradient_per_triangle(p1_, s.p);
}

StepState Stepper::initial_state(VectorFieldP0 m0) {
  if (static_cast<int>(m0.size()) != mesh_->num_triangles()) {
    throw std::invalid_argument("initial conductance has wrong length");
  }
  StepState s;
  s.m = std::move(m0);
  refresh_pressure(s);
  s.sigma = params_.D > 0.0 ? mixed_.discrete_gradient(s.m) : FluxFieldRT0::zeros(mesh_->num_edges());
  const double g = grad_sup(s.grad_p);
  s.delta = activation_dt(0.0, g, params_.c, opts_.dt_max);
  s.diag = diagnostics(s, nullptr);
  return s;
}

StepState Stepper::imex_step(const StepState& state, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("imex_step: time step must be > 0");
  const int nt = mesh_->num_triangles();
  VectorFieldP0 g(nt);
  for (int t = 0; t < nt; ++t) {
    Vec2 f;
    try {
      f = relaxation_forcing(state.m[t], state.grad_p[t], params_);
    } catch (const std::domain_error& e) {
      throw std::domain_error(std::string(e.what()) + " (triangle " + std::to_string(t) + ")");
    }
    if (!std::isfinite(f.x) || !std::isfinite(f.y)) {
      throw std::runtime_error("non-finite forcing on triangle " + std::to_string(t));
    }
    g[t] = state.m[t] + delta * f;
  }
  StepState next;
  next.k = state.k + 1;
  next.t = state.t + delta;
  next.delta = delta;
  next.m = mixed_.solve(g, params_.D, delta, next.sigma);
  refresh_pressure(next);
  return next;
}

double Stepper::adapt_dt(const StepState& state) const {
  const double g = grad_sup(state.grad_p);
  // δ² = δ¹; afterwards the window rule.
  double dt = state.k == 1 ? std::min(state.delta, opts_.dt_max)
                           : activation_dt(state.delta, g, params_.c, opts_.dt_max);
  if (dt < opts_.dt_min) {
    std::ostringstream msg;
    msg << "time step " << dt << " fell below dt_min " << opts_.dt_min << " (c|grad p|_inf = " << params_.c * g
        << ")";
    throw std::runtime_error(msg.str());
  }
  if (opts_.relaxation_cfl > 0.0 && params_.gamma < 1.0) {
    double inv_rate = std::numeric_limits<double>::infinity();
    for (const Vec2& m : state.m) {
      const double a2 = norm2(m) + params_.rho;
      if (a2 > 0.0) inv_rate = std::min(inv_rate, std::pow(a2, 1.0 - params_.gamma));
    }
    // The relaxation limit may shrink δ to dt_min but never aborts the run.
    dt = std::max(std::min(dt, opts_.relaxation_cfl * inv_rate), opts_.dt_min);
  }
  return dt;
}

double Stepper::discrete_energy(const StepState& s) const {
  const double gamma = params_.gamma;
  if (gamma == 0.0) throw std::domain_error("discrete energy is undefined for gamma = 0");
  const Mesh& mesh = *mesh_;
  const double c2 = params_.c * params_.c;
  const double shift = params_.rho > 0.0 ? std::pow(params_.rho, gamma) : 0.0;
  double e = 0.0;
  if (params_.D > 0.0) {
    e += params_.D * params_.D * (rt0_.mass_norm2(s.sigma.s1) + rt0_.mass_norm2(s.sigma.s2));
  }
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 m = s.m[t];
    const Vec2 gp = s.grad_p[t];
    const double mg = dot(m, gp);
    const double relax = (std::pow(norm2(m) + params_.rho, gamma) - shift) / gamma;
    e += mesh.area(t) * (relax + c2 * (mg * mg + params_.r(t) * norm2(gp)));
  }
  return 0.5 * e;
}

Diagnostics Stepper::diagnostics(const StepState& s, const StepState* prev) const {
  Diagnostics d;
  d.k = s.k;
  d.t = s.t;
  d.dt = s.k == 0 ? 0.0 : s.delta;
  d.E_h = params_.gamma == 0.0 ? std::numeric_limits<double>::quiet_NaN() : discrete_energy(s);
  if (prev != nullptr && s.delta > 0.0) {
    d.E_ht = (d.E_h - prev->diag.E_h) / s.delta;
    VectorFieldP0 dm(s.m.size());
    for (std::size_t t = 0; t < dm.size(); ++t) dm[t] = s.m[t] - prev->m[t];
    d.m_ht = l2_norm(*mesh_, dm) / s.delta;
  }
  d.s_k = sparsity_index(*mesh_, velocity(s.m, s.grad_p, params_.r));
  d.grad_inf = params_.c * grad_sup(s.grad_p);
  double mn = std::numeric_limits<double>::infinity();
  for (const Vec2& m : s.m) mn = std::min(mn, norm(m));
  d.min_abs_m = mn;
  return d;
}

RunResult Stepper::run(StepState initial, const StopRule& stop, const Observer& observer) {
  RunResult res;
  const bool extinction = stop.kind == StopKind::kExtinction;
  res.history.push_back(initial.diag);
  if (observer) observer(initial);
  StepState cur = std::move(initial);

  const auto finish = [&](std::string reason, bool converged) {
    res.stop_reason = std::move(reason);
    res.converged = converged;
    res.final_state = std::move(cur);
    return res;
  };

  if (stop.kind == StopKind::kFinalTime && cur.t >= stop.final_time) return finish("final time reached", true);
  if (extinction && cur.diag.min_abs_m < stop.extinction_threshold) {
    res.t_extinct = cur.t;
    return finish("extinction", true);
  }

  while (cur.k < stop.max_steps) {
    double dt = adapt_dt(cur);
    if (stop.kind == StopKind::kFinalTime) dt = std::min(dt, stop.final_time - cur.t);

    StepState next;
    for (;;) {
      next = imex_step(cur, dt);
      next.diag = diagnostics(next, &cur);
      const double e0 = cur.diag.E_h;
      const double e1 = next.diag.E_h;
      const bool increased = std::isfinite(e0) && std::isfinite(e1) &&
                             e1 > e0 + opts_.energy_tol * std::max(1.0, std::abs(e0));
      if (!increased) break;
      if (opts_.energy_policy == EnergyPolicy::kRetry && 0.5 * dt >= opts_.dt_min) {
        ++res.rejected_steps;
        dt *= 0.5;
        continue;
      }
      std::ostringstream msg;
      msg.precision(17);
      msg << "discrete energy increased at step " << next.k << ": " << e0 << " -> " << e1;
      if (opts_.energy_policy == EnergyPolicy::kStrict) throw EnergyIncreaseError(msg.str());
      ++res.energy_warnings;
      log::warn(msg.str());
      break;
    }
    if (std::isfinite(cur.diag.E_h) && std::isfinite(next.diag.E_h)) {
      res.max_energy_increase = std::max(res.max_energy_increase, next.diag.E_h - cur.diag.E_h);
    }

    if (extinction) {
      // A cell is extinct once |m| drops below the threshold or the explicit
      // step carries it through zero.
      for (std::size_t t = 0; t < next.m.size(); ++t) {
        if (norm(next.m[t]) < stop.extinction_threshold ||
            (norm2(cur.m[t]) > 0.0 && dot(next.m[t], cur.m[t]) <= 0.0)) {
          res.extinct_cell = static_cast<int>(t);
          break;
        }
      }
    }

    res.history.push_back(next.diag);
    if (observer) observer(next);
    cur = std::move(next);

    if (extinction && res.extinct_cell >= 0) {
      res.t_extinct = cur.t;
      return finish("extinction", true);
    }
    if (stop.kind == StopKind::kFinalTime && cur.t >= stop.final_time) return finish("final time reached", true);
    if (stop.kind == StopKind::kStationary && std::abs(cur.diag.E_ht) < stop.tol_E &&
        cur.diag.m_ht < stop.tol_m) {
      return finish("stationary", true);
    }
    if (stop.kind != StopKind::kFinalTime && cur.t >= stop.max_time) return finish("time limit reached", false);
  }
  return finish("step limit reached", false);
}

}  // namespace netmorph
