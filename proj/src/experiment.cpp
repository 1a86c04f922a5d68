#include "netmorph/experiment.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "netmorph/dynamics.hpp"
#include "netmorph/fem.hpp"
#include "netmorph/log.hpp"
#include "netmorph/oned.hpp"
#include "netmorph/snapshot.hpp"
#include "netmorph/stationary.hpp"

namespace netmorph {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* version() { return NETMORPH_VERSION; }

std::shared_ptr<const Mesh> build_mesh(const MeshSource& source) {
  Mesh mesh = [&] {
    switch (source.generator) {
      case MeshGenerator::kDiamond:
        return generate_diamond(source.h);
      case MeshGenerator::kSquare:
        return generate_unit_square(source.n);
      case MeshGenerator::kFile: {
        std::ifstream in(source.file);
        if (!in) throw std::runtime_error("cannot read mesh " + source.file.string());
        return read_mesh(in);
      }
    }
    throw std::logic_error("build_mesh: bad generator");
  }();
  for (int i = 0; i < source.refine; ++i) mesh = refine_uniform(mesh);
  return std::make_shared<const Mesh>(std::move(mesh));
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

json mesh_stats(const Mesh& mesh) {
  return {{"vertices", mesh.num_vertices()}, {"triangles", mesh.num_triangles()},
          {"edges", mesh.num_edges()},       {"boundary_edges", mesh.num_boundary_edges()},
          {"h_max", mesh.h_max()},           {"h_min", mesh.h_min()},
          {"area", mesh.total_area()}};
}

class Output {
 public:
  Output(const ExperimentConfig& cfg, ExperimentKind kind, ExperimentResult& res)
      : dir_(cfg.out_dir), res_(res) {
    fs::create_directories(dir_);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a(cfg.source_text));
    manifest_ = {{"kind", to_string(kind)}, {"version", version()}, {"config_hash", hash},
                 {"seed", cfg.seed}, {"mesh", nullptr}};
    summary_ = {{"kind", to_string(kind)}};
  }

  fs::path path(const std::string& name) {
    res_.artifacts.push_back(dir_ / name);
    return dir_ / name;
  }
  std::ofstream open(const std::string& name) { return open_output(path(name)); }

  json& summary() { return summary_; }
  json& manifest() { return manifest_; }

  void finish() {
    res_.summary_json = summary_.dump(2) + "\n";
    open("summary.json") << res_.summary_json;
    open("manifest.json") << manifest_.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  ExperimentResult& res_;
  json manifest_;
  json summary_;
};

std::string snapshot_name(long k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06ld.vtk", k);
  return buf;
}

VariationalResult variational_state(const P1Space& space, const ModelParams& model, const VariationalConfig& vc) {
  const Mesh& mesh = space.mesh();
  CellMask active = vc.hyperbola ? hyperbola_set(mesh) : CellMask(mesh.num_triangles(), 1);
  const double alpha = vc.alpha.value_or(threshold_alpha(model.gamma, model.c));
  FAlphaProblem problem(space, std::move(active), alpha, model.gamma, model.c, model.r, model.S);
  MinimizeOptions opts;
  opts.max_iter = vc.max_iter;
  return f_alpha_minimize(problem, opts);
}

void run_simulate(const ExperimentConfig& cfg, Output& out) {
  auto mesh = build_mesh(cfg.mesh);
  out.manifest()["mesh"] = mesh_stats(*mesh);
  validate(cfg.model, mesh->num_triangles(), cfg.stop.kind == StopKind::kExtinction);
  Stepper stepper(mesh, cfg.model, cfg.solver);

  VectorFieldP0 m0;
  switch (cfg.initial.kind) {
    case InitialKind::kStrip:
      m0 = strip_initial_datum(*mesh, cfg.initial.shift);
      break;
    case InitialKind::kConstant:
      m0.assign(mesh->num_triangles(), cfg.initial.value);
      break;
    case InitialKind::kPerturbedStationary: {
      ModelParams mp = cfg.model;
      const VariationalResult st = variational_state(stepper.p1(), mp, cfg.variational);
      m0 = perturb(*mesh, st.m0, cfg.initial.amplitude, cfg.seed);
      out.summary()["stationary_residual"] = st.stationarity_residual;
      break;
    }
  }

  long last_written = -1;
  const auto snap = [&](const StepState& s) {
    write_vtk(make_snapshot(*mesh, s, cfg.model.r), out.path(snapshot_name(s.k)));
    last_written = s.k;
  };
  const auto observer = [&](const StepState& s) {
    if (s.k == 0 || (cfg.stride > 0 && s.k % cfg.stride == 0)) snap(s);
  };
  const RunResult res = stepper.run(stepper.initial_state(std::move(m0)), cfg.stop, observer);
  if (res.final_state.k != last_written) snap(res.final_state);

  {
    auto csv = out.open("diagnostics.csv");
    write_diagnostics_csv(res.history, csv);
  }
  const Diagnostics& d = res.final_state.diag;
  json& s = out.summary();
  s["stop_reason"] = res.stop_reason;
  s["converged"] = res.converged;
  s["steps"] = res.final_state.k;
  s["final_t"] = d.t;
  s["E_h"] = num(d.E_h);
  s["E_ht"] = num(d.E_ht);
  s["s_k"] = num(d.s_k);
  s["min_abs_m"] = d.min_abs_m;
  s["t_extinct"] = res.t_extinct ? json(*res.t_extinct) : json(nullptr);
  s["extinct_cell"] = res.extinct_cell;
  s["rejected_steps"] = res.rejected_steps;
  s["energy_warnings"] = res.energy_warnings;
  s["max_energy_increase"] = res.max_energy_increase;
}

void run_penalty(const ExperimentConfig& cfg, Output& out) {
  auto mesh = build_mesh(cfg.mesh);
  out.manifest()["mesh"] = mesh_stats(*mesh);
  P1Space space(mesh);
  PenaltyOptions po;
  po.tol = cfg.penalty.tol;
  const auto results = penalty_continuation(space, cfg.model.S, cfg.model.c,
                                            eps_schedule(cfg.penalty.eps_first, cfg.penalty.eps_last), po);
  {
    auto csv = out.open("penalty.csv");
    csv << "eps,violation_l1,violation_l2,complementarity,a_l2,functional,newton_iterations,r_pde,r_feas,r_comp\n";
    for (const PenaltyResult& r : results) {
      csv << format_double(r.eps) << ',' << format_double(r.violation_l1) << ',' << format_double(r.violation_l2)
          << ',' << format_double(r.complementarity) << ',' << format_double(r.a_l2) << ','
          << format_double(r.functional) << ',' << r.newton_iterations << ',' << format_double(r.kkt.r_pde) << ','
          << format_double(r.kkt.r_feas) << ',' << format_double(r.kkt.r_comp) << '\n';
    }
  }
  const PenaltyResult& last = results.back();
  // γ = 1, r = 1: |m|² = a along ∇p, u = (1 + a)∇p.
  const VectorFieldP0 g = gradient_per_triangle(space, last.p);
  VectorFieldP0 m(g.size()), u(g.size());
  for (std::size_t t = 0; t < g.size(); ++t) {
    const double gn = norm(g[t]);
    m[t] = gn > 0.0 ? (std::sqrt(last.a[t]) / gn) * g[t] : Vec2{};
    u[t] = (1.0 + last.a[t]) * g[t];
  }
  write_vtk(make_snapshot(*mesh, last.p, m, u, "netmorph penalty eps=" + format_double(last.eps)),
            out.path("penalty_final.vtk"));
  json& s = out.summary();
  s["eps"] = last.eps;
  s["violation_l1"] = last.violation_l1;
  s["complementarity"] = last.complementarity;
  s["a_l2"] = last.a_l2;
  s["r_pde"] = last.kkt.r_pde;
  s["r_feas"] = last.kkt.r_feas;
  s["r_comp"] = last.kkt.r_comp;
  const JValue j = j_functional(space, last.p, cfg.model.S, cfg.model.c);
  s["J"] = j.value;
  s["feasible"] = j.feasible;
}

void run_variational(const ExperimentConfig& cfg, Output& out) {
  auto mesh = build_mesh(cfg.mesh);
  out.manifest()["mesh"] = mesh_stats(*mesh);
  P1Space space(mesh);
  const VariationalResult v = variational_state(space, cfg.model, cfg.variational);
  const VectorFieldP0 g = gradient_per_triangle(space, v.p0);
  write_vtk(make_snapshot(*mesh, v.p0, v.m0, velocity(v.m0, g, cfg.model.r), "netmorph stationary"),
            out.path("stationary.vtk"));
  long active = 0;
  for (auto a : v.active_set) active += a;
  json& s = out.summary();
  s["alpha"] = cfg.variational.alpha.value_or(threshold_alpha(cfg.model.gamma, cfg.model.c));
  s["convexity_threshold"] = convexity_threshold(cfg.model.gamma, cfg.model.c, cfg.model.r.min_value(mesh->num_triangles()));
  s["stationarity_residual"] = v.stationarity_residual;
  s["functional"] = v.functional;
  s["iterations"] = v.iterations;
  s["last_relative_change"] = v.last_relative_change;
  s["active_cells"] = active;
}

void run_oned_extinction(const ExperimentConfig& cfg, Output& out) {
  const OnedConfig& oc = cfg.oned;
  const double S = cfg.model.S.constant_value().value();
  const oned::Profile1D prof = oned::make_profile(oc.n, [S](double) { return S; }, oc.m0);
  out.manifest()["mesh"] = {{"nodes", prof.size()}, {"dx", prof.dx()}};
  oned::Options1D o;
  o.final_time = oc.final_time;
  o.dt_max = cfg.solver.dt_max;
  o.dt_min = cfg.solver.dt_min;
  o.cfl = oc.cfl;
  o.extinction_threshold = cfg.stop.extinction_threshold;
  o.record_stride = oc.record_stride;
  const oned::Trajectory1D tr = oned::integrate_1d(prof, {cfg.model.D, cfg.model.c, cfg.model.gamma}, o);
  {
    auto csv = out.open("profile.csv");
    write_profile_csv(prof.x, tr.snapshot_t, tr.snapshots, csv);
  }
  {
    auto csv = out.open("norms.csv");
    csv << "t,l1,linf\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      csv << format_double(tr.t[i]) << ',' << format_double(tr.l1[i]) << ',' << format_double(tr.linf[i]) << '\n';
    }
  }
  json& s = out.summary();
  s["stop_reason"] = tr.stop_reason;
  s["final_t"] = tr.t.back();
  s["l1_initial"] = tr.l1.front();
  s["l1_final"] = tr.l1.back();
  s["t_extinct"] = tr.t_extinct ? json(*tr.t_extinct) : json(nullptr);
  s["extinct_node"] = tr.extinct_node;
  const double gamma = cfg.model.gamma;
  const double B_sup = prof.B.back();
  double m_sup = 0.0;
  for (double v : prof.m) m_sup = std::max(m_sup, std::abs(v));
  if (gamma <= 1.0 && cfg.model.c * B_sup < oned::z_constant(gamma) && m_sup > 0.0) {
    const double delta = oned::breakdown_margin(gamma, cfg.model.c, B_sup, m_sup);
    s["margin"] = delta;
    if (gamma < 0.5 && delta > 0.0) s["t_extinct_bound"] = tr.l1.front() / delta;
  }
}

void run_oned_classify(const ExperimentConfig& cfg, Output& out) {
  const OnedConfig& oc = cfg.oned;
  const double gamma = cfg.model.gamma;
  auto csv = out.open("classify.csv");
  csv << "cB,count,m,stability\n";
  json transitions = json::array();
  int prev = -1;
  for (int i = 0; i < oc.cb_count; ++i) {
    const double cB = oc.cb_count == 1 ? oc.cb_min : oc.cb_min + (oc.cb_max - oc.cb_min) * i / (oc.cb_count - 1);
    const oned::ClassificationReport rep = oned::classify_stationary(cB, gamma);
    for (const auto& p : rep.points) {
      csv << format_double(cB) << ',' << rep.count() << ',' << format_double(p.m) << ',' << to_string(p.stability)
          << '\n';
    }
    if (prev >= 0 && rep.count() != prev) transitions.push_back({{"cB", cB}, {"from", prev}, {"to", rep.count()}});
    prev = rep.count();
  }
  json& s = out.summary();
  s["gamma"] = gamma;
  if (gamma <= 1.0) s["Z_gamma"] = oned::z_constant(gamma);
  s["transitions"] = transitions;
}

void run_convergence(const ExperimentConfig& cfg, Output& out) {
  using std::numbers::pi;
  const double r = cfg.model.r(0);
  const auto exact = [](Vec2 x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
  const auto grad = [](Vec2 x) {
    return Vec2{pi * std::cos(pi * x.x) * std::sin(pi * x.y), pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
  };
  const SourceTerm source(SourceTerm::Fn([&](Vec2 x) { return 2.0 * pi * pi * r * exact(x); }));
  auto csv = out.open("convergence.csv");
  csv << "n,h,l2_error,h1_error,l2_rate,h1_rate\n";
  json rows = json::array();
  double pe2 = 0, pe1 = 0, ph = 0;
  for (int l = 0; l < cfg.convergence.levels; ++l) {
    const int n = cfg.convergence.base_n << l;
    auto mesh = std::make_shared<const Mesh>(generate_unit_square(n));
    P1Space space(mesh);
    const ScalarFieldP1 p = solve_pressure(space, VectorFieldP0(mesh->num_triangles()), cfg.model.r, source);
    const double e2 = p1_l2_error(space, p, exact);
    const double e1 = p1_h1_error(space, p, grad);
    const double h = mesh->h_max();
    const double r2 = l ? std::log(pe2 / e2) / std::log(ph / h) : std::nan("");
    const double r1 = l ? std::log(pe1 / e1) / std::log(ph / h) : std::nan("");
    csv << n << ',' << format_double(h) << ',' << format_double(e2) << ',' << format_double(e1) << ','
        << format_double(r2) << ',' << format_double(r1) << '\n';
    rows.push_back({{"n", n}, {"h", h}, {"l2_error", e2}, {"h1_error", e1}, {"l2_rate", num(r2)}, {"h1_rate", num(r1)}});
    pe2 = e2;
    pe1 = e1;
    ph = h;
  }
  out.summary()["levels"] = rows;
}

void run_mesh_gen(const ExperimentConfig& cfg, Output& out) {
  auto mesh = build_mesh(cfg.mesh);
  out.manifest()["mesh"] = mesh_stats(*mesh);
  {
    auto f = out.open("mesh.txt");
    write_mesh(*mesh, f);
  }
  out.summary()["mesh"] = mesh_stats(*mesh);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (cfg.kind && *cfg.kind != kind) {
    throw ConfigError(std::string("experiment.kind: config is for '") + to_string(*cfg.kind) + "', not '" +
                      to_string(kind) + "'");
  }
  validate_config(cfg, kind);
  ExperimentResult res;
  Output out(cfg, kind, res);
  switch (kind) {
    case ExperimentKind::kSimulate:
      run_simulate(cfg, out);
      break;
    case ExperimentKind::kStationaryPenalty:
      run_penalty(cfg, out);
      break;
    case ExperimentKind::kStationaryVariational:
      run_variational(cfg, out);
      break;
    case ExperimentKind::kOnedExtinction:
      run_oned_extinction(cfg, out);
      break;
    case ExperimentKind::kOnedClassify:
      run_oned_classify(cfg, out);
      break;
    case ExperimentKind::kConvergenceStudy:
      run_convergence(cfg, out);
      break;
    case ExperimentKind::kMeshGen:
      run_mesh_gen(cfg, out);
      break;
  }
  out.finish();
  return res;
}

}  // namespace netmorph
