#include <doctest.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "netmorph/dynamics.hpp"
#include "netmorph/scaling.hpp"

using namespace netmorph;

namespace {

std::shared_ptr<const Mesh> diamond(double h) { return std::make_shared<const Mesh>(generate_diamond(h)); }

ModelParams params(double D, double c, double gamma, double rho) {
  ModelParams p;
  p.D = D;
  p.c = c;
  p.gamma = gamma;
  p.rho = rho;
  return p;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("forcing term") {
    const ModelParams p = params(0.0, 3.0, 0.5, 0.25);
    const Vec2 m{0.6, -0.8}, g{0.2, 0.1};
    const Vec2 f = relaxation_forcing(m, g, p);
    const double act = 9.0 * (0.2 * 0.6 - 0.1 * 0.8);
    const double rel = 1.0 / std::sqrt(1.0 + 0.25);
    CHECK(f.x == doctest::Approx(act * 0.2 - rel * 0.6).epsilon(1e-14));
    CHECK(f.y == doctest::Approx(act * 0.1 + rel * 0.8).epsilon(1e-14));
    CHECK_THROWS_AS(relaxation_forcing({0, 0}, g, params(0, 1, 0.5, 0.0)), std::domain_error);
    CHECK(relaxation_forcing({0, 0}, g, params(0, 1, 1.5, 0.0)) == Vec2{0, 0});
  }

  TEST_CASE("activation step rule") {
    // s = c²g² = 100
    CHECK(activation_dt(0.0, 2.0, 5.0, 1.0) == 0.005);
    CHECK(activation_dt(0.004, 2.0, 5.0, 1.0) == 0.004);
    CHECK(activation_dt(0.0005, 2.0, 5.0, 1.0) == 0.005);  // lower edge is outside
    CHECK(activation_dt(0.0095, 2.0, 5.0, 1.0) == 0.005);
    CHECK(activation_dt(0.004, 2.0, 5.0, 0.001) == 0.001);
    CHECK(activation_dt(0.3, 0.0, 5.0, 0.01) == 0.01);
  }

  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(validate(params(0.1, 1, 0.5, 1e-12), 4, false));
    CHECK_THROWS_AS(validate(params(-1, 1, 0.5, 1e-12), 4, false), std::invalid_argument);
    CHECK_THROWS_AS(validate(params(0.1, 0, 0.5, 1e-12), 4, false), std::invalid_argument);
    CHECK_THROWS_AS(validate(params(0.1, 1, 0.0, 0.0), 4, false), std::invalid_argument);
    CHECK_NOTHROW(validate(params(0.1, 1, 0.0, 0.0), 4, true));
    CHECK_NOTHROW(validate(params(0.1, 1, 1.0, 0.0), 4, false));
  }

  TEST_CASE("sparsity index") {
    auto mesh = diamond(0.3);
    const double area = mesh->total_area();
    const VectorFieldP0 u(mesh->num_triangles(), Vec2{0.0, 2.0});
    CHECK(sparsity_index(*mesh, u) == doctest::Approx(1.0 / std::sqrt(area)).epsilon(1e-13));
    VectorFieldP0 v = u;
    for (auto& x : v) x = 7.5 * x;
    CHECK(sparsity_index(*mesh, v) == doctest::Approx(sparsity_index(*mesh, u)).epsilon(1e-13));
    CHECK(std::isnan(sparsity_index(*mesh, VectorFieldP0(mesh->num_triangles()))));
    // Concentrating the same mass raises the index.
    VectorFieldP0 w(mesh->num_triangles());
    w[0] = {1.0, 0.0};
    CHECK(sparsity_index(*mesh, w) > sparsity_index(*mesh, u));
  }

  TEST_CASE("strip datum integrates to the strip area") {
    auto mesh = diamond(0.05);
    const auto m = strip_initial_datum(*mesh);
    double s = 0.0;
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      CHECK(m[t].x >= 0.0);
      CHECK(m[t].x <= 1.0);
      CHECK(m[t].y == 0.0);
      s += mesh->area(t) * m[t].x;
    }
    CHECK(s == doctest::Approx(0.3 * 0.025).epsilon(1e-12));
    const auto shifted = strip_initial_datum(*mesh, 1e-3);
    for (int t = 0; t < mesh->num_triangles(); ++t) CHECK(shifted[t].x == doctest::Approx(m[t].x + 1e-3));
  }

  TEST_CASE("without a source the step is pure relaxation") {
    auto mesh = diamond(0.4);
    for (double gamma : {1.0, 0.5, 2.0}) {
      ModelParams p = params(0.0, 4.0, gamma, 0.01);
      p.S = 0.0;
      Stepper st(mesh, p);
      VectorFieldP0 m0(mesh->num_triangles());
      for (int t = 0; t < mesh->num_triangles(); ++t) m0[t] = {0.1 + 0.01 * t, -0.2};
      const StepState s0 = st.initial_state(m0);
      const StepState s1 = st.imex_step(s0, 0.01);
      for (int t = 0; t < mesh->num_triangles(); ++t) {
        const double k = gamma == 1.0 ? 1.0 : std::pow(norm2(m0[t]) + 0.01, gamma - 1.0);
        CHECK(s1.m[t].x == doctest::Approx(m0[t].x * (1 - 0.01 * k)).epsilon(1e-14));
        CHECK(s1.m[t].y == doctest::Approx(m0[t].y * (1 - 0.01 * k)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("energy never increases along adaptive runs") {
    auto mesh = diamond(0.15);
    for (double gamma : {0.5, 1.0, 1.5}) {
      for (ConductanceBC bc : {ConductanceBC::kDirichlet, ConductanceBC::kNeumann}) {
        ModelParams p = params(0.2, 5.0, gamma, 1e-6);
        p.m_bc = bc;
        StepperOptions o;
        o.energy_policy = EnergyPolicy::kStrict;
        Stepper st(mesh, p, o);
        StopRule stop;
        stop.final_time = 0.2;
        RunResult r;
        CHECK_NOTHROW(r = st.run(st.initial_state(strip_initial_datum(*mesh, 0.05)), stop));
        CHECK(r.stop_reason == "final time reached");
        CHECK(r.final_state.t == doctest::Approx(0.2));
        for (std::size_t k = 1; k < r.history.size(); ++k) {
          const double e0 = r.history[k - 1].E_h;
          CHECK(r.history[k].E_h <= e0 + 1e-10 * std::max(1.0, std::abs(e0)));
        }
      }
    }
  }

  TEST_CASE("runs are deterministic") {
    auto mesh = diamond(0.2);
    const ModelParams p = params(0.1, 5.0, 0.5, 1e-12);
    StopRule stop;
    stop.final_time = 0.05;
    Stepper a(mesh, p), b(mesh, p);
    const auto ra = a.run(a.initial_state(strip_initial_datum(*mesh)), stop);
    const auto rb = b.run(b.initial_state(strip_initial_datum(*mesh)), stop);
    REQUIRE(ra.history.size() == rb.history.size());
    for (std::size_t k = 0; k < ra.history.size(); ++k) {
      CHECK(ra.history[k].E_h == rb.history[k].E_h);
      CHECK(ra.history[k].t == rb.history[k].t);
    }
    CHECK(ra.final_state.m == rb.final_state.m);
  }

  TEST_CASE("zero final time keeps the initial state") {
    auto mesh = diamond(0.3);
    Stepper st(mesh, params(0.1, 5.0, 0.5, 1e-12));
    StopRule stop;
    stop.final_time = 0.0;
    const auto r = st.run(st.initial_state(strip_initial_datum(*mesh)), stop);
    CHECK(r.history.size() == 1);
    CHECK(r.final_state.k == 0);
  }

  TEST_CASE("extinction time of pure singular relaxation") {
    // ∂t m = −|m|^{2γ−2} m with γ = 0: |m(t)|² = |m₀|² − 2t.
    auto mesh = diamond(0.4);
    ModelParams p = params(0.0, 1.0, 0.0, 0.0);
    p.S = 0.0;
    StepperOptions o;
    o.relaxation_cfl = 0.25;
    Stepper st(mesh, p, o);
    StopRule stop;
    stop.kind = StopKind::kExtinction;
    const double m0 = 1e-2;
    const auto r = st.run(st.initial_state(VectorFieldP0(mesh->num_triangles(), Vec2{m0, 0.0})), stop);
    REQUIRE(r.t_extinct.has_value());
    const double exact = 0.5 * m0 * m0;
    CHECK(*r.t_extinct >= exact);
    CHECK(*r.t_extinct <= 1.2 * exact);
  }

  TEST_CASE("time limit ends a stationary run without convergence") {
    auto mesh = diamond(0.3);
    Stepper st(mesh, params(0.1, 5.0, 0.5, 1e-12));
    StopRule stop;
    stop.kind = StopKind::kStationary;
    stop.tol_E = 1e-300;
    stop.max_time = 0.01;
    const auto r = st.run(st.initial_state(strip_initial_datum(*mesh)), stop);
    CHECK_FALSE(r.converged);
    CHECK(r.final_state.t >= 0.01);
  }

  TEST_CASE("scaling turns every coefficient into its dimensionless form") {
    // Substitute m = m̄m̃, p = p̄p̃, x = x̄x̃, t = t̄t̃ term by term.
    for (double gamma : {0.5, 1.0, 1.5}) {
      PhysicalParams raw;
      raw.D = 0.3;
      raw.c = 2.0;
      raw.alpha = 0.7;
      raw.r = 0.05;
      raw.gamma = gamma;
      raw.x_bar = 3.0;
      raw.m_bar = 4.0;
      raw.S_bar = 5.0;
      const ScaledParams s = nondimensionalize(raw);
      // Relaxation α|m|^{2(γ−1)}m must carry coefficient 1.
      CHECK(s.t_bar * raw.alpha * std::pow(raw.m_bar, 2 * (gamma - 1)) == doctest::Approx(1.0));
      // Pressure equation divided by p̄m̄²/x̄²: source coefficient 1, r becomes r/m̄².
      CHECK(raw.S_bar * raw.x_bar * raw.x_bar / (s.p_bar * raw.m_bar * raw.m_bar) == doctest::Approx(1.0));
      CHECK(s.r == doctest::Approx(raw.r / (raw.m_bar * raw.m_bar)));
      // Activation: (t̄/m̄)·c²·m̄·p̄²/x̄².
      CHECK(s.c * s.c == doctest::Approx(s.t_bar * raw.c * raw.c * s.p_bar * s.p_bar / (raw.x_bar * raw.x_bar)));
      // Diffusion: (t̄/m̄)·D²·m̄/x̄².
      CHECK(s.D * s.D == doctest::Approx(s.t_bar * raw.D * raw.D / (raw.x_bar * raw.x_bar)));
    }
    PhysicalParams bad;
    bad.m_bar = 0.0;
    CHECK_THROWS_AS(nondimensionalize(bad), std::invalid_argument);
  }
}
