#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "netmorph/oned.hpp"

using namespace netmorph::oned;

namespace {

// inf_{m>0} sqrt(h_γ(m)) by a log grid followed by golden section.
double brute_z(double gamma) {
  const auto f = [&](double y) { return std::sqrt(h_gamma(std::exp(y), gamma)); };
  double best = 0.0, fbest = f(0.0);
  for (int i = -4000; i <= 4000; ++i) {
    const double y = i * 0.005;
    if (f(y) < fbest) { fbest = f(y); best = y; }
  }
  double a = best - 0.005, b = best + 0.005;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int k = 0; k < 200; ++k) {
    const double c1 = b - g * (b - a), c2 = a + g * (b - a);
    if (f(c1) < f(c2)) b = c2; else a = c1;
  }
  return f(0.5 * (a + b));
}

// Stationary points from the sign pattern of the growth factor on a log grid.
std::vector<StationaryPoint> brute_classify(double cB, double gamma) {
  const auto g = [&](double m) {
    const double q = 1 + m * m;
    return cB * cB / (q * q) - std::pow(m, 2 * (gamma - 1));
  };
  std::vector<StationaryPoint> pos;
  const int N = 200000;
  double m0 = 1e-200, g0 = g(m0);
  for (int i = 1; i <= N; ++i) {
    const double m1 = 1e-200 * std::pow(10.0, 208.0 * i / N);
    const double g1 = g(m1);
    if ((g0 < 0) != (g1 < 0)) {
      double a = m0, b = m1;
      for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (a + b);
        if ((g(mid) < 0) == (g(a) < 0)) a = mid; else b = mid;
      }
      pos.push_back({0.5 * (a + b), g0 > 0 ? Stability::kStable : Stability::kUnstable});
    }
    m0 = m1;
    g0 = g1;
  }
  const Stability zero = g(1e-250) < 0 ? Stability::kStable : Stability::kUnstable;
  std::vector<StationaryPoint> all;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) all.push_back({-it->m, it->stability});
  all.push_back({0.0, zero});
  all.insert(all.end(), pos.begin(), pos.end());
  return all;
}

}  // namespace

TEST_SUITE("oned") {
  TEST_CASE("Z constant against a direct minimization") {
    for (double g : {-0.75, -0.5, 0.0, 0.25, 0.5, 0.75, 0.9}) {
      CHECK(z_constant(g) == doctest::Approx(brute_z(g)).epsilon(1e-9));
      const HMin hm = h_gamma_min(g);
      CHECK(hm.min == doctest::Approx(z_constant(g) * z_constant(g)).epsilon(1e-12));
      CHECK(h_gamma(hm.argmin, g) == doctest::Approx(hm.min).epsilon(1e-12));
    }
    CHECK(z_constant(1.0) == 1.0);
    CHECK(z_constant(-1.0) == 1.0);
    CHECK(z_constant(0.5) == doctest::Approx(1.7547653506).epsilon(1e-9));
  }

  TEST_CASE("classification against the sign pattern of the growth factor") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ug(0.5, 1.5), uc(0.05, 4.0);
    for (int trial = 0; trial < 60; ++trial) {
      const double gamma = trial == 0 ? 1.0 : ug(rng);
      // Near γ = 1 the lower root falls below the scanned range.
      if (gamma > 0.9 && gamma < 1.0) continue;
      const double cB = uc(rng);
      if (gamma < 1.0 && std::abs(cB / z_constant(gamma) - 1.0) < 1e-6) continue;
      const auto rep = classify_stationary(cB, gamma);
      const auto ref = brute_classify(cB, gamma);
      REQUIRE(rep.count() == static_cast<int>(ref.size()));
      for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(rep.points[i].m == doctest::Approx(ref[i].m).epsilon(1e-8));
        CHECK(rep.points[i].stability == ref[i].stability);
        CHECK(ode_rhs(rep.points[i].m, cB, gamma) == doctest::Approx(0.0).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("semistable point at the critical source") {
    const double g = 0.5;
    const auto rep = classify_stationary(z_constant(g), g);
    REQUIRE(rep.count() == 3);
    CHECK(rep.points[2].stability == Stability::kSemistable);
    CHECK(rep.points[2].m == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
    CHECK(classify_stationary(0.0, g).count() == 1);
    CHECK_THROWS_AS(classify_stationary(1.0, 0.25), std::invalid_argument);
  }

  TEST_CASE("profile integral is exact for linear sources") {
    const auto p = make_profile(10, [](double x) { return 1 + 2 * x; }, 0.5);
    REQUIRE(p.size() == 11);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.B[i] == doctest::Approx(p.x[i] + p.x[i] * p.x[i]).epsilon(1e-14));
      CHECK(p.m[i] == 0.5);
    }
    const auto dp = pressure_gradient_1d(p);
    CHECK(dp[10] == doctest::Approx(-2.0 / 1.25));
  }

  TEST_CASE("pure relaxation decays exponentially for gamma 1") {
    const auto p = make_profile(20, [](double) { return 0.0; }, 0.8);
    Options1D o;
    o.final_time = 1.0;
    o.dt_max = 1e-4;
    o.stop_on_extinction = false;
    const auto tr = integrate_1d(p, {0.0, 1.0, 1.0}, o);
    // Explicit Euler with dt = 1e-4 is accurate to about dt/2 relative.
    for (double m : tr.final_m) CHECK(m == doctest::Approx(0.8 * std::exp(-1.0)).epsilon(1e-4));
    CHECK(tr.t.back() == doctest::Approx(1.0));
  }

  TEST_CASE("Neumann diffusion conserves the trapezoidal integral") {
    const auto p = make_profile(50, [](double) { return 0.0; }, [](double x) { return 1 + std::cos(3 * x); });
    Options1D o;
    o.final_time = 0.1;
    o.stop_on_extinction = false;
    // γ = 1 with cB = 0 gives rate −1, so the integral decays like the pure ODE.
    const auto tr = integrate_1d(p, {0.3, 1.0, 1.0}, o);
    const double ratio = tr.l1.back() / tr.l1.front();
    double decay = 1.0;
    double t = 0.0;
    for (std::size_t k = 1; k < tr.t.size(); ++k) {
      decay *= 1.0 - (tr.t[k] - t);
      t = tr.t[k];
    }
    CHECK(ratio == doctest::Approx(decay).epsilon(1e-10));
  }

  TEST_CASE("singular relaxation needs the extinction stop") {
    const auto p = make_profile(10, [](double) { return 0.0; }, 0.1);
    Options1D o;
    o.stop_on_extinction = false;
    CHECK_THROWS_AS(integrate_1d(p, {0.0, 1.0, 0.25}, o), std::domain_error);
    o.stop_on_extinction = true;
    const auto tr = integrate_1d(p, {0.0, 1.0, 0.25}, o);
    REQUIRE(tr.t_extinct.has_value());
    // ṁ = −m^{−1/2} gives T = (2/3) m0^{3/2}.
    CHECK(*tr.t_extinct == doctest::Approx(2.0 / 3.0 * std::pow(0.1, 1.5)).epsilon(0.05));
  }

  TEST_CASE("breakdown margin") {
    const double c = 0.5, B = 1.0;
    CHECK(breakdown_margin(1.0, c, B, 2.0) == doctest::Approx(1 - c * c * B * B).epsilon(1e-10));
    CHECK(breakdown_margin(0.5, 0.5, 1.0, 1.0) > 0.0);
    CHECK_THROWS(breakdown_margin(0.5, 2.0, 1.0, 1.0));
    CHECK(l1_norm({1.0, -1.0, 1.0}, 0.5) == doctest::Approx(1.0));
  }
}
