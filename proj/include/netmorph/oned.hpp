#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace netmorph::oned {

/// Z_γ = (2/(γ+1)) ((1−γ)/(1+γ))^{(γ−1)/2}, with the limits Z₁ = Z₋₁ = 1.
/// Requires −1 <= γ <= 1.
double z_constant(double gamma);

/// h_γ(m) = m^{2(γ−1)} (1 + m²)², m > 0.
double h_gamma(double m, double gamma);

struct HMin {
  double argmin;  // 0 for γ = 1, +inf for γ = −1 (infimum not attained)
  double min;     // Z_γ²
};
HMin h_gamma_min(double gamma);

/// Uniform grid on [0, 1] with S, B(x) = ∫₀ˣ S (trapezoidal, exact for
/// piecewise linear S) and the conductance m.
struct Profile1D {
  std::vector<double> x;
  std::vector<double> S;
  std::vector<double> B;
  std::vector<double> m;

  std::size_t size() const { return x.size(); }
  double dx() const { return x.size() > 1 ? x[1] - x[0] : 1.0; }
};

/// n cells (n + 1 nodes). S must be >= 0 for B to be monotone.
Profile1D make_profile(int n, const std::function<double(double)>& S, double m0);
Profile1D make_profile(int n, const std::function<double(double)>& S, const std::function<double(double)>& m0);

/// ∂ₓp = −B/(1 + m²) at the nodes.
std::vector<double> pressure_gradient_1d(const Profile1D& profile);

enum class Stability { kStable, kUnstable, kSemistable };
const char* to_string(Stability s);

struct StationaryPoint {
  double m;
  Stability stability;
};

struct ClassificationReport {
  double gamma = 0.0;
  double cB = 0.0;
  std::vector<StationaryPoint> points;  // ascending in m
  int count() const { return static_cast<int>(points.size()); }
};

/// Stationary points of ∂t m = (c²B²/(1+m²)² − |m|^{2(γ−1)}) m and their
/// stability, for γ >= 1/2 and cB >= 0.
ClassificationReport classify_stationary(double cB, double gamma);

/// Right-hand side of the D = 0 ODE at m (0 at m = 0 for γ >= 1/2).
double ode_rhs(double m, double cB, double gamma);

struct Params1D {
  double D = 0.0;
  double c = 1.0;
  double gamma = 1.0;
};

struct Options1D {
  double final_time = 1.0;
  double dt_max = 1e-2;
  double dt_min = 1e-14;
  /// dt <= cfl / max_i |reaction rate_i|.
  double cfl = 0.25;
  /// Stop when min |m| drops below the threshold or a node crosses zero.
  bool stop_on_extinction = true;
  double extinction_threshold = 1e-8;
  long max_steps = 50'000'000;
  /// Keep every stride-th profile (the first and last are always kept).
  long record_stride = 0;
};

struct Trajectory1D {
  std::vector<double> t;
  std::vector<double> l1;    // ‖m(t)‖_{L1} (trapezoidal)
  std::vector<double> linf;  // ‖m(t)‖_{L∞}
  std::vector<double> snapshot_t;
  std::vector<std::vector<double>> snapshots;
  std::optional<double> t_extinct;
  int extinct_node = -1;
  std::vector<double> final_m;
  std::string stop_reason;
};

/// Explicit reaction with backward-Euler diffusion (homogeneous Neumann,
/// centered differences). D = 0 gives per-node explicit Euler.
/// Throws std::domain_error if a node reaches 0 for γ < 1/2 without the
/// extinction stop.
Trajectory1D integrate_1d(const Profile1D& profile, const Params1D& params, const Options1D& opts);

/// δ (γ >= 1/2) or δ̃ (γ < 1/2): minus the supremum over 0 < |m| <= M of
///   c²B²/(1+m²)² − |m|^{2(γ−1)}            (γ >= 1/2)
///   c²B²|m|/(1+m²)² − |m|^{2γ−1}           (γ < 1/2).
/// Requires c·B_sup < Z_γ and −1 <= γ <= 1.
double breakdown_margin(double gamma, double c, double B_sup, double M);

/// Trapezoidal ‖v‖_{L1} on the uniform grid.
double l1_norm(const std::vector<double>& v, double dx);

}  // namespace netmorph::oned
