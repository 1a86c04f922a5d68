#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netmorph/fem.hpp"
#include "netmorph/mixed.hpp"

namespace netmorph {

/// Coefficients of the pressure/conductance system
///   −∇·[(rI + m⊗m)∇p] = S,   ∂t m − D²Δm = c²(∇p⊗∇p)m − |m|_ρ^{2(γ−1)} m.
struct ModelParams {
  double D = 1e-3;
  double c = 50.0;
  double gamma = 0.5;
  CellCoefficient r{0.1};
  double rho = 1e-12;
  SourceTerm S{1.0};
  ConductanceBC m_bc = ConductanceBC::kDirichlet;
};

/// Throws std::invalid_argument naming the offending parameter.
/// `extinction_mode` allows γ < 1 with ρ = 0.
void validate(const ModelParams& params, int num_cells, bool extinction_mode);

/// |m|_ρ = sqrt(m₁² + m₂² + ρ).
inline double reg_abs(Vec2 m, double rho) { return std::sqrt(norm2(m) + rho); }

/// f(m, ∇p) = c²(∇p⊗∇p)m − |m|_ρ^{2(γ−1)} m. Throws std::domain_error for
/// γ < 1, ρ = 0 and m = 0.
Vec2 relaxation_forcing(Vec2 m, Vec2 grad_p, const ModelParams& params);

struct Diagnostics {
  long k = 0;
  double t = 0.0;
  double dt = 0.0;
  double E_h = 0.0;
  double E_ht = std::numeric_limits<double>::quiet_NaN();
  double m_ht = std::numeric_limits<double>::quiet_NaN();
  double s_k = std::numeric_limits<double>::quiet_NaN();
  double grad_inf = 0.0;
  double min_abs_m = 0.0;
};

struct StepState {
  long k = 0;
  double t = 0.0;
  double delta = 0.0;  // δᵏ, the step that produced this state (δ¹ proposal at k = 0)
  VectorFieldP0 m;
  ScalarFieldP1 p;
  FluxFieldRT0 sigma;
  VectorFieldP0 grad_p;
  Diagnostics diag;
};

enum class EnergyPolicy {
  kWarn,    // log and continue
  kStrict,  // abort the run
  kRetry,   // halve δ and redo the step; warn if δ_min is reached
};

struct StepperOptions {
  double dt_max = 1e-2;
  double dt_min = 1e-14;
  /// When > 0, δ is additionally limited to θ·min_T |m_T|_ρ^{2(1−γ)} (γ < 1),
  /// the inverse relaxation rate. 0 disables the limit.
  double relaxation_cfl = 0.0;
  EnergyPolicy energy_policy = EnergyPolicy::kWarn;
  double energy_tol = 1e-10;
  double pressure_tol = 1e-10;
};

enum class StopKind { kFinalTime, kStationary, kExtinction };

struct StopRule {
  StopKind kind = StopKind::kFinalTime;
  double final_time = 1.0;
  double tol_E = 1e-5;
  double tol_m = std::numeric_limits<double>::infinity();
  double extinction_threshold = 1e-8;
  long max_steps = 10'000'000;
  /// Gives up (converged = false) once t reaches this, for the other kinds.
  double max_time = std::numeric_limits<double>::infinity();
};

struct RunResult {
  StepState final_state;
  std::vector<Diagnostics> history;
  std::string stop_reason;
  bool converged = false;           // stop criterion met (not max_steps)
  std::optional<double> t_extinct;  // T_ex
  int extinct_cell = -1;
  long rejected_steps = 0;
  long energy_warnings = 0;
  double max_energy_increase = 0.0;  // max of E^{k+1} − E^k over accepted steps
};

class EnergyIncreaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// IMEX Euler integrator on a fixed mesh.
class Stepper {
 public:
  Stepper(std::shared_ptr<const Mesh> mesh, ModelParams params, StepperOptions opts = {});

  const Mesh& mesh() const { return *mesh_; }
  const P1Space& p1() const { return p1_; }
  const RT0Space& rt0() const { return rt0_; }
  const ModelParams& params() const { return params_; }
  const StepperOptions& options() const { return opts_; }

  /// State at k = 0: pressure for m0, discrete gradient σ⁰ of m0, δ¹ proposal.
  StepState initial_state(VectorFieldP0 m0);

  /// One step of size delta with explicit forcing at the current state.
  StepState imex_step(const StepState& state, double delta);

  /// Next step size from the activation rule, δ_max and the optional relaxation limit.
  double adapt_dt(const StepState& state) const;

  double discrete_energy(const StepState& state) const;
  Diagnostics diagnostics(const StepState& state, const StepState* prev) const;

  using Observer = std::function<void(const StepState&)>;
  RunResult run(StepState initial, const StopRule& stop, const Observer& observer = {});

  /// max_T |∇p_T| (no factor c).
  static double grad_sup(const VectorFieldP0& grad_p);

 private:
  void refresh_pressure(StepState& s) const;

  std::shared_ptr<const Mesh> mesh_;
  ModelParams params_;
  StepperOptions opts_;
  P1Space p1_;
  RT0Space rt0_;
  MixedDiffusionSolver mixed_;
  mutable PressureSolver pressure_;
};

/// Activation-rule step: keep δᵏ inside (1/(20c²g²), 9/(10c²g²)), else 1/(2c²g²),
/// with g = ‖∇p‖∞; capped by dt_max, and dt_max when g = 0.
double activation_dt(double delta_k, double grad_sup, double c, double dt_max);

/// s = ‖u‖_{L2}/‖u‖_{L1}; NaN when u ≡ 0.
double sparsity_index(const Mesh& mesh, const VectorFieldP0& u);

/// Initial datum of the 2D experiments: m₁ = 1 on {x₁ ≤ 0.3, |x₂| ≤ 0.0125},
/// projected exactly, plus a constant shift, m₂ = 0.
VectorFieldP0 strip_initial_datum(const Mesh& mesh, double shift = 0.0);

}  // namespace netmorph
