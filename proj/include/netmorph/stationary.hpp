#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "netmorph/fem.hpp"

namespace netmorph {

// Roots of c|u| = z^{γ−1}(1 + z²) --------------------------------------------

struct RootSet {
  std::vector<double> roots;  // ascending
  std::optional<double> z1;   // branch decreasing in |u| (γ < 1 only)
  std::optional<double> z2;   // branch increasing in |u|
};

/// Positive solutions z of c|u| = z^{γ−1}(1+z²), to relative 1e-12.
/// γ < 1/2 throws std::invalid_argument.
RootSet solve_z(double u_norm, double gamma, double c);

/// ((1−γ)/(1+γ))^{(γ−1)/2} c^{−1/4}; requires 1/2 <= γ < 1 and c > 0.
double threshold_alpha(double gamma, double c);

/// Smallest α for which the discrete F_α is convex:
/// (r(1−γ)/(1+γ))^{(γ−1)/2} / c.
double convexity_threshold(double gamma, double c, double r);

// Variational construction (D = 0, 1/2 <= γ < 1) ---------------------------

using CellMask = std::vector<std::uint8_t>;

/// Triangles whose centroid satisfies the predicate.
CellMask cells_where(const Mesh& mesh, const std::function<bool(Vec2)>& pred);
/// {(x₁ − 1)² − x₂² < 1/4}, evaluated at centroids.
CellMask hyperbola_set(const Mesh& mesh);

/// F[p] = ∫ r|∇p|²/2 + χ_A c^{2/(γ−1)} (γ−1)/(2γ) (|∇p|^{2γ/(γ−1)} − α^{2γ/(γ−1)})₋ − ∫ S p,
/// with (x)₋ = min(x, 0), on the P1 space with its Dirichlet vertices.
class FAlphaProblem {
 public:
  /// Throws std::invalid_argument unless 1/2 <= γ < 1 and α exceeds
  /// convexity_threshold(γ, c, min r).
  FAlphaProblem(const P1Space& space, CellMask active, double alpha, double gamma, double c,
                CellCoefficient r, SourceTerm source);

  double value(const ScalarFieldP1& p) const;
  /// Gradient as a P1 dual vector; zero at Dirichlet vertices.
  std::vector<double> gradient(const ScalarFieldP1& p) const;

  /// |m₀| on a cell with gradient norm s (0 when the cell is cut off).
  double conductance_norm(int t, double s) const;

  const P1Space& space() const { return *space_; }
  const CellMask& active() const { return active_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double c() const { return c_; }
  const CellCoefficient& r() const { return r_; }

 private:
  const P1Space* space_;
  CellMask active_;
  double alpha_, gamma_, c_;
  CellCoefficient r_;
  std::vector<double> load_;
};

struct VariationalResult {
  ScalarFieldP1 p0;
  VectorFieldP0 m0;
  CellMask active_set;  // A ∩ {|∇p₀| > α}
  double stationarity_residual = 0.0;
  double functional = 0.0;
  int iterations = 0;
  double last_relative_change = 0.0;
};

struct MinimizeOptions {
  double rel_change_tol = 1e-15;
  int max_iter = 10000;
  double armijo_c = 1e-4;
  double min_step = 1e-18;
  const ScalarFieldP1* initial = nullptr;
};

/// H¹-preconditioned gradient descent with Armijo backtracking.
/// Throws std::runtime_error if no admissible step above min_step exists.
VariationalResult f_alpha_minimize(const FAlphaProblem& problem, const MinimizeOptions& opts = {});

/// m₀ = χ χ_{|∇p|>α} c^{1/(γ−1)} |∇p|^{(2−γ)/(γ−1)} ∇p.
VectorFieldP0 construct_m0(const P1Space& space, const ScalarFieldP1& p0, const CellMask& active,
                           double alpha, double gamma, double c);

/// ‖c²(∇p⊗∇p)m − |m|^{2(γ−1)}m‖_{L2}, taking the defect as 0 where m = 0.
double stationarity_residual(const P1Space& space, const VectorFieldP0& m0, const ScalarFieldP1& p0,
                             double gamma, double c);

/// m = (1 + amplitude·η)m₀ with η uniform on [−1/2, 1/2] per triangle and
/// ‖η‖_{L2} = 1. Deterministic for a given seed.
VectorFieldP0 perturb(const Mesh& mesh, const VectorFieldP0& m0, double amplitude, std::uint64_t seed);

// Penalty method (γ = 1, D = 0) --------------------------------------------

struct KktResiduals {
  double r_pde = 0.0;   // H⁻¹-type dual norm of the equation residual
  double r_feas = 0.0;  // ‖(c²|∇p|² − 1)₊‖_{L1}
  double r_comp = 0.0;  // ‖a²(c²|∇p|² − 1)‖_{L1}
};

struct PenaltyResult {
  double eps = 0.0;
  ScalarFieldP1 p;
  std::vector<double> a;  // a_ε per triangle
  double violation_l1 = 0.0;      // ‖(|∇p|² − 1/c²)₊‖_{L1}
  double violation_l2 = 0.0;      // ‖(|∇p|² − 1/c²)₊‖_{L2}
  double complementarity = 0.0;   // ‖ε a²‖_{L1}
  double a_l2 = 0.0;              // ‖a‖_{L2}
  double functional = 0.0;        // F_ε[p]
  double gradient_norm = 0.0;     // relative to the load
  int newton_iterations = 0;
  KktResiduals kkt;
};

struct PenaltyOptions {
  double tol = 1e-10;
  int max_newton = 200;
  double armijo_c = 1e-4;
  /// Accept a stalled line search if the relative gradient is below this.
  double stall_tol = 1e-7;
};

/// Minimizer of F_ε[p] = ½∫|∇p|² + (1/4ε)∫(|∇p|² − 1/c²)₊² − ∫Sp by damped
/// Newton with Armijo backtracking. `initial` warm-starts the iteration.
PenaltyResult penalty_solve(const P1Space& space, const SourceTerm& source, double c, double eps,
                            const PenaltyOptions& opts = {}, const ScalarFieldP1* initial = nullptr);

/// Warm-started ε continuation in the given order.
std::vector<PenaltyResult> penalty_continuation(const P1Space& space, const SourceTerm& source, double c,
                                                const std::vector<double>& eps_schedule,
                                                const PenaltyOptions& opts = {});

/// Geometric schedule 10^{-first} … 10^{-last}.
std::vector<double> eps_schedule(int first_exp, int last_exp);

KktResiduals kkt_residuals(const P1Space& space, const ScalarFieldP1& p, const std::vector<double>& a_sq,
                           double c, const SourceTerm& source);

struct JValue {
  double value = 0.0;
  bool feasible = true;
  std::vector<std::uint8_t> feasible_cells;
};

/// J[p] = ∫ |∇p|²/2 − S p and triangle-wise feasibility of c²|∇p|² <= 1 (+ slack).
JValue j_functional(const P1Space& space, const ScalarFieldP1& p, const SourceTerm& source, double c,
                    double slack = 1e-12);

/// Load vector ∫ S φ_i with Dirichlet entries zeroed.
std::vector<double> load_vector(const P1Space& space, const SourceTerm& source);

}  // namespace netmorph
