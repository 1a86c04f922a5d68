#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "netmorph/fem.hpp"

namespace netmorph {

/// Boundary condition for the conductance m.
enum class ConductanceBC { kDirichlet, kNeumann };

/// Two RT0 fields (one per component of m), one flux per edge each.
struct FluxFieldRT0 {
  std::vector<double> s1;
  std::vector<double> s2;

  static FluxFieldRT0 zeros(int num_edges) {
    return {std::vector<double>(num_edges, 0.0), std::vector<double>(num_edges, 0.0)};
  }
};

/// Lowest-order Raviart–Thomas space with unit-flux basis functions
/// ψ_e = s/(2|T|) (x − P) on each triangle, P the vertex opposite e.
/// With Neumann m the boundary fluxes are essential zeros; with Dirichlet m
/// the boundary condition is natural and every edge is free.
class RT0Space {
 public:
  RT0Space(std::shared_ptr<const Mesh> mesh, ConductanceBC bc);

  const Mesh& mesh() const { return *mesh_; }
  ConductanceBC bc() const { return bc_; }
  int size() const { return mesh_->num_edges(); }
  bool is_constrained(int e) const { return constrained_[e] != 0; }

  /// Local mass ∫_T ψ_i·ψ_j, local edge order.
  const std::array<double, 9>& local_mass(int t) const { return local_mass_[t]; }
  CsrMatrix mass() const;
  /// Value of ψ_e restricted to triangle t at x, local index i.
  Vec2 basis_value(int t, int i, Vec2 x) const;

  /// ∫ σ·σ for one component.
  double mass_norm2(const std::vector<double>& sigma) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  ConductanceBC bc_;
  std::vector<std::array<double, 9>> local_mass_;
  std::vector<std::uint8_t> constrained_;
};

/// Flux system (M_σ + δD² Bᵀ M_m⁻¹ B) obtained by eliminating m from one
/// implicit diffusion step; B_{T,e} = ∫_T ∇·ψ_e. SPD on the free edges.
SparseSystem assemble_mixed_operator(const RT0Space& space, double D, double delta);

/// One backward-Euler diffusion step per component:
///   (m, v) − δD²(∇·σ, v) = (g, v),   (σ, μ) + (m, ∇·μ) = 0.
/// The factorization is reused while (D, δ) stay fixed.
class MixedDiffusionSolver {
 public:
  explicit MixedDiffusionSolver(const RT0Space& space) : space_(&space) {}

  /// Returns m^{k+1}; writes σ^{k+1} to sigma.
  VectorFieldP0 solve(const VectorFieldP0& g, double D, double delta, FluxFieldRT0& sigma);

  /// Reduced operator on one component of m: M_m + δD² B M_σ⁻¹ Bᵀ, applied to x.
  /// For tests and diagnostics.
  std::vector<double> apply_m_schur(const std::vector<double>& x, double D, double delta);

  /// σ with (σ, μ) = −(m, ∇·μ) for all free μ: the discrete gradient of m.
  FluxFieldRT0 discrete_gradient(const VectorFieldP0& m);

  /// Residual vector M_σ σ + Bᵀ m of the flux equation, one component.
  std::vector<double> flux_residual(const std::vector<double>& m_component,
                                    const std::vector<double>& sigma) const;

 private:
  void prepare(double D, double delta);

  const RT0Space* space_;
  double cached_D_ = -1.0;
  double cached_delta_ = -1.0;
  std::optional<CholeskyFactor> factor_;
  std::optional<CholeskyFactor> mass_factor_;
  std::vector<std::uint8_t> constrained_;
};

}  // namespace netmorph
