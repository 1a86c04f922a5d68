#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "netmorph/mesh.hpp"
#include "netmorph/sparse.hpp"

namespace netmorph {

/// Nodal values of a continuous piecewise linear function.
using ScalarFieldP1 = std::vector<double>;
/// One 2-vector per triangle.
using VectorFieldP0 = std::vector<Vec2>;

/// Piecewise-constant scalar on triangles, stored either as one value or per cell.
class CellCoefficient {
 public:
  CellCoefficient(double value = 1.0) : constant_(value) {}  // NOLINT(implicit)
  explicit CellCoefficient(std::vector<double> per_cell) : per_cell_(std::move(per_cell)) {}

  double operator()(int t) const { return per_cell_.empty() ? constant_ : per_cell_[t]; }
  bool is_constant() const { return per_cell_.empty(); }
  double min_value(int num_cells) const;

 private:
  double constant_ = 1.0;
  std::vector<double> per_cell_;
};

/// Source term S: a constant, a function of x, or per-triangle values.
class SourceTerm {
 public:
  using Fn = std::function<double(Vec2)>;
  SourceTerm(double value = 0.0) : data_(value) {}  // NOLINT(implicit)
  explicit SourceTerm(Fn f) : data_(std::move(f)) {}
  explicit SourceTerm(std::vector<double> per_cell) : data_(std::move(per_cell)) {}

  /// ∫_T S φ_i for the three P1 basis functions of triangle t.
  std::array<double, 3> load(const Mesh& mesh, int t) const;
  /// ∫_T S.
  double integral(const Mesh& mesh, int t) const;
  bool is_zero() const;
  /// The value when S was given as a single constant.
  std::optional<double> constant_value() const;

 private:
  std::variant<double, Fn, std::vector<double>> data_;
};

/// Conforming P1 space with homogeneous Dirichlet values on vertices of
/// DIRICHLET edges.
class P1Space {
 public:
  explicit P1Space(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  int size() const { return mesh_->num_vertices(); }
  /// Gradients of the three barycentric basis functions on triangle t.
  const std::array<Vec2, 3>& basis_gradients(int t) const { return grads_[t]; }
  bool is_dirichlet(int v) const { return dirichlet_[v] != 0; }
  const std::vector<std::uint8_t>& dirichlet_mask() const { return dirichlet_; }

  /// Stiffness matrix of ∫ K_T ∇φ_j·∇φ_i, K_T symmetric 2x2 (xx, xy, yy) per cell.
  CsrMatrix stiffness(const std::function<std::array<double, 3>(int)>& tensor) const;
  /// Consistent P1 mass matrix.
  CsrMatrix mass() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<std::array<Vec2, 3>> grads_;
  std::vector<std::uint8_t> dirichlet_;
  CsrMatrix pattern_;
  std::vector<std::array<std::size_t, 9>> scatter_;  // (i, j) of triangle t -> slot in pattern_
};

/// −∇·[(rI + m⊗m)∇p] = S with p = 0 on DIRICHLET vertices. r ≤ 0 on any
/// triangle throws std::invalid_argument.
SparseSystem assemble_pressure_system(const P1Space& space, const VectorFieldP0& m,
                                      const CellCoefficient& r, const SourceTerm& source);

/// Solves the pressure equation for the given conductance.
ScalarFieldP1 solve_pressure(const P1Space& space, const VectorFieldP0& m,
                             const CellCoefficient& r, const SourceTerm& source,
                             const SolveOptions& opts = {});

/// Repeated pressure solves on one space with the direct method. The fill-reducing
/// ordering and symbolic factorization are computed on the first call.
class PressureSolver {
 public:
  explicit PressureSolver(const P1Space& space) : space_(&space) {}

  /// Throws SolverError if the relative residual stays above tol after two
  /// steps of iterative refinement.
  ScalarFieldP1 solve(const VectorFieldP0& m, const CellCoefficient& r, const SourceTerm& source,
                      double tol = 1e-10);

 private:
  const P1Space* space_;
  std::optional<CholeskyFactor> factor_;
};

VectorFieldP0 gradient_per_triangle(const P1Space& space, const ScalarFieldP1& p);

/// u = (rI + m⊗m)∇p per triangle.
VectorFieldP0 velocity(const VectorFieldP0& m, const VectorFieldP0& grad_p, const CellCoefficient& r);

/// Per-triangle mean of f, computed on an n x n sub-lattice of every triangle
/// with the edge-midpoint rule (exact for quadratics).
VectorFieldP0 l2_project_p0(const Mesh& mesh, const std::function<Vec2(Vec2)>& f, int n = 4);

/// Fraction of each triangle covered by the axis-aligned box, computed exactly
/// by polygon clipping.
std::vector<double> box_area_fraction(const Mesh& mesh, Vec2 lo, Vec2 hi);

// Integrals and norms ------------------------------------------------------

double l2_norm(const Mesh& mesh, const VectorFieldP0& v);
double l1_norm(const Mesh& mesh, const VectorFieldP0& v);
double l2_norm(const Mesh& mesh, const std::vector<double>& cell_values);
/// ‖∇p‖_{L2}.
double h1_seminorm(const P1Space& space, const ScalarFieldP1& p);
/// ‖p − f‖_{L2} by a degree-5 rule on each triangle.
double p1_l2_error(const P1Space& space, const ScalarFieldP1& p, const std::function<double(Vec2)>& f);
/// ‖∇p − g‖_{L2} by a degree-5 rule on each triangle.
double p1_h1_error(const P1Space& space, const ScalarFieldP1& p, const std::function<Vec2(Vec2)>& g);
/// ∫ f dx by the same degree-5 rule.
double integrate(const Mesh& mesh, const std::function<double(Vec2)>& f);

/// Degree-5 seven-point rule on triangle t: points and weights (weights sum to |T|).
struct QuadPoint {
  Vec2 x;
  double w;
};
std::array<QuadPoint, 7> quadrature7(const Mesh& mesh, int t);

}  // namespace netmorph
