#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "netmorph/kernels.hpp"

namespace netmorph {

/// Square sparse matrix in compressed-row layout, column indices sorted per row.
struct CsrMatrix {
  int n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<int> cols;
  std::vector<double> vals;

  std::size_t nnz() const { return vals.size(); }
  kernels::CsrView view() const {
    return {static_cast<std::size_t>(n), row_ptr.data(), cols.data(), vals.data()};
  }
  /// y = A x (y resized).
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  /// Entry (i,j), zero if not stored.
  double at(int i, int j) const;
  /// max |a_ij - a_ji| / max |a_ij|.
  double asymmetry() const;
  std::vector<double> diagonal() const;
};

/// Collects (row, col, value) contributions; duplicates are summed in
/// insertion order, so the result does not depend on sorting stability.
class TripletBuilder {
 public:
  explicit TripletBuilder(int n) : n_(n) {}
  void reserve(std::size_t k) { entries_.reserve(k); }
  void add(int i, int j, double v) { entries_.push_back({i, j, v}); }
  CsrMatrix build() const;

 private:
  struct Entry {
    int i, j;
    double v;
  };
  int n_;
  std::vector<Entry> entries_;
};

/// Linear system with an essential (zero-valued) constraint set.
struct SparseSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::uint8_t> constrained;  // empty means none

  bool is_constrained(int i) const { return !constrained.empty() && constrained[i] != 0; }
  /// Replaces constrained rows and columns by identity rows and zeroes their rhs.
  void apply_constraints();
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

enum class SolveMethod { kPcgJacobi, kDirect };

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 20000;
  SolveMethod method = SolveMethod::kPcgJacobi;
  /// Warm start (ignored by the direct method). Empty means zero.
  const std::vector<double>* x0 = nullptr;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // relative, free DOFs
};

/// Solves the constrained system; constrained entries of the result are 0.
/// The matrix must already have had apply_constraints() called.
/// Throws SolverError on non-convergence or a detected indefinite direction.
std::vector<double> solve_spd(const SparseSystem& system, const SolveOptions& opts = {},
                              SolveReport* report = nullptr);

/// Sparse Cholesky factorization that can be reused for several right-hand
/// sides. Throws SolverError if the matrix is not positive definite.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const CsrMatrix& a);
  ~CholeskyFactor();
  CholeskyFactor(CholeskyFactor&&) noexcept;
  CholeskyFactor& operator=(CholeskyFactor&&) noexcept;

  /// New values on the sparsity pattern of the original matrix; reuses the
  /// ordering and symbolic factorization.
  void refactor(const CsrMatrix& a);
  std::vector<double> solve(const std::vector<double>& b) const;
  int size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

}  // namespace netmorph
