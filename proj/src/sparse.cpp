#include "netmorph/sparse.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace netmorph {

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(n);
  kernels::spmv(view(), x.data(), y.data());
}

double CsrMatrix::at(int i, int j) const {
  const auto b = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto e = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return 0.0;
  return vals[static_cast<std::size_t>(it - cols.begin())];
}

double CsrMatrix::asymmetry() const {
  double amax = 0.0;
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      amax = std::max(amax, std::abs(vals[k]));
      dmax = std::max(dmax, std::abs(vals[k] - at(cols[k], i)));
    }
  }
  return amax > 0.0 ? dmax / amax : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix TripletBuilder::build() const {
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = entries_[a];
    const auto& eb = entries_[b];
    return ea.i != eb.i ? ea.i < eb.i : ea.j < eb.j;
  });
  CsrMatrix m;
  m.n = n_;
  m.row_ptr.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (std::size_t k = 0; k < order.size();) {
    const auto& first = entries_[order[k]];
    if (first.i < 0 || first.i >= n_ || first.j < 0 || first.j >= n_) {
      throw std::out_of_range("TripletBuilder: index out of range");
    }
    double sum = 0.0;
    std::size_t q = k;
    for (; q < order.size() && entries_[order[q]].i == first.i && entries_[order[q]].j == first.j;
         ++q) {
      sum += entries_[order[q]].v;
    }
    m.cols.push_back(first.j);
    m.vals.push_back(sum);
    ++m.row_ptr[static_cast<std::size_t>(first.i) + 1];
    k = q;
  }
  for (int i = 0; i < n_; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

void SparseSystem::apply_constraints() {
  if (constrained.empty()) return;
  CsrMatrix& a = matrix;
  for (int i = 0; i < a.n; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const int j = a.cols[k];
      if (constrained[i] || constrained[j]) a.vals[k] = (i == j) ? 1.0 : 0.0;
    }
    if (constrained[i]) rhs[i] = 0.0;
  }
}

namespace {

double free_norm(const std::vector<double>& v, const SparseSystem& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!s.is_constrained(static_cast<int>(i))) acc += v[i] * v[i];
  }
  return std::sqrt(acc);
}

double relative_residual(const SparseSystem& s, const std::vector<double>& x, double bnorm) {
  std::vector<double> r;
  s.matrix.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s.rhs[i] - r[i];
  return free_norm(r, s) / bnorm;
}

std::vector<double> pcg(const SparseSystem& s, const SolveOptions& opts, SolveReport* report) {
  const int n = s.matrix.n;
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<double> x(un, 0.0);
  if (opts.x0 != nullptr && opts.x0->size() == un) x = *opts.x0;
  for (int i = 0; i < n; ++i) {
    if (s.is_constrained(i)) x[i] = 0.0;
  }

  const double bnorm = free_norm(s.rhs, s);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (report) *report = {0, 0.0};
    return x;
  }

  std::vector<double> inv_diag = s.matrix.diagonal();
  for (int i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      throw SolverError("solve_spd: nonpositive diagonal entry at row " + std::to_string(i),
                        std::nan(""), 0);
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  std::vector<double> r(un), z(un), p(un), q(un);
  s.matrix.multiply(x, q);
  for (std::size_t i = 0; i < un; ++i) r[i] = s.rhs[i] - q[i];
  kernels::hadamard(inv_diag.data(), r.data(), z.data(), un);
  p = z;
  double rz = kernels::dot(r.data(), z.data(), un);
  const double target = opts.tol * bnorm;
  double rnorm = std::sqrt(kernels::dot(r.data(), r.data(), un));
  int it = 0;
  while (rnorm > target) {
    if (it >= opts.max_iter) {
      throw SolverError("solve_spd: no convergence in " + std::to_string(it) +
                            " iterations (relative residual " + std::to_string(rnorm / bnorm) +
                            ")",
                        rnorm / bnorm, it);
    }
    s.matrix.multiply(p, q);
    const double pq = kernels::dot(p.data(), q.data(), un);
    if (!(pq > 0.0)) {
      throw SolverError("solve_spd: matrix is not positive definite (p^T A p = " +
                            std::to_string(pq) + ")",
                        rnorm / bnorm, it);
    }
    const double alpha = rz / pq;
    kernels::axpy(alpha, p.data(), x.data(), un);
    kernels::axpy(-alpha, q.data(), r.data(), un);
    kernels::hadamard(inv_diag.data(), r.data(), z.data(), un);
    const double rz_new = kernels::dot(r.data(), z.data(), un);
    kernels::xpay(z.data(), rz_new / rz, p.data(), un);
    rz = rz_new;
    rnorm = std::sqrt(kernels::dot(r.data(), r.data(), un));
    ++it;
  }
  if (report) *report = {it, relative_residual(s, x, bnorm)};
  return x;
}

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenSparse to_eigen(const CsrMatrix& a) {
  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(a.nnz());
  for (int i = 0; i < a.n; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) trip.emplace_back(i, a.cols[k], a.vals[k]);
  }
  EigenSparse m(a.n, a.n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

struct CholeskyFactor::Impl {
  Eigen::SimplicialLLT<EigenSparse, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

CholeskyFactor::CholeskyFactor(const CsrMatrix& a) : impl_(std::make_unique<Impl>()), n_(a.n) {
  impl_->llt.compute(to_eigen(a));
  if (impl_->llt.info() != Eigen::Success) {
    throw SolverError("Cholesky factorization failed: matrix is not positive definite",
                      std::nan(""), 0);
  }
}

void CholeskyFactor::refactor(const CsrMatrix& a) {
  if (a.n != n_) throw std::invalid_argument("CholeskyFactor::refactor: size changed");
  impl_->llt.factorize(to_eigen(a));
  if (impl_->llt.info() != Eigen::Success) {
    throw SolverError("Cholesky factorization failed: matrix is not positive definite",
                      std::nan(""), 0);
  }
}

CholeskyFactor::~CholeskyFactor() = default;
CholeskyFactor::CholeskyFactor(CholeskyFactor&&) noexcept = default;
CholeskyFactor& CholeskyFactor::operator=(CholeskyFactor&&) noexcept = default;

std::vector<double> CholeskyFactor::solve(const std::vector<double>& b) const {
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd x = impl_->llt.solve(bv);
  return {x.data(), x.data() + x.size()};
}

std::vector<double> solve_spd(const SparseSystem& system, const SolveOptions& opts,
                              SolveReport* report) {
  if (!(opts.tol > 0.0 && opts.tol < 1.0)) throw std::invalid_argument("solve_spd: tol must lie in (0,1)");
  if (system.rhs.size() != static_cast<std::size_t>(system.matrix.n)) {
    throw std::invalid_argument("solve_spd: rhs size does not match matrix");
  }
  if (opts.method == SolveMethod::kPcgJacobi) return pcg(system, opts, report);

  const double bnorm = free_norm(system.rhs, system);
  std::vector<double> x(system.rhs.size(), 0.0);
  if (bnorm > 0.0) {
    x = CholeskyFactor(system.matrix).solve(system.rhs);
    for (int i = 0; i < system.matrix.n; ++i) {
      if (system.is_constrained(i)) x[i] = 0.0;
    }
  }
  const double res = bnorm > 0.0 ? relative_residual(system, x, bnorm) : 0.0;
  if (!(res <= opts.tol)) {
    throw SolverError("solve_spd: direct solve residual " + std::to_string(res) + " above tolerance",
                      res, 1);
  }
  if (report) *report = {1, res};
  return x;
}

}  // namespace netmorph
