#include "netmorph/kernels.hpp"

namespace netmorph::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void xpay_scalar(const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + b * y[i];
}

void hadamard_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void spmv_scalar(const CsrView& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) s += a.vals[k] * x[a.cols[k]];
    y[r] = s;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, xpay_scalar, hadamard_scalar,
                                 spmv_scalar};
  return table;
}

}  // namespace netmorph::kernels
