#pragma once

// Dense vector and CSR kernels used by the iterative solvers. A portable
// scalar reference lives in kernels_scalar.cpp; an AVX2/FMA variant is
// compiled separately and picked at runtime when the CPU supports it.

#include <cstddef>
#include <string_view>

namespace netmorph::kernels {

struct CsrView {
  std::size_t rows = 0;
  const std::size_t* row_ptr = nullptr;
  const int* cols = nullptr;
  const double* vals = nullptr;
};

struct KernelTable {
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = x + b * y
  void (*xpay)(const double* x, double b, double* y, std::size_t n);
  // z = x .* y
  void (*hadamard)(const double* x, const double* y, double* z, std::size_t n);
  // y = A x
  void (*spmv)(const CsrView& a, const double* x, double* y);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// Table used by the library. Honours NETMORPH_ISA=scalar|avx2 on first call;
/// otherwise the widest supported variant.
const KernelTable& active();

/// Overrides the active table ("scalar" or "avx2"). Returns false if the
/// requested variant is unavailable, leaving the selection unchanged.
bool select(std::string_view name);

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline void xpay(const double* x, double b, double* y, std::size_t n) { active().xpay(x, b, y, n); }
inline void hadamard(const double* x, const double* y, double* z, std::size_t n) {
  active().hadamard(x, y, z, n);
}
inline void spmv(const CsrView& a, const double* x, double* y) { active().spmv(a, x, y); }

}  // namespace netmorph::kernels
