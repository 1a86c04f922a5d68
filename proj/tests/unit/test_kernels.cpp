#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "netmorph/kernels.hpp"
#include "netmorph/sparse.hpp"

using namespace netmorph;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

CsrMatrix random_csr(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> col(0, n - 1);
  std::uniform_int_distribution<int> len(0, 13);
  TripletBuilder b(n);
  for (int i = 0; i < n; ++i) {
    const int k = len(rng);
    for (int j = 0; j < k; ++j) b.add(i, col(rng), u(rng));
  }
  return b.build();
}

long double dot_ld(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(x[i]) * y[i];
  return s;
}

double abs_sum(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] * y[i]);
  return s;
}

void check_table(const kernels::KernelTable& k) {
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto x = random_vector(n, rng);
    const auto y = random_vector(n, rng);
    const double d = k.dot(x.data(), y.data(), n);
    CHECK(std::abs(d - static_cast<double>(dot_ld(x, y))) <= 1e-15 * (abs_sum(x, y) + 1.0) * (n + 1));

    auto z = y;
    k.axpy(0.37, x.data(), z.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == y[i] + 0.37 * x[i]);
    z = y;
    k.xpay(x.data(), -1.5, z.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == x[i] + -1.5 * y[i]);
    std::vector<double> h(n);
    k.hadamard(x.data(), y.data(), h.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(h[i] == x[i] * y[i]);
  }
  for (int n : {1, 3, 17, 64}) {
    const CsrMatrix a = random_csr(n, rng);
    const auto x = random_vector(n, rng);
    std::vector<double> y(n);
    k.spmv(a.view(), x.data(), y.data());
    for (int i = 0; i < n; ++i) {
      long double s = 0, mag = 0;
      for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        s += static_cast<long double>(a.vals[p]) * x[a.cols[p]];
        mag += std::abs(a.vals[p] * x[a.cols[p]]);
      }
      CHECK(std::abs(y[i] - static_cast<double>(s)) <= 1e-15 * static_cast<double>(mag + 1) * 16);
    }
  }
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar reference against extended precision") { check_table(kernels::scalar_table()); }

  TEST_CASE("avx2 variant against extended precision") {
    const kernels::KernelTable* t = kernels::avx2_table();
    if (t == nullptr) {
      MESSAGE("AVX2/FMA not available; skipped");
      return;
    }
    check_table(*t);
  }

  TEST_CASE("avx2 and scalar variants agree") {
    const kernels::KernelTable* v = kernels::avx2_table();
    if (v == nullptr) return;
    const kernels::KernelTable& s = kernels::scalar_table();
    std::mt19937_64 rng(11);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 15u, 16u, 33u, 1000u}) {
      const auto x = random_vector(n, rng);
      const auto y = random_vector(n, rng);
      const double ds = s.dot(x.data(), y.data(), n);
      const double dv = v->dot(x.data(), y.data(), n);
      CHECK(std::abs(ds - dv) <= 4e-16 * abs_sum(x, y) * std::sqrt(static_cast<double>(n) + 1));
      // Elementwise kernels have no reassociation: results must be bit-identical.
      auto a = y, b = y;
      s.axpy(-0.3, x.data(), a.data(), n);
      v->axpy(-0.3, x.data(), b.data(), n);
      CHECK(a == b);
      a = y;
      b = y;
      s.xpay(x.data(), 0.9, a.data(), n);
      v->xpay(x.data(), 0.9, b.data(), n);
      CHECK(a == b);
      s.hadamard(x.data(), y.data(), a.data(), n);
      v->hadamard(x.data(), y.data(), b.data(), n);
      CHECK(a == b);
    }
    const CsrMatrix m = random_csr(300, rng);
    const auto x = random_vector(300, rng);
    std::vector<double> ys(300), yv(300);
    s.spmv(m.view(), x.data(), ys.data());
    v->spmv(m.view(), x.data(), yv.data());
    for (int i = 0; i < 300; ++i) CHECK(std::abs(ys[i] - yv[i]) <= 1e-14);
  }

  TEST_CASE("runtime selection") {
    const std::string before = kernels::active().name;
    CHECK(kernels::select("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_FALSE(kernels::select("neon"));
    CHECK(std::string(kernels::active().name) == "scalar");
    if (kernels::avx2_table() != nullptr) {
      CHECK(kernels::select("avx2"));
      CHECK(std::string(kernels::active().name) == "avx2");
    }
    kernels::select(before);
  }
}
