#include <gtest/gtest.h>

#include <cmath>

#include "cmie/core/rng.hpp"
#include "cmie/kernels/kernels.hpp"

using namespace cmie;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_NEAR(a[i], b[i], tol * (1.0 + std::abs(a[i]))) << "at " << i;
  }
}

}  // namespace

TEST(Kernels, ScalarGemmMatchesNaiveLoops) {
  Rng rng(3);
  const int m = 5, n = 4, k = 3;
  auto a = random_vec(rng, m * k);
  auto b = random_vec(rng, k * n);
  std::vector<double> c(m * n, 1.0);
  kernels::scalar_table().gemm_nn(m, n, k, a.data(), b.data(), c.data());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double want = 1.0;
      for (int p = 0; p < k; ++p) want += a[i * k + p] * b[p * n + j];
      EXPECT_NEAR(c[i * n + j], want, 1e-14);
    }
  }
}

TEST(Kernels, VectorDotAndAxpyMatchScalar) {
  const auto* v = kernels::avx2_table();
  if (v == nullptr) GTEST_SKIP() << "avx2 kernels unavailable";
  const auto& s = kernels::scalar_table();
  Rng rng(5);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 257u}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    EXPECT_NEAR(v->dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n), 1e-12 * (1 + n));
    auto y1 = b;
    auto y2 = b;
    v->axpy(0.7, a.data(), y1.data(), n);
    s.axpy(0.7, a.data(), y2.data(), n);
    expect_close(y1, y2, 1e-15);
  }
}

TEST(Kernels, VectorGemmsMatchScalarOnRaggedShapes) {
  const auto* v = kernels::avx2_table();
  if (v == nullptr) GTEST_SKIP() << "avx2 kernels unavailable";
  const auto& s = kernels::scalar_table();
  Rng rng(7);
  for (int m : {1, 3, 4, 5, 9, 17}) {
    for (int n : {1, 2, 7, 8, 9, 16, 31}) {
      for (int k : {1, 3, 8, 13}) {
        auto a = random_vec(rng, m * k);
        auto b = random_vec(rng, k * n);
        auto c0 = random_vec(rng, m * n);
        auto c1 = c0;
        v->gemm_nn(m, n, k, a.data(), b.data(), c0.data());
        s.gemm_nn(m, n, k, a.data(), b.data(), c1.data());
        expect_close(c0, c1, 1e-13);

        auto bt = random_vec(rng, n * k);
        auto d0 = random_vec(rng, m * n);
        auto d1 = d0;
        v->gemm_nt(m, n, k, a.data(), bt.data(), d0.data());
        s.gemm_nt(m, n, k, a.data(), bt.data(), d1.data());
        expect_close(d0, d1, 1e-13);

        auto bm = random_vec(rng, m * n);
        auto e0 = random_vec(rng, k * n);
        auto e1 = e0;
        v->gemm_tn(m, n, k, a.data(), bm.data(), e0.data());
        s.gemm_tn(m, n, k, a.data(), bm.data(), e1.data());
        expect_close(e0, e1, 1e-13);
      }
    }
  }
}

TEST(Kernels, SelectByName) {
  kernels::select("scalar");
  EXPECT_STREQ(kernels::active().name, "scalar");
  kernels::select("auto");
  EXPECT_THROW(kernels::select("sse9"), std::exception);
}
