#include "cmie/kernels/kernels.hpp"

namespace cmie::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double aip = a[static_cast<std::size_t>(i) * k + p];
      if (aip == 0.0) continue;
      axpy(aip, b + static_cast<std::size_t>(p) * n, ci, n);
    }
  }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      c[static_cast<std::size_t>(i) * n + j] +=
          dot(a + static_cast<std::size_t>(i) * k, b + static_cast<std::size_t>(j) * k, k);
    }
  }
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c) {
  for (int r = 0; r < m; ++r) {
    const double* br = b + static_cast<std::size_t>(r) * n;
    for (int p = 0; p < k; ++p) {
      const double arp = a[static_cast<std::size_t>(r) * k + p];
      if (arp == 0.0) continue;
      axpy(arp, br, c + static_cast<std::size_t>(p) * n, n);
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot, axpy, gemm_nn, gemm_nt, gemm_tn};
  return table;
}

}  // namespace cmie::kernels
