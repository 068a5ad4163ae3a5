#pragma once

#include <cstddef>
#include <string_view>

// Dense inner loops used by the autograd tape. Every kernel has a scalar
// reference implementation; vectorized variants are selected at runtime and
// must agree with the reference to rounding (FMA contraction only).
//
// All matrices are row-major and contiguous. The gemm kernels accumulate
// into C; callers zero C first when they want a plain product.

namespace cmie::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(int m, int n, int k, const double* a, const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(int m, int n, int k, const double* a, const double* b, double* c);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn)(int m, int n, int k, const double* a, const double* b, double* c);
};

const KernelTable& scalar_table();

/// AVX2+FMA kernels, or nullptr when not compiled in or the CPU lacks them.
const KernelTable* avx2_table();

/// Table used by the tape. Defaults to the widest supported variant; the
/// CMIE_KERNELS environment variable ("scalar" or "avx2") overrides it.
const KernelTable& active();

/// Forces a variant by name ("scalar", "avx2", "auto"). Throws UsageError for
/// unknown or unsupported names. Not thread-safe; call before any compute.
void select(std::string_view name);

}  // namespace cmie::kernels
