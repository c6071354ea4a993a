#pragma once

// Some OpenBLAS builds pick a gemm kernel at load time that produces wrong
// results on CPUs they misdetect (observed: the Cooperlake kernel on a
// Sapphire Rapids host, wrong for every dimension >= ~200). dsyevr relies on
// gemm through its back-transformation, so a bad kernel silently corrupts
// eigenvectors. The guard multiplies a small test case, and if the answer
// is wrong re-executes the program with OPENBLAS_CORETYPE=Haswell.

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "fiilab/error.hpp"

extern "C" void dgemm_(const char* transa, const char* transb, const int* m,
                       const int* n, const int* k, const double* alpha,
                       const double* a, const int* lda, const double* b,
                       const int* ldb, const double* beta, double* c,
                       const int* ldc);

namespace fiilab {

inline bool blas_gemm_sane(int n = 256) {
  std::vector<double> a(static_cast<std::size_t>(n) * n), b(a.size()), c(a.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(j) * n + i] = std::sin(0.37 * i + 1.3 * j);
      b[static_cast<std::size_t>(j) * n + i] = std::cos(0.11 * i - 0.7 * j);
    }
  const double one = 1.0, zero = 0.0;
  dgemm_("N", "N", &n, &n, &n, &one, a.data(), &n, b.data(), &n, &zero, c.data(), &n);
  for (int j = 0; j < n; j += 17)
    for (int i = 0; i < n; i += 13) {
      double ref = 0.0;
      for (int k = 0; k < n; ++k)
        ref += a[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(j) * n + k];
      if (std::abs(ref - c[static_cast<std::size_t>(j) * n + i]) > 1e-10 * n) return false;
    }
  return true;
}

// Call first thing in main(). Returns normally only with a working gemm.
inline void ensure_sane_blas(char** argv) {
  if (blas_gemm_sane()) return;
  if (std::getenv("OPENBLAS_CORETYPE") == nullptr) {
    ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    ::execv("/proc/self/exe", argv);
  }
  throw Error("BLAS dgemm returns wrong results; set OPENBLAS_CORETYPE to a "
              "kernel supported by this CPU");
}

}  // namespace fiilab
