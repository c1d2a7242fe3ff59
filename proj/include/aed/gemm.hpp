#pragma once

#include <cstdlib>
#include <mutex>

#if defined(__unix__) || defined(__APPLE__)
#include <dlfcn.h>
#define AED_HAVE_DLOPEN 1
#endif

namespace aed::detail {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
//
// Backed by OpenBLAS when the shared library can be loaded, with a plain
// blocked loop as fallback. The library is loaded lazily through dlopen so
// that OPENBLAS_CORETYPE can be pinned first: OpenBLAS's cpuid detection
// fails on some virtualized hosts and silently selects a generic kernel an
// order of magnitude slower than the native one. BLAS threading is forced
// to 1; any parallelism in this project lives above the gemm calls, which
// keeps results independent of machine thread counts.
struct BlasRuntime {
  using sgemm_t = void (*)(int, int, int, int, int, int, float, const float*, int, const float*,
                           int, float, float*, int);
  using dgemm_t = void (*)(int, int, int, int, int, int, double, const double*, int, const double*,
                           int, double, double*, int);
  using set_threads_t = void (*)(int);

  sgemm_t sgemm = nullptr;
  dgemm_t dgemm = nullptr;

  static const BlasRuntime& instance() {
    static BlasRuntime rt = load();
    return rt;
  }

 private:
  static BlasRuntime load() {
    BlasRuntime rt;
#ifdef AED_HAVE_DLOPEN
#if defined(__x86_64__) && defined(__GNUC__)
    if (!std::getenv("OPENBLAS_CORETYPE")) {
      if (__builtin_cpu_supports("avx512f"))
        setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
      else if (__builtin_cpu_supports("avx2"))
        setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
    }
#endif
    setenv("OPENBLAS_NUM_THREADS", "1", 0);
    void* h = dlopen("libopenblas.so.0", RTLD_NOW | RTLD_LOCAL);
    if (!h) h = dlopen("libopenblas.so", RTLD_NOW | RTLD_LOCAL);
    if (h) {
      rt.sgemm = reinterpret_cast<sgemm_t>(dlsym(h, "cblas_sgemm"));
      rt.dgemm = reinterpret_cast<dgemm_t>(dlsym(h, "cblas_dgemm"));
      if (auto set = reinterpret_cast<set_threads_t>(dlsym(h, "openblas_set_num_threads")))
        set(1);
    }
#endif
    return rt;
  }
};

inline constexpr int kCblasRowMajor = 101;
inline constexpr int kCblasNoTrans = 111;
inline constexpr int kCblasTrans = 112;

template <class T>
void gemm_fallback(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
                   const T* b, int ldb, T beta, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) c[i * ldc + j] *= beta;
    for (int p = 0; p < k; ++p) {
      const T av = alpha * (trans_a ? a[p * lda + i] : a[i * lda + p]);
      if (av == T(0)) continue;
      const T* brow = trans_b ? nullptr : b + static_cast<std::size_t>(p) * ldb;
      if (!trans_b) {
        T* crow = c + static_cast<std::size_t>(i) * ldc;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (int j = 0; j < n; ++j) c[i * ldc + j] += av * b[j * ldb + p];
      }
    }
  }
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
                 int lda, const float* b, int ldb, float beta, float* c, int ldc) {
  const auto& rt = BlasRuntime::instance();
  if (rt.sgemm) {
    rt.sgemm(kCblasRowMajor, trans_a ? kCblasTrans : kCblasNoTrans,
             trans_b ? kCblasTrans : kCblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
  gemm_fallback(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
                 int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  const auto& rt = BlasRuntime::instance();
  if (rt.dgemm) {
    rt.dgemm(kCblasRowMajor, trans_a ? kCblasTrans : kCblasNoTrans,
             trans_b ? kCblasTrans : kCblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
  gemm_fallback(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace aed::detail
