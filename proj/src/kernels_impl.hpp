#pragma once

// Declarations of the per-backend kernel entry points.  Each backend lives
// in its own translation unit so the SIMD files can carry their own
// compiler flags.

#include <cstddef>

namespace amp::kernels {

#define AMP_DECLARE_BACKEND(ns)                                                                  \
    namespace ns {                                                                               \
    template <class T>                                                                           \
    void gemm_nn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,   \
                 T beta);                                                                        \
    template <class T>                                                                           \
    void gemm_tn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,   \
                 T beta);                                                                        \
    template <class T>                                                                           \
    void gemm_nt(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,   \
                 T beta);                                                                        \
    template <class T> void add(const T* a, const T* b, T* out, std::size_t n);                  \
    template <class T> void mul(const T* a, const T* b, T* out, std::size_t n);                  \
    template <class T> void axpy(T alpha, const T* x, T* y, std::size_t n);                      \
    template <class T> void scale(T alpha, T* x, std::size_t n);                                 \
    template <class T> void relu(const T* x, T* out, std::size_t n);                             \
    template <class T> void relu_grad(const T* x, const T* dy, T* dx, std::size_t n);            \
    template <class T> T sum(const T* x, std::size_t n);                                         \
    template <class T> T dot(const T* a, const T* b, std::size_t n);                             \
    }

AMP_DECLARE_BACKEND(scalar)
#if defined(AMP_HAVE_AVX2_TU)
AMP_DECLARE_BACKEND(avx2)
#endif
#if defined(AMP_HAVE_NEON_TU)
AMP_DECLARE_BACKEND(neon)
#endif

#undef AMP_DECLARE_BACKEND

}  // namespace amp::kernels
