#pragma once

// Arithmetic inner loops behind the differentiable core.  Scalar reference
// kernels plus SIMD variants (AVX2 on x86-64, NEON on arm64) selected at
// runtime; the backends are equivalence-tested against each other.
//
// All matrices are dense row-major.  gemm_* compute C = op(A) * op(B) with
// beta in {0, 1} controlling accumulation into C.

#include <cstddef>

namespace amp::kernels {

enum class Backend { Scalar, Avx2, Neon };

const char* backend_name(Backend b);

// Best backend the CPU supports, unless overridden by AMP_KERNEL_BACKEND
// ("scalar", "avx2", "neon") or set_backend.
Backend active_backend();
bool backend_supported(Backend b);
void set_backend(Backend b);  // throws if unsupported on this CPU

// C[m x n] = A[m x k] * B[k x n] + beta * C
template <class T>
void gemm_nn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc, T beta);
// C[m x n] = A^T * B, A stored [k x m]
template <class T>
void gemm_tn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc, T beta);
// C[m x n] = A * B^T, B stored [n x k]
template <class T>
void gemm_nt(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc, T beta);

template <class T> void add(const T* a, const T* b, T* out, std::size_t n);
template <class T> void mul(const T* a, const T* b, T* out, std::size_t n);
template <class T> void axpy(T alpha, const T* x, T* y, std::size_t n);  // y += alpha * x
template <class T> void scale(T alpha, T* x, std::size_t n);
template <class T> void relu(const T* x, T* out, std::size_t n);
// dx += dy where x > 0
template <class T> void relu_grad(const T* x, const T* dy, T* dx, std::size_t n);
template <class T> T sum(const T* x, std::size_t n);
template <class T> T dot(const T* a, const T* b, std::size_t n);

}  // namespace amp::kernels
