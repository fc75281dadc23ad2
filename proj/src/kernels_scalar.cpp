// Reference kernels.  Plain loops, no intrinsics; every SIMD backend must
// match these bit-for-bit on elementwise ops and within accumulation-order
// tolerance on reductions and gemm.

#include "kernels_impl.hpp"

namespace amp::kernels::scalar {

template <class T>
void gemm_nn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    for (int i = 0; i < m; ++i) {
        T* c = C + static_cast<std::size_t>(i) * ldc;
        if (beta == T(0))
            for (int j = 0; j < n; ++j) c[j] = T(0);
        for (int p = 0; p < k; ++p) {
            T a = A[static_cast<std::size_t>(i) * lda + p];
            const T* b = B + static_cast<std::size_t>(p) * ldb;
            for (int j = 0; j < n; ++j) c[j] += a * b[j];
        }
    }
}

template <class T>
void gemm_tn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    if (beta == T(0))
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) C[static_cast<std::size_t>(i) * ldc + j] = T(0);
    for (int p = 0; p < k; ++p) {
        const T* b = B + static_cast<std::size_t>(p) * ldb;
        for (int i = 0; i < m; ++i) {
            T a = A[static_cast<std::size_t>(p) * lda + i];
            T* c = C + static_cast<std::size_t>(i) * ldc;
            for (int j = 0; j < n; ++j) c[j] += a * b[j];
        }
    }
}

template <class T>
void gemm_nt(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const T* a = A + static_cast<std::size_t>(i) * lda;
            const T* b = B + static_cast<std::size_t>(j) * ldb;
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += a[p] * b[p];
            T* c = C + static_cast<std::size_t>(i) * ldc + j;
            *c = beta == T(0) ? acc : *c + acc;
        }
}

template <class T>
void add(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale(T alpha, T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <class T>
void relu(const T* x, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_grad(const T* x, const T* dy, T* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > T(0)) dx[i] += dy[i];
}

template <class T>
T sum(const T* x, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

#define AMP_INSTANTIATE(T)                                                                       \
    template void gemm_nn<T>(int, int, int, const T*, int, const T*, int, T*, int, T);           \
    template void gemm_tn<T>(int, int, int, const T*, int, const T*, int, T*, int, T);           \
    template void gemm_nt<T>(int, int, int, const T*, int, const T*, int, T*, int, T);           \
    template void add<T>(const T*, const T*, T*, std::size_t);                                   \
    template void mul<T>(const T*, const T*, T*, std::size_t);                                   \
    template void axpy<T>(T, const T*, T*, std::size_t);                                         \
    template void scale<T>(T, T*, std::size_t);                                                  \
    template void relu<T>(const T*, T*, std::size_t);                                            \
    template void relu_grad<T>(const T*, const T*, T*, std::size_t);                             \
    template T sum<T>(const T*, std::size_t);                                                    \
    template T dot<T>(const T*, const T*, std::size_t);

AMP_INSTANTIATE(float)
AMP_INSTANTIATE(double)

#undef AMP_INSTANTIATE

}  // namespace amp::kernels::scalar
