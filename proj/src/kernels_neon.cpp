// NEON kernels for aarch64.  Same contract as the AVX2 TU: fused broadcast
// rows for gemm_nn/tn, lane accumulators for dot-style reductions.

#include "kernels_impl.hpp"

#if AMP_HAVE_NEON_TU

#include <arm_neon.h>

namespace amp::kernels::neon {

namespace {

inline void axpy_row(float a, const float* b, float* c, int n) {
    float32x4_t va = vdupq_n_f32(a);
    int j = 0;
    for (; j + 4 <= n; j += 4)
        vst1q_f32(c + j, vfmaq_f32(vld1q_f32(c + j), va, vld1q_f32(b + j)));
    for (; j < n; ++j) c[j] += a * b[j];
}

inline void axpy_row(double a, const double* b, double* c, int n) {
    float64x2_t va = vdupq_n_f64(a);
    int j = 0;
    for (; j + 2 <= n; j += 2)
        vst1q_f64(c + j, vfmaq_f64(vld1q_f64(c + j), va, vld1q_f64(b + j)));
    for (; j < n; ++j) c[j] += a * b[j];
}

inline float dot_impl(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

inline double dot_impl(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

}  // namespace

template <class T>
void gemm_nn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    for (int i = 0; i < m; ++i) {
        T* c = C + static_cast<std::size_t>(i) * ldc;
        if (beta == T(0))
            for (int j = 0; j < n; ++j) c[j] = T(0);
        for (int p = 0; p < k; ++p)
            axpy_row(A[static_cast<std::size_t>(i) * lda + p],
                     B + static_cast<std::size_t>(p) * ldb, c, n);
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
        for (int i = 0; i < m; ++i)
            axpy_row(A[static_cast<std::size_t>(p) * lda + i], b,
                     C + static_cast<std::size_t>(i) * ldc, n);
    }
}

template <class T>
void gemm_nt(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            T acc = dot_impl(A + static_cast<std::size_t>(i) * lda,
                             B + static_cast<std::size_t>(j) * ldb,
                             static_cast<std::size_t>(k));
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
    std::size_t done = 0;
    while (done < n) {
        std::size_t chunk = n - done;
        int c = chunk > std::size_t(1 << 30) ? (1 << 30) : static_cast<int>(chunk);
        axpy_row(alpha, x + done, y + done, c);
        done += static_cast<std::size_t>(c);
    }
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
    return dot_impl(a, b, n);
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

}  // namespace amp::kernels::neon

#endif  // AMP_HAVE_NEON_TU
