// AVX2 + FMA kernels.  This TU is compiled with -mavx2 -mfma and only entered
// after a runtime cpuid check in kernels.cpp.
//
// gemm_nn / gemm_tn broadcast one A element and FMA it across a row of B, so
// the accumulation order per C element matches the scalar kernel exactly.
// gemm_nt and dot use lane-wise accumulators and differ from scalar only by
// reassociation.

#include "kernels_impl.hpp"

#if AMP_HAVE_AVX2_TU

#include <immintrin.h>

namespace amp::kernels::avx2 {

namespace {

inline void saxpy_row(float a, const float* b, float* c, int n) {
    __m256 va = _mm256_set1_ps(a);
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256 vc = _mm256_loadu_ps(c + j);
        vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(b + j), vc);
        _mm256_storeu_ps(c + j, vc);
    }
    for (; j < n; ++j) c[j] += a * b[j];
}

inline void daxpy_row(double a, const double* b, double* c, int n) {
    __m256d va = _mm256_set1_pd(a);
    int j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d vc = _mm256_loadu_pd(c + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(b + j), vc);
        _mm256_storeu_pd(c + j, vc);
    }
    for (; j < n; ++j) c[j] += a * b[j];
}

inline void axpy_row(float a, const float* b, float* c, int n) { saxpy_row(a, b, c, n); }
inline void axpy_row(double a, const double* b, double* c, int n) { daxpy_row(a, b, c, n); }

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

inline float dot_impl(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

inline double dot_impl(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double r = hsum(acc);
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

}  // namespace amp::kernels::avx2

#endif  // AMP_HAVE_AVX2_TU
