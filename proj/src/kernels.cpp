#include "amp/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "amp/error.hpp"
#include "kernels_impl.hpp"

namespace amp::kernels {

namespace {

bool cpu_supports(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#if defined(AMP_HAVE_AVX2_TU)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::Neon:
#if defined(AMP_HAVE_NEON_TU)
            return true;  // baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Backend pick_default() {
    if (const char* env = std::getenv("AMP_KERNEL_BACKEND")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_supports(Backend::Avx2)) return Backend::Avx2;
        if (std::strcmp(env, "neon") == 0 && cpu_supports(Backend::Neon)) return Backend::Neon;
        throw Error("AMP_KERNEL_BACKEND: unknown or unsupported backend");
    }
    if (cpu_supports(Backend::Avx2)) return Backend::Avx2;
    if (cpu_supports(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> b{pick_default()};
    return b;
}

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool backend_supported(Backend b) { return cpu_supports(b); }

void set_backend(Backend b) {
    if (!cpu_supports(b)) throw Error(std::string("backend not supported here: ") + backend_name(b));
    current().store(b, std::memory_order_relaxed);
}

// Each public kernel consults the active backend once per call; the calls are
// coarse enough that the branch is free.

#if defined(AMP_HAVE_AVX2_TU)
#define AMP_SIMD_CASE(fn, ...)                  \
    if (active_backend() == Backend::Avx2) {    \
        return avx2::fn(__VA_ARGS__);           \
    }
#elif defined(AMP_HAVE_NEON_TU)
#define AMP_SIMD_CASE(fn, ...)                  \
    if (active_backend() == Backend::Neon) {    \
        return neon::fn(__VA_ARGS__);           \
    }
#else
#define AMP_SIMD_CASE(fn, ...)
#endif

template <class T>
void gemm_nn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    AMP_SIMD_CASE(gemm_nn, m, n, k, A, lda, B, ldb, C, ldc, beta)
    scalar::gemm_nn(m, n, k, A, lda, B, ldb, C, ldc, beta);
}

template <class T>
void gemm_tn(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    AMP_SIMD_CASE(gemm_tn, m, n, k, A, lda, B, ldb, C, ldc, beta)
    scalar::gemm_tn(m, n, k, A, lda, B, ldb, C, ldc, beta);
}

template <class T>
void gemm_nt(int m, int n, int k, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
             T beta) {
    AMP_SIMD_CASE(gemm_nt, m, n, k, A, lda, B, ldb, C, ldc, beta)
    scalar::gemm_nt(m, n, k, A, lda, B, ldb, C, ldc, beta);
}

template <class T>
void add(const T* a, const T* b, T* out, std::size_t n) {
    AMP_SIMD_CASE(add, a, b, out, n)
    scalar::add(a, b, out, n);
}

template <class T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
    AMP_SIMD_CASE(mul, a, b, out, n)
    scalar::mul(a, b, out, n);
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    AMP_SIMD_CASE(axpy, alpha, x, y, n)
    scalar::axpy(alpha, x, y, n);
}

template <class T>
void scale(T alpha, T* x, std::size_t n) {
    AMP_SIMD_CASE(scale, alpha, x, n)
    scalar::scale(alpha, x, n);
}

template <class T>
void relu(const T* x, T* out, std::size_t n) {
    AMP_SIMD_CASE(relu, x, out, n)
    scalar::relu(x, out, n);
}

template <class T>
void relu_grad(const T* x, const T* dy, T* dx, std::size_t n) {
    AMP_SIMD_CASE(relu_grad, x, dy, dx, n)
    scalar::relu_grad(x, dy, dx, n);
}

template <class T>
T sum(const T* x, std::size_t n) {
    AMP_SIMD_CASE(sum, x, n)
    return scalar::sum(x, n);
}

template <class T>
T dot(const T* a, const T* b, std::size_t n) {
    AMP_SIMD_CASE(dot, a, b, n)
    return scalar::dot(a, b, n);
}

#undef AMP_SIMD_CASE

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

}  // namespace amp::kernels
