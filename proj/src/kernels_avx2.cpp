#include "shortcut/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace shortcut::kernels {

namespace {

void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
    std::size_t i = 0;
    __m256d va = _mm256_set1_pd(a);
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        vy = _mm256_fmadd_pd(va, vx, vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    std::size_t i = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        acc = _mm256_fmadd_pd(vx, vy, acc);
    }
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    double s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void relu_avx2(double* x, std::size_t n) {
    std::size_t i = 0;
    __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(x + i, _mm256_max_pd(v, zero));
    }
    for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void fill_avx2(double* y, double v, std::size_t n) {
    std::size_t i = 0;
    __m256d vv = _mm256_set1_pd(v);
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, vv);
    for (; i < n; ++i) y[i] = v;
}

double max_avx2(const double* x, std::size_t n) {
    std::size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        double lanes[4];
        _mm256_storeu_pd(lanes, vm);
        m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

} // namespace

const Ops avx2_ops = {axpy_avx2, dot_avx2, relu_avx2, fill_avx2, max_avx2};

} // namespace shortcut::kernels
