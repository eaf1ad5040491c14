#include "shortcut/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace shortcut::kernels {

namespace {

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void relu_scalar(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void fill_scalar(double* y, double v, std::size_t n) {
    std::fill(y, y + n, v);
}

double max_scalar(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

Ops g_active = {axpy_scalar, dot_scalar, relu_scalar, fill_scalar, max_scalar};
Backend g_backend = Backend::Scalar;
bool g_initialized = false;

} // namespace

const Ops scalar_ops = {axpy_scalar, dot_scalar, relu_scalar, fill_scalar, max_scalar};

const Ops* avx2_ops_or_null() {
#ifdef SHORTCUT_BUILD_AVX2
    if (avx2_available()) return &avx2_ops;
#endif
    return nullptr;
}

bool avx2_available() {
#ifdef SHORTCUT_BUILD_AVX2
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

bool select_backend(Backend b) {
    switch (b) {
    case Backend::Scalar:
        g_active = scalar_ops;
        g_backend = b;
        g_initialized = true;
        return true;
    case Backend::Avx2:
#ifdef SHORTCUT_BUILD_AVX2
        if (avx2_available()) {
            g_active = avx2_ops;
            g_backend = b;
            g_initialized = true;
            return true;
        }
#endif
        return false;
    }
    return false;
}

void select_default_backend() {
    const char* env = std::getenv("SHORTCUT_KERNELS");
    if (env) {
        std::string s(env);
        if (s == "scalar") { select_backend(Backend::Scalar); return; }
        if (s == "avx2" && select_backend(Backend::Avx2)) return;
    }
    if (!select_backend(Backend::Avx2)) select_backend(Backend::Scalar);
}

const Ops& ops() {
    if (!g_initialized) select_default_backend();
    return g_active;
}

Backend active_backend() {
    if (!g_initialized) select_default_backend();
    return g_backend;
}

std::string backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

void softmax_inplace(double* scores, std::size_t n) {
    if (n == 0) return;
    const Ops& k = ops();
    double m = k.max(scores, n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = scores[i] - m;
        double e = z < -750.0 ? 0.0 : std::exp(z);
        scores[i] = e;
        sum += e;
    }
    double inv = 1.0 / sum;
    for (std::size_t i = 0; i < n; ++i) scores[i] *= inv;
}

} // namespace shortcut::kernels
