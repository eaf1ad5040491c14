#pragma once

// Dense numeric kernels used by the transformer evaluator: scalar reference
// implementations plus AVX2 variants selected at runtime. The two backends are
// equivalence-tested in tests/test_kernels.cpp; decoded net outputs must be
// identical under either backend.

#include <cstddef>
#include <string>

namespace shortcut::kernels {

enum class Backend { Scalar, Avx2 };

struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // x[i] = max(x[i], 0)
    void (*relu)(double* x, std::size_t n);
    // y[i] = v
    void (*fill)(double* y, double v, std::size_t n);
    // max_i x[i]  (n >= 1)
    double (*max)(const double* x, std::size_t n);
};

// Active dispatch table.
const Ops& ops();

Backend active_backend();
std::string backend_name(Backend b);

// Returns false if the requested backend is unavailable on this machine.
bool select_backend(Backend b);

// Picks the best available backend; honors SHORTCUT_KERNELS=scalar|avx2.
void select_default_backend();

bool avx2_available();

// Numerically stable causal softmax of scores[0..n) in place.
// Entries below max-750 contribute exactly 0 (exp underflows to +0 there,
// so skipping the libm call does not change results).
void softmax_inplace(double* scores, std::size_t n);

extern const Ops scalar_ops;
#ifdef SHORTCUT_BUILD_AVX2
extern const Ops avx2_ops;
#endif

// Null when this build has no AVX2 variants or the CPU lacks them.
const Ops* avx2_ops_or_null();

} // namespace shortcut::kernels
