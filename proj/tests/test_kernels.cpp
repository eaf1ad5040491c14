#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "shortcut/harness.hpp"
#include "shortcut/kernels.hpp"

using namespace shortcut;
namespace k = shortcut::kernels;

namespace {

std::vector<double> random_vec(SplitMix64& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * (static_cast<double>(rng.next() >> 11) / (1ULL << 53) - 0.5);
    return v;
}

} // namespace

TEST_CASE("scalar and avx2 backends agree") {
    const k::Ops* avx2 = k::avx2_ops_or_null();
    if (!avx2) {
        MESSAGE("avx2 not available; skipping equivalence");
        return;
    }
    SplitMix64 rng(7);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 31u, 64u, 67u, 257u}) {
        auto x = random_vec(rng, n, 2.0);
        auto y = random_vec(rng, n, 2.0);
        double a = 1.37;

        auto ys = y, yv = y;
        k::scalar_ops.axpy(ys.data(), a, x.data(), n);
        avx2->axpy(yv.data(), a, x.data(), n);
        // The vector path fuses the multiply-add; allow one rounding of slack.
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::fabs(ys[i] - yv[i]) <= 4e-16 * (1.0 + std::fabs(ys[i])));

        double ds = k::scalar_ops.dot(x.data(), y.data(), n);
        double dv = avx2->dot(x.data(), y.data(), n);
        CHECK(std::fabs(ds - dv) <= 1e-12 * (1.0 + std::fabs(ds)));

        auto rs = x, rv = x;
        k::scalar_ops.relu(rs.data(), n);
        avx2->relu(rv.data(), n);
        CHECK(rs == rv);

        CHECK(k::scalar_ops.max(x.data(), n) == avx2->max(x.data(), n));

        std::vector<double> fs(n), fv(n);
        k::scalar_ops.fill(fs.data(), 0.25, n);
        avx2->fill(fv.data(), 0.25, n);
        CHECK(fs == fv);
    }
}

TEST_CASE("backend selection honors availability") {
    CHECK(k::select_backend(k::Backend::Scalar));
    CHECK(k::active_backend() == k::Backend::Scalar);
    if (k::avx2_available()) {
        CHECK(k::select_backend(k::Backend::Avx2));
        CHECK(k::active_backend() == k::Backend::Avx2);
    }
    k::select_default_backend();
}

TEST_CASE("softmax normalizes and respects causal prefix length") {
    std::vector<double> z = {0.5, -1.0, 2.0, 0.0};
    k::softmax_inplace(z.data(), 3);  // entry 3 untouched
    CHECK(z[3] == 0.0);
    CHECK(z[0] + z[1] + z[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(z[2] > z[0]);
}

TEST_CASE("softmax approximates hard max within 2T exp(-gamma)") {
    SplitMix64 rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        int t = 2 + rng.below(63);
        double gamma = 5.0 + 15.0 * (rng.next() >> 11) / static_cast<double>(1ULL << 53);
        int star = rng.below(t);
        std::vector<double> z(t);
        for (int i = 0; i < t; ++i)
            z[i] = -gamma - 5.0 * (rng.next() >> 11) / static_cast<double>(1ULL << 53);
        z[star] = 0.0;
        k::softmax_inplace(z.data(), t);
        double l1 = 0.0;
        for (int i = 0; i < t; ++i) l1 += std::fabs(z[i] - (i == star ? 1.0 : 0.0));
        CHECK(l1 <= 2.0 * t * std::exp(-gamma));
    }
}

TEST_CASE("deep-negative entries contribute exactly zero, matching libm") {
    // The evaluator skips exp below -750; libm underflows to +0 there.
    CHECK(std::exp(-750.1) == 0.0);
    std::vector<double> z = {0.0, -800.0, -751.0};
    k::softmax_inplace(z.data(), 3);
    CHECK(z[0] == 1.0);
    CHECK(z[1] == 0.0);
    CHECK(z[2] == 0.0);
}
