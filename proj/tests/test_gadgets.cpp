#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "shortcut/gadgets.hpp"
#include "shortcut/harness.hpp"

using namespace shortcut;

namespace {

double eval1(const MlpBlock& b, double x) { return mlp_apply({{x}}, b)[0][0]; }

std::vector<double> evaln(const MlpBlock& b, const std::vector<double>& x) {
    return mlp_apply({x}, b)[0];
}

// Random dyadic offset in [-delta/4, delta/4]: a multiple of delta / 2^12.
double dyadic_offset(SplitMix64& rng, double delta) {
    int grid = 1 << 10;
    int m = rng.below(2 * grid + 1) - grid;
    return delta * m / (1 << 12);
}

} // namespace

TEST_CASE("interp1d: indicator bumps on {0 -> 0, 1 -> 1}") {
    InterpTable1D t;
    t.keys = {0.0, 1.0};
    t.values = {{0.0}, {1.0}};
    auto b = build_interp_mlp_1d(t, 1.0, 1.0, 1.0);
    CHECK(b.layers.size() == 2);
    CHECK(b.layers[0].w.rows == 8);  // 4 |X|
    CHECK(eval1(b, 0.2) == 0.0);
    CHECK(eval1(b, 0.95) == 1.0);
    CHECK(eval1(b, 0.0) == 0.0);
    CHECK(eval1(b, 1.0) == 1.0);
}

TEST_CASE("interp1d: exact on dyadic grids under dyadic perturbation") {
    // mod-2 of scaled sums, T a power of two so keys are dyadic.
    int T = 8;
    InterpTable1D t;
    for (int m = 0; m <= 10; ++m) {
        t.keys.push_back(m / (2.0 * T));
        t.values.push_back({static_cast<double>(m % 2)});
    }
    double delta = 1.0 / (2.0 * T);
    auto b = build_interp_mlp_1d(t, delta, 1.0, 1.0);
    SplitMix64 rng(1);
    for (std::size_t k = 0; k < t.keys.size(); ++k) {
        CHECK(eval1(b, t.keys[k]) == t.values[k][0]);  // bitwise
        for (int rep = 0; rep < 64; ++rep) {
            double xi = dyadic_offset(rng, delta);
            CHECK(eval1(b, t.keys[k] + xi) == t.values[k][0]);
        }
    }
}

TEST_CASE("interp1d: non-dyadic grids are exact to rounding") {
    int T = 5;
    InterpTable1D t;
    for (int m = 0; m <= 10; ++m) {
        t.keys.push_back(m / (2.0 * T));
        t.values.push_back({static_cast<double>(m % 2)});
    }
    double delta = 1.0 / (2.0 * T);
    auto b = build_interp_mlp_1d(t, delta, 1.0, 1.0);
    for (std::size_t k = 0; k < t.keys.size(); ++k) {
        double y = eval1(b, t.keys[k]);
        CHECK(std::fabs(y - t.values[k][0]) < 1e-9);
        CHECK(std::round(y) == t.values[k][0]);
    }
}

TEST_CASE("interp1d rejects keys closer than delta") {
    InterpTable1D t;
    t.keys = {0.0, 0.4};
    t.values = {{0.0}, {1.0}};
    CHECK_THROWS_AS(build_interp_mlp_1d(t, 1.0, 1.0, 1.0), InputError);
}

TEST_CASE("interpnd: XOR table, exact on all four points") {
    InterpTableND t;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            t.keys.push_back({static_cast<double>(a), static_cast<double>(b)});
            t.values.push_back({static_cast<double>(a ^ b)});
        }
    auto blk = build_interp_mlp_nd(t, 1.0, 1.0, 1.0);
    CHECK(blk.layers.size() == 3);
    SplitMix64 rng(2);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            CHECK(evaln(blk, {double(a), double(b)})[0] == double(a ^ b));
            for (int rep = 0; rep < 64; ++rep) {
                double xa = a + dyadic_offset(rng, 1.0), xb = b + dyadic_offset(rng, 1.0);
                CHECK(evaln(blk, {xa, xb})[0] == double(a ^ b));
            }
        }
    }
}

TEST_CASE("interpnd: singleton table is the constant function on its key") {
    InterpTableND t;
    t.keys = {{2.0, 3.0, 1.0}};
    t.values = {{7.0, -2.5}};
    auto blk = build_interp_mlp_nd(t, 1.0, 3.0, 7.0);
    auto out = evaln(blk, {2.0, 3.0, 1.0});
    CHECK(out == std::vector<double>{7.0, -2.5});
    out = evaln(blk, {2.125, 2.875, 1.25});
    CHECK(out == std::vector<double>{7.0, -2.5});
}

TEST_CASE("interpnd: dihedral mixing table phi_h(g) = g^{-1}") {
    // N = C4, H = C2, phi_e = id, phi_h = inverse.
    InterpTableND t;
    for (int g = 0; g < 4; ++g) {
        for (int h = 0; h < 2; ++h) {
            t.keys.push_back({static_cast<double>(g), static_cast<double>(h)});
            int out = h == 0 ? g : (4 - g) % 4;
            t.values.push_back({static_cast<double>(out)});
        }
    }
    auto blk = build_interp_mlp_nd(t, 1.0, 4.0, 4.0);
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 2; ++h)
            CHECK(evaln(blk, {double(g), double(h)})[0] ==
                  (h == 0 ? double(g) : double((4 - g) % 4)));
}

TEST_CASE("threshold: exact at and beyond the margin") {
    // Bitwise on dyadic scales.
    for (double delta : {0.25, 0.0078125}) {
        auto b = build_threshold_mlp(delta);
        CHECK(b.layers[0].w.rows == 2);
        CHECK(b.layers[0].w.max_abs() <= 1.0 / delta);
        CHECK(eval1(b, delta) == 1.0);
        CHECK(eval1(b, -delta) == 0.0);
        CHECK(eval1(b, 10.0 * delta) == 1.0);
        CHECK(eval1(b, -delta + delta / 4.0) == 0.0);
        CHECK(eval1(b, delta - delta / 4.0) == 1.0);
    }
    // Non-dyadic scales keep one rounding of slack on the saturated side.
    for (double delta : {0.3, 0.013}) {
        auto b = build_threshold_mlp(delta);
        CHECK(std::fabs(eval1(b, delta) - 1.0) <= 2e-15);
        CHECK(std::fabs(eval1(b, -delta)) <= 2e-15);
        CHECK(std::fabs(eval1(b, -delta + delta / 4.0)) <= 2e-15);
        CHECK(std::fabs(eval1(b, delta - delta / 4.0) - 1.0) <= 2e-15);
    }
    CHECK_THROWS_AS(build_threshold_mlp(0.0), InputError);
}

TEST_CASE("composition gadget equals the compose oracle exhaustively") {
    for (int n : {2, 3}) {
        auto blk = build_composition_mlp(n);
        CHECK(blk.max_abs_weight() <= 4.0 * n + 2.0);
        int total = 1;
        for (int i = 0; i < n; ++i) total *= n;
        SplitMix64 rng(3);
        for (int gi = 0; gi < total; ++gi) {
            for (int fi = 0; fi < total; ++fi) {
                Transformation g, f;
                int gg = gi, ff = fi;
                for (int i = 0; i < n; ++i) {
                    g.image.push_back(gg % n);
                    gg /= n;
                    f.image.push_back(ff % n);
                    ff /= n;
                }
                auto fog = compose(f, g);
                std::vector<double> x(2 * n);
                for (int i = 0; i < n; ++i) {
                    x[i] = g.image[i] + 1.0;
                    x[n + i] = f.image[i] + 1.0;
                }
                auto out = evaln(blk, x);
                for (int i = 0; i < n; ++i) {
                    REQUIRE(out[n + i] == fog.image[i] + 1.0);  // bitwise on exact input
                    REQUIRE(out[i] == 0.0);
                }
                // +-0.1 noise: the rounded map is unchanged and the output is
                // within the pass-through of the input perturbation.
                std::vector<double> noisy = x;
                double worst = 0.0;
                for (auto& v : noisy) {
                    double xi = 0.1 * (rng.below(2001) - 1000) / 1000.0;
                    v += xi;
                }
                auto nout = evaln(blk, noisy);
                for (int i = 0; i < n; ++i) {
                    REQUIRE(std::round(nout[n + i]) == fog.image[i] + 1.0);
                    worst = std::max(worst, std::fabs(nout[n + i] - (fog.image[i] + 1.0)));
                }
                REQUIRE(worst <= 0.1 + 1e-9);
            }
        }
    }
}

TEST_CASE("composition gadget: identity leaves g unchanged") {
    int n = 4;
    auto blk = build_composition_mlp(n);
    SplitMix64 rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(2 * n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.below(n) + 1.0;
            x[n + i] = i + 1.0;  // f = identity
        }
        auto out = evaln(blk, x);
        for (int i = 0; i < n; ++i) CHECK(out[n + i] == x[i]);
    }
}

TEST_CASE("gadget widths and norms meet the lemma bounds") {
    InterpTable1D t;
    for (int m = 0; m < 12; ++m) {
        t.keys.push_back(m * 0.5);
        t.values.push_back({m * 1.0, -m * 1.0});
    }
    auto b = build_interp_mlp_1d(t, 0.5, 6.0, 11.0);
    CHECK(b.layers[0].w.rows == 4 * 12);
    CHECK(b.layers[0].w.max_abs() <= 4.0 / 0.5 + 1e-12);
    double bmax = 0.0;
    for (double v : b.layers[0].b) bmax = std::max(bmax, std::fabs(v));
    CHECK(bmax <= 4.0 * 6.0 / 0.5 + 2.0 + 1e-12);
    CHECK(b.layers[1].w.max_abs() <= 11.0 + 1e-12);

    InterpTableND tn;
    for (int a = 0; a < 3; ++a)
        for (int bb = 0; bb < 3; ++bb) {
            tn.keys.push_back({double(a), double(bb)});
            tn.values.push_back({double(a * bb)});
        }
    auto bn = build_interp_mlp_nd(tn, 1.0, 2.0, 4.0);
    CHECK(bn.layers[0].w.rows == 4 * (3 + 3));
    CHECK(bn.layers[1].w.rows == 9);
    CHECK(bn.layers[1].w.max_abs() <= 1.0);
    CHECK(bn.layers[2].w.max_abs() <= 4.0 + 1e-12);
}

TEST_CASE("remap and parallel merge preserve semantics") {
    // Two independent 1d interpolators merged block-diagonally.
    InterpTable1D t1, t2;
    for (int m = 0; m < 3; ++m) {
        t1.keys.push_back(m);
        t1.values.push_back({m + 1.0});
        t2.keys.push_back(m);
        t2.values.push_back({2.0 * m});
    }
    auto b1 = build_interp_mlp_1d(t1, 1.0, 2.0, 3.0);
    auto b2 = build_interp_mlp_1d(t2, 1.0, 2.0, 4.0);
    int d = 4;
    auto e1 = embed_mlp(b1, d, {0}, {1}, mask_except(d, {1}));
    auto e2 = embed_mlp(b2, d, {2}, {3}, mask_except(d, {3}));
    auto merged = merge_mlp_parallel({&e1, &e2}, d);
    auto out = mlp_apply({{2.0, 9.0, 1.0, 9.0}}, merged);
    CHECK(out[0][1] == 3.0);
    CHECK(out[0][3] == 2.0);
    CHECK(out[0][0] == 2.0);  // residual
}
