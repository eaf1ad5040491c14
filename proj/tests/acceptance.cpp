// Acceptance suite: one pass/fail line per criterion; exit code is the number
// of failed criteria. Criteria are pinned here, not calibrated at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "shortcut/harness.hpp"
#include "shortcut/kernels.hpp"

using namespace shortcut;

namespace {

int g_failures = 0;

struct Criterion {
    const char* name;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;

    explicit Criterion(const char* n) : name(n) {}
    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
    ~Criterion() {
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %-28s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", name, secs,
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++g_failures;
    }
};

FiniteSemigroup sym(const std::vector<std::vector<int>>& gens) {
    std::vector<Transformation> ts;
    for (const auto& g : gens) ts.push_back(Transformation{g});
    return semigroup_closure(ts);
}

std::vector<int> all_of(const FiniteSemigroup& g) {
    std::vector<int> v(g.size());
    std::iota(v.begin(), v.end(), 0);
    return v;
}

std::vector<std::vector<int>> quaternion_cayley() {
    auto enc = [](int basis, int sign) { return 2 * basis + sign; };
    auto mul = [&](int x, int y) {
        int bx = x / 2, sx = x % 2, by = y / 2, sy = y % 2;
        int s = sx ^ sy;
        if (bx == 0) return enc(by, s);
        if (by == 0) return enc(bx, s);
        if (bx == by) return enc(0, s ^ 1);
        static const int prod[4][4] = {{0, 0, 0, 0}, {0, 0, 3, 2}, {0, 3, 0, 1}, {0, 2, 1, 0}};
        static const int psign[4][4] = {{0, 0, 0, 0}, {0, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 1, 0}};
        return enc(prod[bx][by], s ^ psign[bx][by]);
    };
    std::vector<std::vector<int>> cay(8, std::vector<int>(8));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) cay[i][j] = mul(i, j);
    return cay;
}

// Cyclic subgroup simulator for <gen> inside g.
GroupSim cyclic_sim_of(const FiniteSemigroup& g, int gen, int T) {
    std::vector<int> elems;
    int cur = g.identity_index;
    do {
        elems.push_back(cur);
        cur = g.mul(gen, cur);
    } while (cur != g.identity_index);
    std::sort(elems.begin(), elems.end());
    return compile_solvable_group(subsemigroup(g, elems), T).sim;
}

// D8 = C4 x| C2 built from the dihedral automaton's own transformation group.
GroupSim build_d8_semidirect(int T) {
    auto d8 = make_dihedral(4);
    auto t = transformation_semigroup(d8);
    int adv = t.find(transition_map(d8, std::string("advance")));
    int rev = t.find(transition_map(d8, std::string("reverse")));
    std::vector<int> n_el = {t.identity_index, adv, t.power(adv, 2), t.power(adv, 3)};
    std::sort(n_el.begin(), n_el.end());
    std::vector<int> h_el = {t.identity_index, rev};
    std::sort(h_el.begin(), h_el.end());
    auto simN = compile_solvable_group(subsemigroup(t, n_el), T).sim;
    auto simH = compile_solvable_group(subsemigroup(t, h_el), T).sim;
    std::vector<int> to_n(t.size(), -1);
    for (std::size_t i = 0; i < n_el.size(); ++i) to_n[n_el[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> phi(2, std::vector<int>(4));
    for (std::size_t hi = 0; hi < h_el.size(); ++hi)
        for (std::size_t ni = 0; ni < n_el.size(); ++ni)
            phi[hi][ni] = to_n[t.mul(h_el[hi], t.mul(n_el[ni], t.inverse(h_el[hi])))];
    return combine_semidirect(simN, simH, phi);
}

GroupSim build_q8_wreath(int T) {
    auto q8 = left_regular_group(quaternion_cayley());
    int gen = -1;
    for (int i = 0; i < 8; ++i)
        if (q8.element_order(i) == 4) { gen = i; break; }
    std::vector<int> n_el = {q8.identity_index, gen, q8.power(gen, 2), q8.power(gen, 3)};
    std::sort(n_el.begin(), n_el.end());
    auto emb = wreath_embedding(q8, all_of(q8), n_el);
    auto w = combine_wreath(compile_solvable_group(subsemigroup(q8, n_el), T).sim,
                            compile_mod_counter(2, T));
    std::vector<int> subset;
    for (int g = 0; g < 8; ++g)
        subset.push_back(emb.m_exp[g] * 16 + emb.f_parts[g][0] + emb.f_parts[g][1] * 4);
    std::sort(subset.begin(), subset.end());
    return restrict_sim(w, subset);
}

// One randomized-criterion entry: 1000 seeded uniform sequences, 0 mismatches.
bool randomized_case(Criterion& c, const std::string& label, const Semiautomaton& a, int q0,
                     const TransformerNet& net, int T, const CompileReport* report) {
    auto rep = differential_test(a, q0, net, T, 1000, 0);
    c.require(rep.mismatches == 0,
              label + " T=" + std::to_string(T) + ": " + std::to_string(rep.mismatches) +
                  " mismatches");
    c.require(rep.max_decode_deviation <= 0.25, label + ": margin deficit");
    if (report)
        c.require(report->all_pass(), label + ": metric bound failed");
    return rep.mismatches == 0;
}

double dyad(SplitMix64& rng, double delta) {
    int grid = 1 << 10;
    int m = rng.below(2 * grid + 1) - grid;
    return delta * m / (1 << 12);
}

} // namespace

// Criterion 1: exhaustive exactness (parity log-depth, gridworld depth-2).
static void criterion_exhaustive() {
    Criterion c("exhaustive-exactness");
    auto parity = make_parity();
    auto pl = compile_log_depth(parity, 0, 10);
    auto rep = exhaustive_test(parity, 0, pl.net, 10);
    c.require(rep.trials == 1024 && rep.mismatches == 0, "parity log-depth T=10");

    auto grid = make_gridworld(3);
    auto gw = compile_gridworld(3, 10);
    std::vector<int> seq(10);
    int bad = 0;
    for (int mask = 0; mask < 1024; ++mask) {
        for (int i = 0; i < 10; ++i) seq[i] = (mask >> i) & 1 ? 2 : 0;
        if (net_evaluate(gw.net, seq).states != sequential_simulate(grid, 0, seq).states) ++bad;
    }
    c.require(bad == 0, "gridworld(3) T=10 +-1 sequences: " + std::to_string(bad));
}

// Criterion 2: randomized exactness across the catalog at T in {8,32,64}.
static void criterion_randomized() {
    Criterion c("randomized-exactness");
    const std::vector<int> ts = {8, 32, 64};
    for (int T : ts) {
        for (int n : {2, 3, 5, 8}) {
            auto a = make_cyclic(n);
            auto compiled = compile_krohn_rhodes(a, 0, T);
            randomized_case(c, "C" + std::to_string(n), a, 0, compiled.net, T,
                            &compiled.report);
        }
        {
            auto sim = combine_direct_product(
                {compile_mod_counter(2, T), compile_mod_counter(2, T)});
            auto canon = canonical_group_semiautomaton(sim.group);
            randomized_case(c, "C2xC2", canon, sim.group.identity_index, sim.net, T, nullptr);
        }
        {
            auto sim = build_d8_semidirect(T);
            auto d8 = make_dihedral(4);
            auto net = net_for_automaton(sim, d8, 0);
            randomized_case(c, "D8-semidirect", d8, 0, net, T, nullptr);
        }
        {
            auto sim = build_q8_wreath(T);
            auto canon = canonical_group_semiautomaton(sim.group);
            randomized_case(c, "Q8-wreath", canon, sim.group.identity_index, sim.net, T,
                            nullptr);
        }
        {
            auto s3 = sym({{1, 2, 0}, {1, 0, 2}});
            auto sc = compile_solvable_group(s3, T);
            auto action = make_permutation_group({{1, 2, 0}, {1, 0, 2}});
            auto net = net_for_automaton(sc.sim, action, 0);
            randomized_case(c, "S3", action, 0, net, T, &sc.report);
        }
        {
            auto a4 = sym({{1, 2, 0, 3}, {0, 2, 3, 1}});
            auto sc = compile_solvable_group(a4, T);
            auto canon = canonical_group_semiautomaton(a4);
            randomized_case(c, "A4", canon, a4.identity_index, sc.sim.net, T, &sc.report);
        }
        {
            auto s4 = sym({{1, 0, 2, 3}, {1, 2, 3, 0}});
            auto sc = compile_solvable_group(s4, T);
            auto canon = canonical_group_semiautomaton(s4);
            randomized_case(c, "S4", canon, s4.identity_index, sc.sim.net, T, &sc.report);
        }
        for (int m : {2, 5}) {
            auto a = make_memory(m);
            auto compiled = compile_memory(m, T, 0);
            randomized_case(c, "memory(" + std::to_string(m) + ")", a, 0, compiled.net, T,
                            &compiled.report);
        }
        {
            auto a = make_gridworld(8);
            auto compiled = compile_gridworld(8, T);
            randomized_case(c, "gridworld(8)", a, 0, compiled.net, T, &compiled.report);
        }
        {
            auto s5 = sym({{1, 0, 2, 3, 4}, {1, 2, 3, 4, 0}});
            auto canon = canonical_group_semiautomaton(s5);
            auto compiled = compile_log_depth(canon, s5.identity_index, T);
            randomized_case(c, "S5-canonical-logdepth", canon, s5.identity_index, compiled.net,
                            T, &compiled.report);
        }
        {
            auto a5 = sym({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}});
            auto canon = canonical_group_semiautomaton(a5);
            auto compiled = compile_log_depth(canon, a5.identity_index, T);
            randomized_case(c, "A5-canonical-logdepth", canon, a5.identity_index, compiled.net,
                            T, &compiled.report);
        }
    }
}

// Criterion 3: depth accounting.
static void criterion_depth() {
    Criterion c("depth-accounting");
    auto parity = make_parity();
    for (int T = 1; T <= 128; ++T) {
        auto compiled = compile_log_depth(parity, 0, T);
        c.require(static_cast<int>(compiled.net.layers.size()) == ceil_log2(T),
                  "log-depth depth at T=" + std::to_string(T));
    }
    c.require(compile_mod_counter_net(make_cyclic(5), 0, 16).net.layers.size() == 1,
              "counter depth");
    c.require(compile_memory(4, 16, 0).net.layers.size() == 1, "memory depth");
    for (int s : {1, 3, 8}) {
        auto gw = compile_gridworld(s, 16);
        c.require(gw.net.layers.size() == 2, "gridworld layers");
        c.require(static_cast<int>(gw.net.layers[1].attn.heads.size()) == 2 * s + 1,
                  "gridworld second-layer heads");
    }
    for (auto gens : {std::vector<std::vector<int>>{{1, 0, 2, 3}, {1, 2, 3, 0}},
                      std::vector<std::vector<int>>{{1, 2, 0, 3}, {0, 2, 3, 1}}}) {
        auto g = sym(gens);
        auto sc = compile_solvable_group(g, 8);
        c.require(sc.sim.net.layers.size() <= 3.0 * std::log2(double(g.size())),
                  "solvable depth bound for |G|=" + std::to_string(g.size()));
    }
}

// Criterion 4: metric conformance of the compile reports.
static void criterion_metrics() {
    Criterion c("metric-conformance");
    for (int T : {8, 32}) {
        for (int n : {2, 3, 8}) {
            auto r = compile_log_depth(canonical_group_semiautomaton(sym({{1, 2, 0, 3, 4}})), 0,
                                       T);  // C5 canonical: five states
            c.require(r.report.all_pass(), "log-depth report");
            auto cn = compile_mod_counter_net(make_cyclic(n), 0, T);
            bool width_ok = cn.net.metrics.mlp_width <= 4.0 * n * T;
            bool norm_ok = cn.net.metrics.max_abs_weight <= 4.0 * n * T + 2;
            c.require(cn.report.all_pass() && width_ok && norm_ok, "counter report");
            auto mm = compile_memory(n, T, 0);
            bool mn = mm.net.metrics.max_abs_weight <= 2.0 * T * std::log(double(n) * T) + 1e-9;
            c.require(mm.report.all_pass() && mn, "memory report");
        }
        auto parity = make_parity();
        auto lp = compile_log_depth(parity, 0, T);
        c.require(lp.net.metrics.embed_dim == 2 * 2 + 2, "thm1 embed dim");
        auto s4 = sym({{1, 0, 2, 3}, {1, 2, 3, 0}});
        auto sc = compile_solvable_group(s4, T);
        c.require(sc.report.all_pass(), "groups-main report");
        c.require(sc.sim.rep_dim <= 2 * s4.size(), "groups-main rep dim");
        c.require(sc.sim.net.metrics.max_abs_weight <= 6.0 * 4 * T + 1e-9, "groups-main norms");
    }
}

// Criterion 5: gadget suite.
static void criterion_gadgets() {
    Criterion c("gadget-suite");
    SplitMix64 rng(5);
    {
        InterpTable1D t;
        for (int m = 0; m <= 10; ++m) {
            t.keys.push_back(m / 16.0);
            t.values.push_back({double(m % 2)});
        }
        double delta = 1.0 / 16.0;
        auto b = build_interp_mlp_1d(t, delta, 1.0, 1.0);
        for (std::size_t k = 0; k < t.keys.size(); ++k) {
            c.require(mlp_apply({{t.keys[k]}}, b)[0][0] == t.values[k][0], "interp1d key");
            for (int rep = 0; rep < 64; ++rep) {
                double x = t.keys[k] + dyad(rng, delta);
                c.require(mlp_apply({{x}}, b)[0][0] == t.values[k][0], "interp1d offset");
            }
        }
    }
    {
        InterpTableND t;
        for (int a = 0; a < 3; ++a)
            for (int bq = 0; bq < 2; ++bq) {
                t.keys.push_back({double(a), double(bq)});
                t.values.push_back({double((a + 2 * bq) % 3), double(a == bq)});
            }
        auto b = build_interp_mlp_nd(t, 1.0, 3.0, 2.0);
        for (std::size_t k = 0; k < t.keys.size(); ++k) {
            c.require(mlp_apply({t.keys[k]}, b)[0] == t.values[k], "interpnd key");
            for (int rep = 0; rep < 64; ++rep) {
                std::vector<double> x = t.keys[k];
                for (auto& v : x) v += dyad(rng, 1.0);
                c.require(mlp_apply({x}, b)[0] == t.values[k], "interpnd offset");
            }
        }
    }
    for (int n : {2, 3}) {
        auto blk = build_composition_mlp(n);
        int total = 1;
        for (int i = 0; i < n; ++i) total *= n;
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
                auto out = mlp_apply({x}, blk)[0];
                bool exact = true;
                for (int i = 0; i < n; ++i) exact = exact && out[n + i] == fog.image[i] + 1.0;
                c.require(exact, "composition exact pair");
                for (auto& v : x) v += 0.1 * (rng.below(2001) - 1000) / 1000.0;
                auto noisy = mlp_apply({x}, blk)[0];
                bool rounded = true;
                for (int i = 0; i < n; ++i)
                    rounded = rounded && std::round(noisy[n + i]) == fog.image[i] + 1.0 &&
                              std::fabs(noisy[n + i] - (fog.image[i] + 1.0)) <= 0.1 + 1e-9;
                c.require(rounded, "composition under 0.1 noise");
            }
        }
    }
    {
        auto b = build_threshold_mlp(0.25);
        bool ok = mlp_apply({{0.25}}, b)[0][0] == 1.0 && mlp_apply({{-0.25}}, b)[0][0] == 0.0 &&
                  mlp_apply({{2.5}}, b)[0][0] == 1.0 &&
                  mlp_apply({{-0.25 + 0.0625}}, b)[0][0] == 0.0;
        c.require(ok, "threshold margins");
    }
}

// Criterion 6: softmax selection bound on 10^4 gapped score vectors.
static void criterion_softmax() {
    Criterion c("softmax-selection-bound");
    SplitMix64 rng(6);
    for (int rep = 0; rep < 10000; ++rep) {
        int t = 2 + rng.below(63);
        double gamma = 5.0 + 15.0 * (rng.next() >> 11) / double(1ULL << 53);
        int star = rng.below(t);
        std::vector<double> z(t);
        for (int i = 0; i < t; ++i)
            z[i] = -gamma - 10.0 * (rng.next() >> 11) / double(1ULL << 53);
        z[star] = 0.0;
        kernels::softmax_inplace(z.data(), t);
        double l1 = 0.0;
        for (int i = 0; i < t; ++i) l1 += std::fabs(z[i] - (i == star ? 1.0 : 0.0));
        if (l1 > 2.0 * t * std::exp(-gamma)) {
            c.require(false, "bound violated at rep " + std::to_string(rep));
            break;
        }
    }
}

// Criterion 7: reference-algorithm equivalence and the boundary property.
static void criterion_algorithm1() {
    Criterion c("algorithm1-equivalence");
    SplitMix64 rng(7);
    for (int s = 1; s <= 8; ++s) {
        auto grid = make_gridworld(s);
        for (int rep = 0; rep < 10000; ++rep) {
            std::vector<int> actions(64), syms(64);
            for (int i = 0; i < 64; ++i) {
                actions[i] = rng.below(3) - 1;
                syms[i] = actions[i] + 1;
            }
            auto tr = gridworld_final_state(actions, s);
            auto oracle = sequential_simulate(grid, 0, syms);
            if (tr.final_state != oracle.states.back()) {
                c.require(false, "final state mismatch S=" + std::to_string(s));
                return;
            }
            // Boundary property on the padded trajectory.
            std::vector<int> padded(s + 1, 0);
            padded.insert(padded.end(), syms.begin(), syms.end());
            auto pt = sequential_simulate(grid, 0, padded);
            if (pt.states[tr.t_final - 1] != tr.boundary) {
                c.require(false, "boundary property S=" + std::to_string(s));
                return;
            }
        }
    }
}

// Criterion 8: algebra oracle checks.
static void criterion_algebra() {
    Criterion c("algebra-oracles");
    c.require(transformation_semigroup(make_memory(2)).size() == 3, "flip-flop size");
    c.require(sym({{1, 0, 2, 3, 4}, {1, 2, 3, 4, 0}}).size() == 120, "S5 size");
    c.require(sym({{1, 2, 3, 4, 5, 0}}).size() == 6, "C6 size");
    c.require(is_solvable_group(sym({{1, 0, 2, 3}, {1, 2, 3, 0}})), "S4 solvable");
    c.require(!is_solvable_group(sym({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}})), "A5 not solvable");
    auto series = composition_series(sym({{1, 0, 2, 3}, {1, 2, 3, 0}}));
    std::multiset<int> fs(series.factor_orders.begin(), series.factor_orders.end());
    c.require(fs == std::multiset<int>{2, 2, 2, 3}, "S4 factors");

    SplitMix64 rng(8);
    {
        auto spec = gridworld2_cascade();
        auto grid = make_gridworld(2);
        for (int rep = 0; rep < 1000; ++rep) {
            std::vector<int> seq(32);
            for (auto& x : seq) x = rng.below(3);
            if (cascade_evaluate(spec, {0, 0, 1}, seq).readout_states !=
                sequential_simulate(grid, 0, seq).states) {
                c.require(false, "grid2 cascade mismatch");
                break;
            }
        }
    }
    {
        auto spec = dihedral_cascade(4);
        auto d8 = make_dihedral(4);
        for (int rep = 0; rep < 1000; ++rep) {
            std::vector<int> seq(32);
            for (auto& x : seq) x = rng.below(2);
            if (cascade_evaluate(spec, {0, 0}, seq).readout_states !=
                sequential_simulate(d8, 0, seq).states) {
                c.require(false, "dihedral cascade mismatch");
                break;
            }
        }
    }
}

// Criterion 9: the applicability split between Theorem 2 and Theorem 1.
static void criterion_refusal() {
    Criterion c("refusal-correctness");
    auto a5 = make_permutation_group({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}});
    auto s5 = make_permutation_group({{1, 0, 2, 3, 4}, {1, 2, 3, 4, 0}});
    for (const auto* a : {&a5, &s5}) {
        bool refused = false;
        try {
            compile_krohn_rhodes(*a, 0, 8);
        } catch (const UnsupportedError&) {
            refused = true;
        }
        c.require(refused, "krohn-rhodes must refuse non-solvable input");
        auto compiled = compile_log_depth(*a, 0, 16);
        auto rep = differential_test(*a, 0, compiled.net, 16, 1000, 0);
        c.require(rep.mismatches == 0, "log-depth on the same automaton");
    }
    c.require(!is_solvable_semiautomaton(canonical_group_semiautomaton(
                  sym({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}}))),
              "canonical A5 flagged non-solvable");
}

int main() {
    auto t0 = std::chrono::steady_clock::now();
    criterion_exhaustive();
    criterion_randomized();
    criterion_depth();
    criterion_metrics();
    criterion_gadgets();
    criterion_softmax();
    criterion_algorithm1();
    criterion_algebra();
    criterion_refusal();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d criterion(s) failed; total %.1fs\n", g_failures, secs);
    return g_failures;
}
