#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "shortcut/compiler.hpp"
#include "shortcut/harness.hpp"

using namespace shortcut;

namespace {

// Differential check of a net against its automaton's oracle.
void expect_exact(const Semiautomaton& a, int q0, const TransformerNet& net, int T, int trials,
                  std::uint64_t seed = 0, double ws_bound = 0.25) {
    auto rep = differential_test(a, q0, net, T, trials, seed);
    CHECK(rep.mismatches == 0);
    CHECK(rep.metrics_consistent);
    CHECK(rep.max_decode_deviation <= 0.25);
    CHECK(rep.workspace_ok);
    CHECK(rep.max_workspace_deviation <= ws_bound);
    if (rep.first_mismatch) {
        MESSAGE("first mismatch at trial ", rep.first_mismatch->trial, " position ",
                rep.first_mismatch->position, ": expected ", rep.first_mismatch->expected,
                " got ", rep.first_mismatch->got);
    }
}

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

} // namespace

TEST_CASE("mod counter: frozen trace and oracle agreement") {
    auto a = make_cyclic(2);
    auto cn = compile_mod_counter_net(a, 0, 8);
    CHECK(cn.report.all_pass());
    CHECK(cn.net.layers.size() == 1);
    auto out = net_evaluate(cn.net, std::vector<std::string>{"1", "0", "1", "1", "0", "0", "1", "0"});
    CHECK(out.states == std::vector<int>{1, 1, 0, 1, 1, 1, 0, 0});
    CHECK(out.states ==
          sequential_simulate(a, 0, std::vector<std::string>{"1", "0", "1", "1", "0", "0", "1", "0"})
              .states);
    expect_exact(a, 0, cn.net, 8, 256);

    auto c3 = compile_mod_counter_net(make_cyclic(3), 2, 8);
    auto zeros = net_evaluate(c3.net, std::vector<int>(8, 0));
    CHECK(zeros.states == std::vector<int>(8, 2));

    auto c5 = compile_mod_counter_net(make_cyclic(5), 0, 32);
    expect_exact(make_cyclic(5), 0, c5.net, 32, 300);

    CHECK_THROWS_AS(compile_mod_counter_net(make_gridworld(2), 0, 8), InputError);
}

TEST_CASE("counter group sim simulates the canonical automaton") {
    auto sim = compile_mod_counter(4, 16);
    CHECK(sim.net.layers.size() == 1);
    auto canon = canonical_group_semiautomaton(sim.group);
    expect_exact(canon, sim.group.identity_index, sim.net, 16, 300, 0, 1e-6);
}

TEST_CASE("memory nets") {
    auto m2 = compile_memory(2, 8, 0);
    CHECK(m2.report.all_pass());
    auto out = net_evaluate(
        m2.net, std::vector<std::string>{kBottom, "1", kBottom, kBottom, "0", kBottom});
    CHECK(out.states == std::vector<int>{0, 1, 1, 1, 0, 0});
    auto allbot = net_evaluate(m2.net, std::vector<int>(8, 0));
    CHECK(allbot.states == std::vector<int>(8, 0));
    expect_exact(make_memory(2), 0, m2.net, 8, 300);

    auto m5 = compile_memory(5, 64, 3);
    expect_exact(make_memory(5), 3, m5.net, 64, 300);
}

TEST_CASE("log-depth: parity exhaustive and the T=1 degenerate scan") {
    auto a = make_parity();
    auto c = compile_log_depth(a, 0, 8);
    CHECK(c.report.all_pass());
    CHECK(c.net.layers.size() == 3);
    auto rep = exhaustive_test(a, 0, c.net, 8);
    CHECK(rep.mismatches == 0);
    CHECK(rep.trials == 256);

    for (int q0 = 0; q0 < 2; ++q0) {
        auto c1 = compile_log_depth(a, q0, 1);
        CHECK(c1.net.layers.empty());
        for (int s = 0; s < 2; ++s) {
            auto one = net_evaluate(c1.net, std::vector<int>{s});
            CHECK(one.states == std::vector<int>{a.delta[s][q0]});
        }
    }
}

TEST_CASE("log-depth: depth is exactly ceil(log2 T)") {
    auto a = make_parity();
    for (int T = 1; T <= 128; ++T) {
        auto c = compile_log_depth(a, 0, T);
        CHECK(static_cast<int>(c.net.layers.size()) == ceil_log2(T));
        CHECK(c.net.capacity >= T);
    }
}

TEST_CASE("log-depth: single-state automaton gets a dummy state") {
    Semiautomaton one;
    one.num_states = 1;
    one.alphabet = {"a"};
    one.delta = {{0}};
    one.name = "one";
    auto c = compile_log_depth(one, 0, 4);
    auto out = net_evaluate(c.net, std::vector<int>{0, 0, 0});
    CHECK(out.states == std::vector<int>{0, 0, 0});
}

TEST_CASE("log-depth: S5 canonical automaton, random sequences") {
    auto s5 = sym({{1, 0, 2, 3, 4}, {1, 2, 3, 4, 0}});
    auto canon = canonical_group_semiautomaton(s5);
    auto c = compile_log_depth(canon, s5.identity_index, 16);
    CHECK(c.report.all_pass());
    CHECK(c.net.layers.size() == 4);
    expect_exact(canon, s5.identity_index, c.net, 16, 60);
}

TEST_CASE("direct product: C2 x C3 equals the product oracle") {
    auto simA = compile_mod_counter(2, 24);
    auto simB = compile_mod_counter(3, 24);
    auto prod = combine_direct_product({simA, simB});
    CHECK(prod.group.size() == 6);
    auto canon = canonical_group_semiautomaton(prod.group);
    expect_exact(canon, prod.group.identity_index, prod.net, 24, 300, 0, 1e-6);
    // Depth did not grow.
    CHECK(prod.net.layers.size() == 1);

    auto sim32 = compile_mod_counter(2, 32);
    auto triple = combine_direct_product({sim32, sim32, sim32});
    CHECK(triple.group.size() == 8);
    auto canon3 = canonical_group_semiautomaton(triple.group);
    expect_exact(canon3, triple.group.identity_index, triple.net, 32, 300, 0, 1e-6);

    auto single = combine_direct_product({simA});
    auto c2 = canonical_group_semiautomaton(simA.group);
    expect_exact(c2, simA.group.identity_index, single.net, 24, 100);
}

TEST_CASE("semidirect: trivial phi behaves as a direct product") {
    auto simA = compile_mod_counter(2, 12);
    auto simB = compile_mod_counter(3, 12);
    std::vector<std::vector<int>> trivial(2, std::vector<int>{0, 1, 2});
    auto semi = combine_semidirect(simB, simA, trivial);
    auto direct = combine_direct_product({simB, simA});
    // Same pair indexing (n-major): outputs must agree on random inputs.
    auto canon = canonical_group_semiautomaton(semi.group);
    SplitMix64 rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> seq(12);
        for (auto& s : seq) s = rng.below(6);
        auto a = net_evaluate(semi.net, seq);
        auto b = net_evaluate(direct.net, seq);
        CHECK(a.states == b.states);
    }
    expect_exact(canon, semi.group.identity_index, semi.net, 12, 200);
}

TEST_CASE("semidirect: D8 = C4 x| C2 with inversion, against the dihedral oracle") {
    auto d8 = make_dihedral(4);
    auto t = transformation_semigroup(d8);
    CHECK(t.size() == 8);
    // N = <advance>, H = <reverse> inside T(d8).
    int adv = t.find(transition_map(d8, std::string("advance")));
    int rev = t.find(transition_map(d8, std::string("reverse")));
    REQUIRE(adv >= 0);
    REQUIRE(rev >= 0);
    CHECK(t.element_order(adv) == 4);
    std::vector<int> n_el = {t.identity_index, adv, t.power(adv, 2), t.power(adv, 3)};
    std::sort(n_el.begin(), n_el.end());
    std::vector<int> h_el = {t.identity_index, rev};
    std::sort(h_el.begin(), h_el.end());
    auto nsub = subsemigroup(t, n_el);
    auto hsub = subsemigroup(t, h_el);
    auto simN = compile_solvable_group(nsub, 32).sim;
    auto simH = compile_solvable_group(hsub, 32).sim;
    // phi from conjugation: phi_h(n) = h n h^-1; with reverse this is n^-1.
    std::vector<int> to_n(t.size(), -1);
    for (std::size_t i = 0; i < n_el.size(); ++i) to_n[n_el[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> phi(2, std::vector<int>(4));
    for (std::size_t hi = 0; hi < h_el.size(); ++hi)
        for (std::size_t ni = 0; ni < n_el.size(); ++ni)
            phi[hi][ni] = to_n[t.mul(h_el[hi], t.mul(n_el[ni], t.inverse(h_el[hi])))];
    // The nontrivial row is inversion.
    int hswap = h_el[0] == t.identity_index ? 1 : 0;
    for (std::size_t ni = 0; ni < n_el.size(); ++ni)
        CHECK(phi[hswap][ni] == to_n[nsub.size() ? n_el[subsemigroup(t, n_el).inverse(
                                                       static_cast<int>(ni))] : 0]);

    auto semi = combine_semidirect(simN, simH, phi);
    CHECK(semi.group.size() == 8);
    // Concrete realization: elements are the dihedral transformations, so the
    // net bridges straight onto the dihedral automaton.
    CHECK(semi.group.ground_size() == 8);
    auto net = net_for_automaton(semi, d8, 0);
    expect_exact(d8, 0, net, 32, 500);

    auto canon = canonical_group_semiautomaton(semi.group);
    expect_exact(canon, semi.group.identity_index, semi.net, 32, 200);
}

TEST_CASE("semidirect: S3 = C3 x| C2 against the canonical S3 oracle") {
    auto s3 = sym({{1, 2, 0}, {1, 0, 2}});
    CHECK(s3.size() == 6);
    int rot = s3.find(Transformation{{1, 2, 0}});
    int swp = s3.find(Transformation{{1, 0, 2}});
    std::vector<int> n_el = {s3.identity_index, rot, s3.power(rot, 2)};
    std::sort(n_el.begin(), n_el.end());
    std::vector<int> h_el = {s3.identity_index, swp};
    std::sort(h_el.begin(), h_el.end());
    auto simN = compile_solvable_group(subsemigroup(s3, n_el), 16).sim;
    auto simH = compile_solvable_group(subsemigroup(s3, h_el), 16).sim;
    std::vector<int> to_n(s3.size(), -1);
    for (std::size_t i = 0; i < n_el.size(); ++i) to_n[n_el[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> phi(2, std::vector<int>(3));
    for (std::size_t hi = 0; hi < 2; ++hi)
        for (std::size_t ni = 0; ni < 3; ++ni)
            phi[hi][ni] = to_n[s3.mul(h_el[hi], s3.mul(n_el[ni], s3.inverse(h_el[hi])))];
    auto semi = combine_semidirect(simN, simH, phi);
    // Canonical S3 oracle directly, plus the action automaton via the bridge.
    auto canon = canonical_group_semiautomaton(semi.group);
    expect_exact(canon, semi.group.identity_index, semi.net, 16, 300, 0, 1e-6);
    auto action = make_permutation_group({{1, 2, 0}, {1, 0, 2}});
    auto net = net_for_automaton(semi, action, 0);
    expect_exact(action, 0, net, 16, 300);
}

TEST_CASE("wreath: C2 wr C2 and the Q8 restriction") {
    auto simC2 = compile_mod_counter(2, 16);
    auto w = combine_wreath(simC2, simC2);
    CHECK(w.group.size() == 8);  // |N|^|H| * |H|
    auto canon = canonical_group_semiautomaton(w.group);
    expect_exact(canon, w.group.identity_index, w.net, 16, 300);

    // Q8 as a subgroup of C4 wr C2.
    auto q8 = left_regular_group(quaternion_cayley());
    int gen = -1;
    for (int i = 0; i < 8; ++i)
        if (q8.element_order(i) == 4) { gen = i; break; }
    std::vector<int> n_el = {q8.identity_index, gen, q8.power(gen, 2), q8.power(gen, 3)};
    std::sort(n_el.begin(), n_el.end());
    auto emb = wreath_embedding(q8, all_of(q8), n_el);
    auto simC4 = compile_solvable_group(subsemigroup(q8, n_el), 16).sim;
    auto wq = combine_wreath(simC4, compile_mod_counter(2, 16));
    CHECK(wq.group.size() == 32);
    // Indices of the embedded Q8 elements inside the materialized wreath.
    std::vector<int> subset;
    for (int g = 0; g < 8; ++g) {
        int idx = emb.m_exp[g] * 16 + emb.f_parts[g][0] + emb.f_parts[g][1] * 4;
        subset.push_back(idx);
    }
    auto sorted_subset = subset;
    std::sort(sorted_subset.begin(), sorted_subset.end());
    auto rq8 = restrict_sim(wq, sorted_subset);
    CHECK(rq8.group.size() == 8);
    // The restricted group's Cayley table matches the quaternion table.
    std::vector<int> pos(32, -1);
    for (std::size_t i = 0; i < sorted_subset.size(); ++i) pos[sorted_subset[i]] = static_cast<int>(i);
    for (int g = 0; g < 8; ++g)
        for (int h = 0; h < 8; ++h)
            CHECK(rq8.group.mul(pos[subset[g]], pos[subset[h]]) ==
                  pos[subset[quaternion_cayley()[g][h]]]);
    auto canonq = canonical_group_semiautomaton(rq8.group);
    expect_exact(canonq, rq8.group.identity_index, rq8.net, 16, 300);
}

TEST_CASE("semidirect validates phi") {
    auto simA = compile_mod_counter(2, 8);
    auto simB = compile_mod_counter(3, 8);
    // Not a homomorphism into Aut(C3): swaps 0 and 1, which is no automorphism.
    std::vector<std::vector<int>> bad = {{0, 1, 2}, {1, 0, 2}};
    CHECK_THROWS_AS(combine_semidirect(simB, simA, bad), InputError);
    // Wrong arity.
    CHECK_THROWS_AS(combine_semidirect(simB, simA, {{0, 1, 2}}), InputError);
}

TEST_CASE("cascade failures name the offending component") {
    // Component 2 is permutation-reset but its group is A5 (non-solvable).
    CascadeSpec spec;
    Semiautomaton a5 = make_permutation_group({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}});
    a5.name = "a5-action";
    spec.components = {make_memory(2), a5};
    spec.deps.resize(1);
    for (int q = 0; q < 2; ++q)
        for (const auto& lbl : spec.components[0].alphabet)
            spec.deps[0][cascade_key(std::vector<int>{q}, lbl)] = a5.alphabet[0];
    for (int q = 0; q < 2; ++q)
        for (int p = 0; p < 5; ++p) spec.readout[cascade_key(std::vector<int>{q, p})] = p;
    try {
        compile_cascade(spec, {0, 0}, 8);
        FAIL("expected a component failure");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("component 2") != std::string::npos);
    }
}

TEST_CASE("wreath rejects wide quotient encodings") {
    auto simC2 = compile_mod_counter(2, 8);
    auto w = combine_wreath(simC2, simC2);
    CHECK_THROWS_AS(combine_wreath(simC2, w), UnsupportedError);
}

TEST_CASE("solvable pipeline: cyclic short-circuit and S4") {
    auto c4 = sym({{1, 2, 3, 0}});
    auto sc = compile_solvable_group(c4, 16);
    CHECK(sc.sim.net.layers.size() == 1);  // depth 1, a single counter
    CHECK(sc.report.all_pass());

    auto s4 = sym({{1, 0, 2, 3}, {1, 2, 3, 0}});
    auto s4c = compile_solvable_group(s4, 16);
    CHECK(s4c.report.all_pass());
    CHECK(s4c.sim.net.layers.size() <= 3 * std::log2(24.0));
    auto canon = canonical_group_semiautomaton(s4);
    expect_exact(canon, s4.identity_index, s4c.sim.net, 16, 100, 0, 1e-6);

    auto a4 = sym({{1, 2, 0, 3}, {0, 2, 3, 1}});
    auto a4c = compile_solvable_group(a4, 16);
    CHECK(a4c.report.all_pass());
    expect_exact(canonical_group_semiautomaton(a4), a4.identity_index, a4c.sim.net, 16, 100);
}

TEST_CASE("solvable pipeline refuses A5, naming the factor") {
    auto a5 = sym({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}});
    CHECK(a5.size() == 60);
    try {
        compile_solvable_group(a5, 8);
        FAIL("expected refusal");
    } catch (const UnsupportedError& e) {
        CHECK(std::string(e.what()).find("60") != std::string::npos);
    }
}

TEST_CASE("permutation-reset: pure resets behave like memory") {
    auto mem = make_memory(3);
    auto c = compile_permutation_reset(mem, 1, 24);
    expect_exact(mem, 1, c.net, 24, 300);
}

TEST_CASE("permutation-reset: parity with resets") {
    Semiautomaton a;
    a.num_states = 2;
    a.name = "parity-reset";
    a.alphabet = {"toggle", "set0", "set1"};
    a.delta = {{1, 0}, {0, 0}, {1, 1}};
    auto c = compile_permutation_reset(a, 0, 32);
    CHECK(c.report.all_pass());
    expect_exact(a, 0, c.net, 32, 500);
}

TEST_CASE("permutation-reset: C3 with resets") {
    Semiautomaton a;
    a.num_states = 3;
    a.name = "c3-reset";
    a.alphabet = {"rot", "set0", "set2", kBottom};
    a.delta = {{1, 2, 0}, {0, 0, 0}, {2, 2, 2}, {0, 1, 2}};
    auto c = compile_permutation_reset(a, 0, 24);
    expect_exact(a, 0, c.net, 24, 500);
    // Non-permutation-reset input is rejected.
    CHECK_THROWS_AS(compile_permutation_reset(make_gridworld(2), 0, 8), InputError);
}

TEST_CASE("cascade compilation: single component equals permutation-reset") {
    CascadeSpec spec;
    spec.components = {make_memory(2)};
    for (int q = 0; q < 2; ++q) spec.readout[cascade_key(std::vector<int>{q})] = q;
    auto cas = compile_cascade(spec, {0}, 16);
    auto pr = compile_permutation_reset(make_memory(2), 0, 16);
    SplitMix64 rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<int> seq(16);
        for (auto& s : seq) s = rng.below(3);
        CHECK(net_evaluate(cas.net, seq).states == net_evaluate(pr.net, seq).states);
    }
}

TEST_CASE("cascade compilation: two-level dihedral cascade") {
    Semiautomaton dir;
    dir.num_states = 2;
    dir.name = "dir";
    dir.alphabet = {"advance", "reverse"};
    dir.delta = {{0, 1}, {1, 0}};
    Semiautomaton ctr = make_cyclic(4);
    CascadeSpec spec;
    spec.name = "d8-cascade";
    spec.components = {dir, ctr};
    spec.deps.resize(1);
    for (int b = 0; b < 2; ++b) {
        spec.deps[0][cascade_key(std::vector<int>{b}, "advance")] = b == 0 ? "1" : "3";
        spec.deps[0][cascade_key(std::vector<int>{b}, "reverse")] = "0";
    }
    for (int b = 0; b < 2; ++b)
        for (int s = 0; s < 4; ++s)
            spec.readout[cascade_key(std::vector<int>{b, s})] = s + 4 * b;
    auto cas = compile_cascade(spec, {0, 0}, 32);
    expect_exact(make_dihedral(4), 0, cas.net, 32, 400);
}

TEST_CASE("cascade compilation: shipped gridworld(2) cascade") {
    auto spec = gridworld2_cascade();
    auto cas = compile_cascade(spec, {0, 0, 1}, 16);
    expect_exact(make_gridworld(2), 0, cas.net, 16, 400);
}

TEST_CASE("krohn-rhodes dispatch") {
    // Group route.
    auto kc = compile_krohn_rhodes(make_cyclic(6), 2, 16);
    expect_exact(make_cyclic(6), 2, kc.net, 16, 200);
    // Permutation-reset route.
    auto km = compile_krohn_rhodes(make_memory(2), 0, 16);
    expect_exact(make_memory(2), 0, km.net, 16, 200);
    // Dihedral action: a group, handled by the solvable pipeline.
    auto kd = compile_krohn_rhodes(make_dihedral(4), 3, 16);
    expect_exact(make_dihedral(4), 3, kd.net, 16, 200);
    // General aperiodic semigroups are refused.
    CHECK_THROWS_AS(compile_krohn_rhodes(make_gridworld(3), 0, 8), UnsupportedError);
    // Non-solvable groups are refused.
    auto a5 = make_permutation_group({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}});
    CHECK_THROWS_AS(compile_krohn_rhodes(a5, 0, 8), UnsupportedError);
}

TEST_CASE("exhaustive sweep across constructions at small lengths") {
    auto sweep = [](const Semiautomaton& a, int q0, const TransformerNet& net, int T) {
        auto rep = exhaustive_test(a, q0, net, T);
        CHECK(rep.mismatches == 0);
    };
    sweep(make_cyclic(3), 1, compile_mod_counter_net(make_cyclic(3), 1, 5).net, 5);  // 243
    sweep(make_memory(2), 0, compile_memory(2, 4, 0).net, 4);                        // 81
    sweep(make_dihedral(4), 0, compile_krohn_rhodes(make_dihedral(4), 0, 4).net, 4); // 16
    sweep(make_memory(3), 2, compile_krohn_rhodes(make_memory(3), 2, 4).net, 4);     // 256
    {
        Semiautomaton pr;
        pr.num_states = 2;
        pr.name = "parity-reset";
        pr.alphabet = {"toggle", "set0", "set1"};
        pr.delta = {{1, 0}, {0, 0}, {1, 1}};
        sweep(pr, 0, compile_permutation_reset(pr, 0, 4).net, 4);  // 81
    }
    sweep(make_gridworld(2), 0,
          compile_cascade(gridworld2_cascade(), {0, 0, 1}, 7).net, 7);  // 2187
    sweep(make_gridworld(2), 0, compile_gridworld(2, 7).net, 7);        // 2187
    sweep(make_parity(), 1, compile_log_depth(make_parity(), 1, 12).net, 12);  // 4096
}

TEST_CASE("A5 and S5 actions still compile with log-depth") {
    auto a5 = make_permutation_group({{1, 2, 0, 3, 4}, {0, 1, 3, 4, 2}});
    auto c = compile_log_depth(a5, 0, 16);
    expect_exact(a5, 0, c.net, 16, 300);
}
