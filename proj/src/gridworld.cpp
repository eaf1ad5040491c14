#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "shortcut/compiler.hpp"

namespace shortcut {

// ---------------------------------------------------------------------------
// Reference parallel algorithm.

GridworldTrace gridworld_final_state(std::span<const int> actions, int s) {
    if (s < 1) throw InputError("gridworld: S must be >= 1");
    for (int a : actions)
        if (a < -1 || a > 1) throw InputError("gridworld: actions must be in {-1,0,1}");
    GridworldTrace tr;
    std::vector<int>& z = tr.prefix_sums;
    int cur = 0;
    for (int i = 0; i < s + 1; ++i) {
        cur -= 1;
        z.push_back(cur);
    }
    for (int a : actions) {
        cur += a;
        z.push_back(cur);
    }
    int p = static_cast<int>(z.size());
    // Shortest suffix holding s+1 distinct prefix sums (positions 1-based).
    std::set<int> seen;
    int t_uniq = 1;
    for (int t = p; t >= 1; --t) {
        seen.insert(z[t - 1]);
        if (static_cast<int>(seen.size()) == s + 1) {
            t_uniq = t;
            break;
        }
    }
    int zmin = z[t_uniq - 1], zmax = z[t_uniq - 1];
    for (int t = t_uniq; t <= p; ++t) {
        zmin = std::min(zmin, z[t - 1]);
        zmax = std::max(zmax, z[t - 1]);
    }
    for (int t = t_uniq; t <= p; ++t) {
        if (z[t - 1] == zmin) tr.t_min = t;
        if (z[t - 1] == zmax) tr.t_max = t;
    }
    tr.t_uniq = t_uniq;
    tr.boundary = tr.t_min > tr.t_max ? 0 : s;
    tr.t_final = std::max(tr.t_min, tr.t_max);
    tr.final_state = z[p - 1] - z[tr.t_final - 1] + tr.boundary;
    return tr;
}

std::vector<int> gridworld_trajectory(std::span<const int> actions, int s) {
    std::vector<int> out;
    out.reserve(actions.size());
    for (std::size_t t = 1; t <= actions.size(); ++t)
        out.push_back(gridworld_final_state(actions.subspan(0, t), s).final_state);
    return out;
}

// ---------------------------------------------------------------------------
// The depth-2 net.

namespace {

// Columns of the raw layer-2 MLP: the 2S+1 head outputs x[0..2S] (each the
// gamma encoding of the position its head selected).
//
// Head semantics (established by the attention construction below): head s
// targets prefix-sum value z_t + (s - S). If the value was achieved at a
// position <= t, x[s] is the gamma of its last occurrence. Otherwise the head
// falls onto the last occurrence of the nearest achieved value, which makes
// it duplicate the head of that value exactly; duplicates only appear outside
// the achieved range and always copy their neighbor toward the center.
//
// The state is S - s* where window s* = [s*, s*+S] (in head space) is the one
// whose oldest endpoint is most recent among fully-achieved windows -- the
// same window the reference algorithm derives from t_uniq.
MlpBlock gridworld_mlp2(int s_walls, double delta_half) {
    int s = s_walls;
    int nheads = 2 * s + 1;
    double dlt = delta_half;  // threshold scale; gamma gaps are ~3x bigger

    // Layer 1: threshold pre-activations.
    // eqL[j], j in 0..s-1: indicator x[j] == x[j+1] (4 units each).
    // eqR[j], j in s+1..2s: indicator x[j] == x[j-1] (4 units).
    // cmpL[w], w in 1..s: 1[x[w-1] > x[w+s]] (2 units).
    // cmpR[w], w in 0..s-1: 1[x[w+s+1] > x[w]] (2 units).
    int n_eq = 2 * s;
    int h1 = 4 * n_eq + 2 * s + 2 * s;
    SparseMatrix::Builder w1(h1, nheads);
    std::vector<double> b1(h1, 0.0);
    auto eq_unit_base = [&](int k) { return 4 * k; };
    int cmpl_base = 4 * n_eq;
    int cmpr_base = 4 * n_eq + 2 * s;
    double inv2 = 1.0 / (2.0 * dlt);
    auto add_psi_pair = [&](int unit, int hi, int lo, double shift) {
        // psi(d + shift) with d = x[hi] - x[lo]: two units sharing the slope.
        w1.add(unit, hi, inv2);
        w1.add(unit, lo, -inv2);
        b1[unit] = shift * inv2 + 0.5;
        w1.add(unit + 1, hi, inv2);
        w1.add(unit + 1, lo, -inv2);
        b1[unit + 1] = shift * inv2 - 0.5;
    };
    for (int j = 0; j < s; ++j) {  // eqL[j]: d = x[j] - x[j+1]
        int base = eq_unit_base(j);
        add_psi_pair(base, j, j + 1, dlt);
        add_psi_pair(base + 2, j, j + 1, -dlt);
    }
    for (int j = 0; j < s; ++j) {  // eqR[s+1+j]: d = x[s+1+j] - x[s+j]
        int base = eq_unit_base(s + j);
        add_psi_pair(base, s + 1 + j, s + j, dlt);
        add_psi_pair(base + 2, s + 1 + j, s + j, -dlt);
    }
    for (int w = 1; w <= s; ++w) {  // cmpL[w] = 1[x[w-1] - x[w+s] > 0]
        int u = cmpl_base + 2 * (w - 1);
        w1.add(u, w - 1, inv2);
        w1.add(u, w + s, -inv2);
        b1[u] = 0.5;
        w1.add(u + 1, w - 1, inv2);
        w1.add(u + 1, w + s, -inv2);
        b1[u + 1] = -0.5;
    }
    for (int w = 0; w < s; ++w) {  // cmpR[w] = 1[x[w+s+1] - x[w] > 0]
        int u = cmpr_base + 2 * w;
        w1.add(u, w + s + 1, inv2);
        w1.add(u, w, -inv2);
        b1[u] = 0.5;
        w1.add(u + 1, w + s + 1, inv2);
        w1.add(u + 1, w, -inv2);
        b1[u + 1] = -0.5;
    }

    // Linear views over layer-1 units.
    struct Lin {
        std::vector<std::pair<int, double>> terms;
        double bias = 0.0;
    };
    auto eq_of = [&](int k) {  // k in 0..2s-1 (left then right arm)
        Lin l;
        int base = eq_unit_base(k);
        l.terms = {{base, 1.0}, {base + 1, -1.0}, {base + 2, -1.0}, {base + 3, 1.0}};
        return l;
    };
    auto cmpl_of = [&](int w) {
        Lin l;
        l.terms = {{cmpl_base + 2 * (w - 1), 1.0}, {cmpl_base + 2 * (w - 1) + 1, -1.0}};
        return l;
    };
    auto cmpr_of = [&](int w) {
        Lin l;
        l.terms = {{cmpr_base + 2 * w, 1.0}, {cmpr_base + 2 * w + 1, -1.0}};
        return l;
    };

    // Layer 2 units: elig[w] (AND of the window's validity bits),
    // or-pairs for better-than-left and better-than-right.
    int nwin = s + 1;
    int h2 = nwin + 2 * nwin + 2 * nwin;
    SparseMatrix::Builder w2(h2, h1);
    std::vector<double> b2(h2, 0.0);
    auto put = [&](int row, const Lin& lin, double scale) {
        for (auto [u, v] : lin.terms) w2.add(row, u, v * scale);
        b2[row] += lin.bias * scale;
    };
    int orl_base = nwin, orr_base = nwin + 2 * nwin;
    for (int w = 0; w <= s; ++w) {
        // elig[w] = relu(1 - sum of eq bits over heads w..s-1 and s+1..w+s).
        b2[w] = 1.0;
        for (int j = w; j <= s - 1; ++j) put(w, eq_of(j), -1.0);
        for (int j = s + 1; j <= w + s; ++j) put(w, eq_of(j - 1), -1.0);
        // btl[w]: window w-1 invalid (eqL[w-1]) or worse (cmpL[w]); at the
        // left edge the OR input is the constant 1.
        int u = orl_base + 2 * w;
        if (w == 0) {
            b2[u] = 1.0;
            b2[u + 1] = 0.0;
        } else {
            put(u, eq_of(w - 1), 1.0);
            put(u, cmpl_of(w), 1.0);
            put(u + 1, eq_of(w - 1), 1.0);
            put(u + 1, cmpl_of(w), 1.0);
            b2[u + 1] = -1.0;
        }
        // btr[w]: window w+1 invalid (eqR at head w+s+1) or worse (cmpR[w]).
        u = orr_base + 2 * w;
        if (w == s) {
            b2[u] = 1.0;
            b2[u + 1] = 0.0;
        } else {
            put(u, eq_of(s + (w + s + 1) - (s + 1)), 1.0);  // eqR index for head w+s+1
            put(u, cmpr_of(w), 1.0);
            put(u + 1, eq_of(s + w), 1.0);
            put(u + 1, cmpr_of(w), 1.0);
            b2[u + 1] = -1.0;
        }
    }

    // Layer 3: winner[w] = relu(elig + btl + btr - 2).
    SparseMatrix::Builder w3(nwin, h2);
    std::vector<double> b3(nwin, -2.0);
    for (int w = 0; w <= s; ++w) {
        w3.add(w, w, 1.0);
        w3.add(w, orl_base + 2 * w, 1.0);
        w3.add(w, orl_base + 2 * w + 1, -1.0);
        w3.add(w, orr_base + 2 * w, 1.0);
        w3.add(w, orr_base + 2 * w + 1, -1.0);
    }

    // Layer 4: state = sum_w winner[w] * (S - w).
    SparseMatrix::Builder w4(1, nwin);
    std::vector<double> b4(1, 0.0);
    for (int w = 0; w <= s; ++w)
        if (s - w != 0) w4.add(0, w, static_cast<double>(s - w));

    MlpBlock block;
    block.layers.push_back({w1.build(), std::move(b1)});
    block.layers.push_back({w2.build(), std::move(b2)});
    block.layers.push_back({w3.build(), std::move(b3)});
    block.layers.push_back({w4.build(), std::move(b4)});
    return block;
}

} // namespace

CompiledNet compile_gridworld(int s, int T) {
    if (s < 1) throw InputError("gridworld: S must be >= 1");
    if (T < 1) throw InputError("gridworld: T must be >= 1");
    int n = s + 1 + T;  // token positions: S+1 left pads then T inputs
    const int act = 0, bflag = 1, gam = 2, u_ch = 3, cone = 4, cos_ch = 5, sin_ch = 6;
    const int head0 = 7;
    const int out_ch = head0 + 2 * s + 1;
    const int d = out_ch + 1;

    TransformerNet net;
    net.capacity = T;
    net.d = d;
    // Rows: one attention absorber, then S+1 pad tokens ("L"), then inputs.
    {
        std::vector<double> bot(d, 0.0);
        bot[bflag] = 1.0;
        net.padding_prefix.push_back(bot);
        std::vector<double> padl(d, 0.0);
        padl[act] = -1.0;
        for (int i = 0; i < s + 1; ++i) net.padding_prefix.push_back(padl);
    }
    net.positional.assign(n + 1, std::vector<double>(d, 0.0));
    for (int t = 1; t <= n; ++t) net.positional[t][gam] = std::log(2.0 * n - t);
    net.symbols = {"L", kBottom, "R"};
    net.encoder.assign(3, std::vector<double>(d, 0.0));
    net.encoder[0][act] = -1.0;
    net.encoder[1][act] = 0.0;
    net.encoder[2][act] = 1.0;

    // Layer 1: scaled prefix sums u_t = z_t / (2n), then the circular
    // embedding (cos(pi u), sin(pi u)) plus a constant channel via the MLP.
    {
        NetLayer layer;
        AttentionHead head;
        SparseMatrix::Builder q(1, d), k(1, d), v(1, d), c(d, 1);
        q.add(0, gam, 1.0);
        k.add(0, bflag, 1.0);
        v.add(0, act, 1.0);
        c.add(u_ch, 0, 1.0);
        head.wq = q.build();
        head.wk = k.build();
        head.wv = v.build();
        head.wc = c.build();
        layer.attn.heads.push_back(std::move(head));
        layer.attn.residual = mask_except(d, {u_ch});

        InterpTable1D table;
        for (int m = -n; m <= n; ++m) {
            double key = m / (2.0 * n);
            table.keys.push_back(key);
            table.values.push_back({1.0, std::cos(M_PI * key), std::sin(M_PI * key)});
        }
        MlpBlock raw = build_interp_mlp_1d(table, 1.0 / (2.0 * n), 0.5, 1.0);
        layer.mlp = embed_mlp(raw, d, {u_ch}, {cone, cos_ch, sin_ch},
                              mask_except(d, {cone, cos_ch, sin_ch}));
        net.layers.push_back(std::move(layer));
        WorkspaceCheck chk;
        chk.layer = 0;
        chk.channels = {u_ch};
        chk.scale = 2.0 * n;
        chk.tol = 0.3;
        chk.lo = -n;
        chk.hi = n;
        net.checks.push_back(chk);
    }

    // Layer 2: one head per relative prefix-sum value z_t + (sh - s),
    // selecting the last position holding that value. Score:
    //   beta * [ cos(theta_j - theta_t - dtheta) - c * gamma_j - 2 * bflag_j ].
    double c_tie = M_PI * M_PI / (16.0 * std::log(2.0) * n * n);
    double gmin = std::log((2.0 * n - 1.0) / (2.0 * n - 2.0));
    // Temperature: big enough that both the value-mismatch gap and the
    // tie-break gap exceed ~40 nats, i.e. softmax is one-hot to ~1e-18.
    double beta = 80.0 * 2.0 / (c_tie * gmin);
    {
        double mismatch_gap = beta * ((1.0 - std::cos(M_PI / (2.0 * n))) - c_tie * std::log(2.0));
        double tie_gap = beta * c_tie * gmin;
        while (mismatch_gap < 40.0 || tie_gap < 40.0) {
            beta *= 2.0;
            mismatch_gap = beta * ((1.0 - std::cos(M_PI / (2.0 * n))) - c_tie * std::log(2.0));
            tie_gap = beta * c_tie * gmin;
        }
    }
    double sb = std::sqrt(beta);
    {
        NetLayer layer;
        for (int sh = 0; sh <= 2 * s; ++sh) {
            double dtheta = (sh - s) * M_PI / (2.0 * n);
            AttentionHead head;
            SparseMatrix::Builder q(4, d), k(4, d), v(4, d), c(d, 4);
            q.add(0, cos_ch, sb * std::cos(dtheta));
            q.add(0, sin_ch, -sb * std::sin(dtheta));
            q.add(1, cos_ch, sb * std::sin(dtheta));
            q.add(1, sin_ch, sb * std::cos(dtheta));
            q.add(2, cone, -beta * c_tie);
            q.add(3, cone, -2.0 * beta);
            k.add(0, cos_ch, sb);
            k.add(1, sin_ch, sb);
            k.add(2, gam, 1.0);
            k.add(3, bflag, 1.0);
            v.add(0, gam, 1.0);
            c.add(head0 + sh, 0, 1.0);
            head.wq = q.build();
            head.wk = k.build();
            head.wv = v.build();
            head.wc = c.build();
            layer.attn.heads.push_back(std::move(head));
        }
        std::vector<int> head_ch(2 * s + 1);
        std::iota(head_ch.begin(), head_ch.end(), head0);
        layer.attn.residual = mask_except(d, head_ch);
        MlpBlock raw = gridworld_mlp2(s, gmin / 3.0);
        layer.mlp = embed_mlp(raw, d, head_ch, {out_ch}, mask_except(d, {out_ch}));
        net.layers.push_back(std::move(layer));
    }

    net.decoder.kind = Decoder::Kind::RoundChannel;
    net.decoder.channel = out_ch;
    net.q0 = 0;
    net.construction = "gridworld";
    net.automaton_name = "grid" + std::to_string(s);
    net.metrics = net.recompute_metrics();

    CompiledNet out;
    out.net = std::move(net);
    out.report.construction = "gridworld";
    out.report.automaton = out.net.automaton_name;
    out.report.T = T;
    out.report.metrics = out.net.metrics;
    out.report.add("attention_layers", out.report.metrics.depth, 2);
    out.report.add("second_layer_heads",
                   static_cast<double>(out.net.layers[1].attn.heads.size()), 2.0 * s + 1);
    out.report.add("mlp1_width", out.net.layers[0].mlp.max_hidden_width(), 4.0 * (2 * n + 1));
    out.report.add("max_abs_weight", out.report.metrics.max_abs_weight,
                   std::max(2.0 * beta, 8.0 * n));
    // Hard-attention discharge: softmax mass on the selected position.
    {
        double worst = 2.0 * n * std::exp(-40.0);
        out.report.add("soft_attention_mass_defect", worst, 1.0 / (8.0 * T * (s + 1.0)));
    }
    return out;
}

} // namespace shortcut
