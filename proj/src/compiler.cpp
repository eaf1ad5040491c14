#include "shortcut/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace shortcut {

int ceil_log2(int t) {
    int l = 0;
    while ((1 << l) < t) ++l;
    return l;
}

void CompileReport::add(const std::string& name, double measured, double bound) {
    checks.push_back({name, measured, bound, measured <= bound + 1e-9});
}

bool CompileReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

nlohmann::ordered_json CompileReport::to_json() const {
    nlohmann::ordered_json j;
    j["construction"] = construction;
    j["automaton"] = automaton;
    j["T"] = T;
    j["metrics"] = {{"depth", metrics.depth},
                    {"embed_dim", metrics.embed_dim},
                    {"attention_width", metrics.attention_width},
                    {"mlp_width", metrics.mlp_width},
                    {"max_heads", metrics.max_heads},
                    {"max_abs_weight", metrics.max_abs_weight}};
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name}, {"measured", c.measured}, {"bound", c.bound},
                       {"pass", c.pass}});
    j["checks"] = std::move(arr);
    j["all_pass"] = all_pass();
    return j;
}

GroupNetLayout group_net_layout(int rep_dim) {
    GroupNetLayout l;
    l.rep_dim = rep_dim;
    l.d = rep_dim + 2;
    l.pad_flag = rep_dim;
    l.gamma = rep_dim + 1;
    return l;
}

namespace {

double gamma_pos(int t, int T) { return std::log(2.0 * T - t); }

// Net shell with the shared group-sim layout: one padding row carrying the
// attention absorber flag, and log positional encodings on the gamma channel.
TransformerNet group_net_shell(const GroupNetLayout& layout, int T) {
    TransformerNet net;
    net.capacity = T;
    net.d = layout.d;
    std::vector<double> pad(layout.d, 0.0);
    pad[layout.pad_flag] = 1.0;
    net.padding_prefix.push_back(pad);
    net.positional.assign(T + 1, std::vector<double>(layout.d, 0.0));
    for (int t = 1; t <= T; ++t) net.positional[t][layout.gamma] = gamma_pos(t, T);
    return net;
}

void set_group_symbols(GroupSim& sim) {
    auto canon = canonical_group_semiautomaton(sim.group);
    sim.net.symbols = canon.alphabet;
    sim.net.encoder.assign(sim.group.size(), std::vector<double>(sim.net.d, 0.0));
    for (int g = 0; g < sim.group.size(); ++g)
        for (int c = 0; c < sim.rep_dim; ++c)
            sim.net.encoder[g][sim.rep_channels[c]] = sim.rep[g][c];
    sim.net.decoder.kind = Decoder::Kind::RepLookup;
    sim.net.decoder.channels = sim.rep_channels;
    sim.net.decoder.table.clear();
    for (int g = 0; g < sim.group.size(); ++g) sim.net.decoder.table[sim.rep[g]] = g;
    sim.net.q0 = sim.group.identity_index;
    sim.net.automaton_name = "canonical-" + std::to_string(sim.group.size());
}

FiniteSemigroup make_cyclic_rotation_group(int n) {
    std::vector<std::vector<int>> cay(n, std::vector<int>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cay[i][j] = (i + j) % n;
    return left_regular_group(cay);
}

// The depth-1 counter layer writing (sum of ws values mod n, offset by q0)
// back into the workspace channel.
NetLayer counter_layer(const GroupNetLayout& layout, int ws, int n, int T, int q0) {
    NetLayer layer;
    AttentionHead head;
    head.wq = [&] {
        SparseMatrix::Builder b(1, layout.d);
        b.add(0, layout.gamma, 1.0);
        return b.build();
    }();
    head.wk = [&] {
        SparseMatrix::Builder b(1, layout.d);
        b.add(0, layout.pad_flag, 1.0);
        return b.build();
    }();
    head.wv = [&] {
        SparseMatrix::Builder b(1, layout.d);
        b.add(0, ws, 1.0);
        return b.build();
    }();
    head.wc = [&] {
        SparseMatrix::Builder b(layout.d, 1);
        b.add(ws, 0, 1.0);
        return b.build();
    }();
    layer.attn.heads.push_back(std::move(head));
    layer.attn.residual = mask_except(layout.d, {ws});

    InterpTable1D table;
    int maxsum = (n - 1) * T;
    for (int m = 0; m <= maxsum; ++m) {
        table.keys.push_back(m / (2.0 * T));
        table.values.push_back({static_cast<double>((m + q0) % n)});
    }
    double delta = 1.0 / (2.0 * T);
    MlpBlock raw = build_interp_mlp_1d(table, delta, (n - 1) / 2.0, n);
    layer.mlp = embed_mlp(raw, layout.d, {ws}, {ws}, mask_except(layout.d, {ws}));
    return layer;
}

WorkspaceCheck counter_check(int layer, int ws, int n, int T) {
    // The flat prefix sum is soft attention with an exactly-normalized
    // denominator, so the scaled sum sits on integers to rounding error.
    WorkspaceCheck c;
    c.layer = layer;
    c.channels = {ws};
    c.scale = 2.0 * T;
    c.tol = 1e-6;
    c.lo = 0.0;
    c.hi = (n - 1.0) * T;
    return c;
}

} // namespace

// ---------------------------------------------------------------------------
// Modular counter: flat prefix sum + mod-table MLP.

GroupSim compile_mod_counter(int n, int T) {
    if (n < 2) throw InputError("mod counter: n must be >= 2");
    if (T < 1) throw InputError("mod counter: T must be >= 1");
    GroupSim sim;
    sim.T = T;
    sim.group = make_cyclic_rotation_group(n);
    sim.rep_dim = 1;
    sim.rep_size = n;
    sim.rep_channels = {0};
    sim.rep.resize(n);
    for (int k = 0; k < n; ++k) sim.rep[k] = {k};
    GroupNetLayout layout = group_net_layout(1);
    sim.net = group_net_shell(layout, T);
    sim.net.layers.push_back(counter_layer(layout, 0, n, T, 0));
    sim.net.checks.push_back(counter_check(0, 0, n, T));
    sim.net.construction = "counter";
    set_group_symbols(sim);
    sim.net.metrics = sim.net.recompute_metrics();
    return sim;
}

CompiledNet compile_mod_counter_net(const Semiautomaton& a, int q0, int T) {
    a.validate();
    int n = a.num_states;
    if (q0 < 0 || q0 >= n) throw InputError("counter: q0 out of range");
    std::vector<int> increments(a.num_symbols());
    for (int s = 0; s < a.num_symbols(); ++s) {
        int z = a.delta[s][0];
        for (int q = 0; q < n; ++q)
            if (a.delta[s][q] != (q + z) % n)
                throw InputError("counter construction needs a modular counter semiautomaton");
        increments[s] = z;
    }
    if (n < 2) throw InputError("counter: need at least 2 states");
    GroupNetLayout layout = group_net_layout(1);
    CompiledNet out;
    out.net = group_net_shell(layout, T);
    out.net.layers.push_back(counter_layer(layout, 0, n, T, q0));
    out.net.checks.push_back(counter_check(0, 0, n, T));
    out.net.symbols = a.alphabet;
    out.net.encoder.assign(a.num_symbols(), std::vector<double>(layout.d, 0.0));
    for (int s = 0; s < a.num_symbols(); ++s) out.net.encoder[s][0] = increments[s];
    out.net.decoder.kind = Decoder::Kind::RoundChannel;
    out.net.decoder.channel = 0;
    out.net.q0 = q0;
    out.net.construction = "counter";
    out.net.automaton_name = a.name;
    out.net.metrics = out.net.recompute_metrics();

    out.report.construction = "counter";
    out.report.automaton = a.name;
    out.report.T = T;
    out.report.metrics = out.net.metrics;
    out.report.add("depth", out.net.metrics.depth, 1);
    out.report.add("embed_dim", out.net.metrics.embed_dim, 3);
    out.report.add("mlp_width", out.net.metrics.mlp_width, 4.0 * n * T);
    out.report.add("max_abs_weight", out.net.metrics.max_abs_weight, 4.0 * n * T + 2);
    return out;
}

// ---------------------------------------------------------------------------
// Memory: nearest-write lookup via a ramped key score.

CompiledNet compile_memory(int num_states, int T, int q0) {
    if (num_states < 1) throw InputError("memory: need at least one state");
    if (q0 < 0 || q0 >= num_states) throw InputError("memory: q0 out of range");
    if (T < 1) throw InputError("memory: T must be >= 1");
    int nq = num_states;
    const int val = 0, flag = 1, ramp = 2, cone = 3;
    const int d = 4;
    TransformerNet net;
    net.capacity = T;
    net.d = d;
    net.positional.assign(T, std::vector<double>(d, 0.0));
    for (int t = 1; t <= T; ++t) net.positional[t - 1][ramp] = static_cast<double>(t) / T;
    // Symbols: memory-automaton order (bottom first, then reset targets).
    net.symbols.push_back(kBottom);
    net.encoder.push_back({static_cast<double>(q0), 1.0, 0.0, 1.0});
    for (int q = 0; q < nq; ++q) {
        net.symbols.push_back(std::to_string(q));
        net.encoder.push_back({static_cast<double>(q), 0.0, 0.0, 1.0});
    }
    double c = T * std::log(16.0 * nq * T);
    NetLayer layer;
    AttentionHead head;
    {
        SparseMatrix::Builder b(2, d);
        b.add(0, cone, -2.0);
        b.add(1, cone, 1.0);
        head.wq = b.build();
    }
    {
        SparseMatrix::Builder b(2, d);
        b.add(0, flag, c);
        b.add(1, ramp, c);
        head.wk = b.build();
    }
    {
        SparseMatrix::Builder b(2, d);
        b.add(0, val, 1.0);
        head.wv = b.build();
    }
    {
        SparseMatrix::Builder b(d, 2);
        b.add(val, 0, 1.0);
        head.wc = b.build();
    }
    layer.attn.heads.push_back(std::move(head));
    layer.attn.residual = mask_except(d, {val});
    // Round the fetched value: interpolate identity on 0..nq-1 with delta 1/2.
    InterpTable1D table;
    for (int q = 0; q < nq; ++q) {
        table.keys.push_back(q);
        table.values.push_back({static_cast<double>(q)});
    }
    MlpBlock raw = build_interp_mlp_1d(table, 0.5, nq, std::max(nq - 1, 1));
    layer.mlp = embed_mlp(raw, d, {val}, {val}, mask_except(d, {val}));
    net.layers.push_back(std::move(layer));
    WorkspaceCheck chk;
    chk.layer = 0;
    chk.channels = {val};
    chk.scale = 1.0;
    chk.tol = 0.2;
    chk.lo = 0;
    chk.hi = nq - 1;
    net.checks.push_back(chk);
    net.decoder.kind = Decoder::Kind::RoundChannel;
    net.decoder.channel = val;
    net.q0 = q0;
    net.construction = "memory";
    net.automaton_name = "memory" + std::to_string(nq);
    net.metrics = net.recompute_metrics();

    CompiledNet out;
    out.net = std::move(net);
    out.report.construction = "memory";
    out.report.automaton = out.net.automaton_name;
    out.report.T = T;
    out.report.metrics = out.net.metrics;
    out.report.add("depth", out.report.metrics.depth, 1);
    out.report.add("embed_dim", out.report.metrics.embed_dim, 4);
    out.report.add("mlp_width", out.report.metrics.mlp_width, 4.0 * nq);
    out.report.add("max_abs_weight", out.report.metrics.max_abs_weight,
                   2.0 * T * std::log(static_cast<double>(nq) * T));
    return out;
}

// ---------------------------------------------------------------------------
// Log-depth prefix composition scan.

CompiledNet compile_log_depth(const Semiautomaton& a_in, int q0, int T) {
    a_in.validate();
    if (q0 < 0 || q0 >= a_in.num_states) throw InputError("log-depth: q0 out of range");
    if (T < 1) throw InputError("log-depth: T must be >= 1");
    Semiautomaton a = a_in;
    if (a.num_states < 2) {
        // Proof note: add a dummy state.
        a.num_states = 2;
        for (auto& row : a.delta) row.push_back(1);
    }
    int nq = a.num_states;
    int L = ceil_log2(T);
    int tstar = 1 << L;  // padded length, a power of two

    int d = 2 * nq + 2;
    const int p1 = 2 * nq, p2 = 2 * nq + 1;
    auto lch = [&](int q) { return q; };
    auto rch = [&](int q) { return nq + q; };

    TransformerNet net;
    net.capacity = tstar;
    net.d = d;
    // Rows are indexed j = 0..2*tstar-1 and correspond to scan positions
    // t = j - (tstar - 1) in -(tstar-1)..tstar; padding rows encode the
    // "go to q0" constant map.
    std::vector<double> padrow(d, 0.0);
    for (int q = 0; q < nq; ++q) padrow[rch(q)] = q0 + 1.0;
    net.padding_prefix.assign(tstar, padrow);
    net.positional.assign(2 * tstar, std::vector<double>(d, 0.0));
    for (int j = 0; j < 2 * tstar; ++j) {
        auto pt = half_circle_point(j - (tstar - 1), tstar);
        net.positional[j][p1] = pt[0];
        net.positional[j][p2] = pt[1];
    }
    net.symbols = a.alphabet;
    net.encoder.assign(a.num_symbols(), std::vector<double>(d, 0.0));
    for (int s = 0; s < a.num_symbols(); ++s)
        for (int q = 0; q < nq; ++q) net.encoder[s][rch(q)] = a.delta[s][q] + 1.0;

    // Temperature; raised automatically if the soft-attention error budget
    // (0.1 in the infinity norm) is not met at this T.
    double gamma = 100.0 * tstar * tstar * (std::log(static_cast<double>(nq)) + std::log(tstar));
    if (tstar > 1) {
        double gap = 1.0 - std::cos(M_PI / tstar);
        while (2.0 * (2.0 * tstar) * nq * std::exp(-gamma * gap) > 0.1) gamma *= 2.0;
    }
    double sq = std::sqrt(gamma);

    MlpBlock comp_raw = build_composition_mlp(nq);
    std::vector<int> comp_io(2 * nq);
    std::iota(comp_io.begin(), comp_io.end(), 0);
    for (int l = 1; l <= L; ++l) {
        double theta = M_PI * (1 << (l - 1)) / tstar;
        NetLayer layer;
        // Self head -> right channels.
        AttentionHead self;
        {
            SparseMatrix::Builder q(nq, d), k(nq, d), v(nq, d), c(d, nq);
            q.add(0, p1, sq);
            q.add(1, p2, sq);
            k.add(0, p1, sq);
            k.add(1, p2, sq);
            for (int s = 0; s < nq; ++s) {
                v.add(s, rch(s), 1.0);
                c.add(rch(s), s, 1.0);
            }
            self.wq = q.build();
            self.wk = k.build();
            self.wv = v.build();
            self.wc = c.build();
        }
        // Look-back head: keys rotated so the query at t matches position
        // t - 2^(l-1); writes into the left channels.
        AttentionHead back;
        {
            SparseMatrix::Builder q(nq, d), k(nq, d), v(nq, d), c(d, nq);
            q.add(0, p1, sq);
            q.add(1, p2, sq);
            k.add(0, p1, sq * std::cos(theta));
            k.add(0, p2, sq * -std::sin(theta));
            k.add(1, p1, sq * std::sin(theta));
            k.add(1, p2, sq * std::cos(theta));
            for (int s = 0; s < nq; ++s) {
                v.add(s, rch(s), 1.0);
                c.add(lch(s), s, 1.0);
            }
            back.wq = q.build();
            back.wk = k.build();
            back.wv = v.build();
            back.wc = c.build();
        }
        layer.attn.heads.push_back(std::move(back));
        layer.attn.heads.push_back(std::move(self));
        layer.attn.residual = mask_of(d, {p1, p2});
        layer.mlp = embed_mlp(comp_raw, d, comp_io, comp_io, mask_of(d, {p1, p2}));
        net.layers.push_back(std::move(layer));
        WorkspaceCheck chk;
        chk.layer = l - 1;
        chk.channels = comp_io;
        chk.scale = 1.0;
        chk.tol = 0.25;
        chk.lo = 0.0;  // left channels are 0 at padding-only windows
        chk.hi = nq;
        net.checks.push_back(chk);
    }
    net.decoder.kind = Decoder::Kind::RoundChannel;
    net.decoder.channel = rch(q0);
    net.decoder.offset = -1;
    net.q0 = q0;
    net.construction = "log-depth";
    net.automaton_name = a_in.name;
    net.metrics = net.recompute_metrics();

    CompiledNet out;
    out.net = std::move(net);
    out.report.construction = "log-depth";
    out.report.automaton = a_in.name;
    out.report.T = T;
    out.report.metrics = out.net.metrics;
    out.report.add("depth", out.report.metrics.depth, L);
    out.report.add("embed_dim", out.report.metrics.embed_dim, 2.0 * nq + 2);
    out.report.add("attention_width", out.report.metrics.attention_width, 2.0 * nq + 2);
    // Function-composition gadget widths: 4|Q|^2+|Q| and |Q|^2.
    out.report.add("mlp_width", out.report.metrics.mlp_width, 4.0 * nq * nq + nq);
    out.report.add("max_abs_weight", out.report.metrics.max_abs_weight,
                   std::max(4.0 * nq + 2.0, sq));
    return out;
}

// ---------------------------------------------------------------------------
// Product combinators.

namespace {

// Channel map placing a component's group-layout net into a larger layout.
std::vector<int> component_map(const GroupNetLayout& local, const GroupNetLayout& global,
                               const std::vector<int>& ws_targets) {
    std::vector<int> map(local.d, -1);
    for (int c = 0; c < local.rep_dim; ++c) map[c] = ws_targets[c];
    map[local.pad_flag] = global.pad_flag;
    map[local.gamma] = global.gamma;
    return map;
}

void append_remapped_checks(GroupSim& dst, const GroupSim& src, const std::vector<int>& map,
                            int layer_offset) {
    for (const auto& chk : src.net.checks) {
        WorkspaceCheck c = chk;
        c.layer += layer_offset;
        for (int& ch : c.channels) ch = map[ch];
        dst.net.checks.push_back(std::move(c));
    }
}

} // namespace

GroupSim combine_direct_product(const std::vector<GroupSim>& sims) {
    if (sims.empty()) throw InputError("direct product: no components");
    if (sims.size() == 1) return sims[0];
    for (const auto& s : sims)
        if (s.T != sims[0].T) throw InputError("direct product: components compiled for different T");

    GroupSim out;
    out.T = sims[0].T;
    out.rep_dim = 0;
    out.rep_size = 1;
    std::vector<int> offsets;
    for (const auto& s : sims) {
        offsets.push_back(out.rep_dim);
        out.rep_dim += s.rep_dim;
        out.rep_size = std::max(out.rep_size, s.rep_size);
    }
    GroupNetLayout layout = group_net_layout(out.rep_dim);
    out.rep_channels.resize(out.rep_dim);
    std::iota(out.rep_channels.begin(), out.rep_channels.end(), 0);
    out.net = group_net_shell(layout, out.T);

    // Group: folded product action; element index is component-major.
    out.group = sims[0].group;
    for (std::size_t i = 1; i < sims.size(); ++i)
        out.group = direct_product_group(out.group, sims[i].group);

    // Reps: concatenation, ordered to match the folded element indexing.
    int total = out.group.size();
    out.rep.assign(total, std::vector<int>(out.rep_dim, 0));
    for (int g = 0; g < total; ++g) {
        int rem = g;
        for (int i = static_cast<int>(sims.size()) - 1; i >= 0; --i) {
            int gi = rem % sims[i].group.size();
            rem /= sims[i].group.size();
            for (int c = 0; c < sims[i].rep_dim; ++c)
                out.rep[g][offsets[i] + c] = sims[i].rep[gi][c];
        }
    }

    int depth = 0;
    for (const auto& s : sims) depth = std::max(depth, static_cast<int>(s.net.layers.size()));
    std::vector<std::vector<int>> maps;
    for (std::size_t i = 0; i < sims.size(); ++i) {
        GroupNetLayout local = group_net_layout(sims[i].rep_dim);
        std::vector<int> ws(sims[i].rep_dim);
        std::iota(ws.begin(), ws.end(), offsets[i]);
        maps.push_back(component_map(local, layout, ws));
    }
    for (int l = 0; l < depth; ++l) {
        NetLayer merged;
        merged.attn.residual.assign(layout.d, 0);
        merged.attn.residual[layout.pad_flag] = 1;
        merged.attn.residual[layout.gamma] = 1;
        std::vector<MlpBlock> remapped;
        std::vector<const MlpBlock*> blocks;
        for (std::size_t i = 0; i < sims.size(); ++i) {
            if (l < static_cast<int>(sims[i].net.layers.size())) {
                NetLayer rl = remap_layer(sims[i].net.layers[l], maps[i], layout.d);
                for (auto& h : rl.attn.heads) merged.attn.heads.push_back(std::move(h));
                for (int c = 0; c < layout.d; ++c)
                    if (rl.attn.residual[c]) merged.attn.residual[c] = 1;
                remapped.push_back(std::move(rl.mlp));
            } else {
                // Identity layer for this component: keep its channels.
                MlpBlock idle;
                idle.residual.assign(layout.d, 0);
                for (int c = 0; c < sims[i].rep_dim; ++c) {
                    merged.attn.residual[offsets[i] + c] = 1;
                    idle.residual[offsets[i] + c] = 1;
                }
                remapped.push_back(std::move(idle));
            }
        }
        for (const auto& b : remapped) blocks.push_back(&b);
        merged.mlp = merge_mlp_parallel(blocks, layout.d);
        out.net.layers.push_back(std::move(merged));
    }
    for (std::size_t i = 0; i < sims.size(); ++i) append_remapped_checks(out, sims[i], maps[i], 0);
    out.net.construction = "direct-product";
    set_group_symbols(out);
    out.net.metrics = out.net.recompute_metrics();
    return out;
}

namespace {

void validate_phi(const FiniteSemigroup& n, const FiniteSemigroup& h,
                  const std::vector<std::vector<int>>& phi) {
    if (static_cast<int>(phi.size()) != h.size())
        throw InputError("semidirect: phi must have one row per H element");
    for (const auto& row : phi) {
        if (static_cast<int>(row.size()) != n.size())
            throw InputError("semidirect: phi row size mismatch");
        Transformation t{row};
        if (!t.is_bijection()) throw InputError("semidirect: phi_h is not a bijection");
    }
    for (int hh = 0; hh < h.size(); ++hh)
        for (int x = 0; x < n.size(); ++x)
            for (int y = 0; y < n.size(); ++y)
                if (phi[hh][n.mul(x, y)] != n.mul(phi[hh][x], phi[hh][y]))
                    throw InputError("semidirect: phi_h is not an automorphism of N");
    for (int h1 = 0; h1 < h.size(); ++h1)
        for (int h2 = 0; h2 < h.size(); ++h2)
            for (int x = 0; x < n.size(); ++x)
                if (phi[h.mul(h1, h2)][x] != phi[h1][phi[h2][x]])
                    throw InputError("semidirect: phi is not a homomorphism into Aut(N)");
    for (int x = 0; x < n.size(); ++x)
        if (phi[h.identity_index][x] != x)
            throw InputError("semidirect: phi at the identity must be trivial");
}

// Identity-attention layer holding only an MLP.
NetLayer mlp_only_layer(int d, MlpBlock mlp) {
    NetLayer l;
    l.attn.residual = mask_all(d);
    l.mlp = std::move(mlp);
    return l;
}

} // namespace

GroupSim combine_semidirect(const GroupSim& sim_n, const GroupSim& sim_h,
                            const std::vector<std::vector<int>>& phi) {
    if (sim_n.T != sim_h.T) throw InputError("semidirect: components compiled for different T");
    validate_phi(sim_n.group, sim_h.group, phi);
    int nn = sim_n.group.size(), nh = sim_h.group.size();
    std::vector<std::vector<int>> phi_inv(nh, std::vector<int>(nn));
    for (int h = 0; h < nh; ++h)
        for (int x = 0; x < nn; ++x) phi_inv[h][phi[h][x]] = x;

    GroupSim out;
    out.T = sim_n.T;
    out.rep_dim = sim_n.rep_dim + sim_h.rep_dim;
    out.rep_size = std::max(sim_n.rep_size, sim_h.rep_size);
    out.rep_channels.resize(out.rep_dim);
    std::iota(out.rep_channels.begin(), out.rep_channels.end(), 0);
    GroupNetLayout layout = group_net_layout(out.rep_dim);
    out.net = group_net_shell(layout, out.T);

    // Pair group (n, h) with product (n,h)(n',h') = (n phi_h(n'), h h');
    // element index = n * |H| + h. When N and H act on a common ground set
    // with all n o h distinct and phi equal to conjugation, the pair group is
    // realized by those transformations (so nets bridge directly to automata
    // on that ground set); otherwise it is realized left-regularly.
    std::vector<std::vector<int>> cay(nn * nh, std::vector<int>(nn * nh));
    for (int x = 0; x < nn; ++x)
        for (int h = 0; h < nh; ++h)
            for (int x2 = 0; x2 < nn; ++x2)
                for (int h2 = 0; h2 < nh; ++h2)
                    cay[x * nh + h][x2 * nh + h2] =
                        sim_n.group.mul(x, phi[h][x2]) * nh + sim_h.group.mul(h, h2);
    bool concrete = sim_n.group.ground_size() == sim_h.group.ground_size();
    if (concrete) {
        std::map<std::vector<int>, int> seen;
        std::vector<Transformation> elems(nn * nh);
        for (int x = 0; x < nn && concrete; ++x) {
            for (int h = 0; h < nh && concrete; ++h) {
                elems[x * nh + h] =
                    compose(sim_n.group.elements[x], sim_h.group.elements[h]);
                if (!seen.emplace(elems[x * nh + h].image, x * nh + h).second) concrete = false;
            }
        }
        // phi must be conjugation by h for (n, h) -> n o h to be a
        // homomorphism on the common ground set.
        for (int i = 0; i < nn * nh && concrete; ++i)
            for (int j = 0; j < nn * nh && concrete; ++j)
                if (seen.at(compose(elems[i], elems[j]).image) != cay[i][j]) concrete = false;
        if (concrete) {
            FiniteSemigroup g;
            g.elements = std::move(elems);
            g.cayley = cay;
            g.generators.resize(nn * nh);
            std::iota(g.generators.begin(), g.generators.end(), 0);
            g.identity_index = -1;
            for (int i = 0; i < g.size(); ++i)
                if (g.elements[i].is_identity()) g.identity_index = i;
            g.contains_identity = g.identity_index >= 0;
            g.all_invertible = true;
            out.group = std::move(g);
        }
    }
    if (!concrete) out.group = left_regular_group(cay);

    out.rep.assign(nn * nh, std::vector<int>(out.rep_dim, 0));
    for (int x = 0; x < nn; ++x) {
        for (int h = 0; h < nh; ++h) {
            for (int c = 0; c < sim_n.rep_dim; ++c) out.rep[x * nh + h][c] = sim_n.rep[x][c];
            for (int c = 0; c < sim_h.rep_dim; ++c)
                out.rep[x * nh + h][sim_n.rep_dim + c] = sim_h.rep[h][c];
        }
    }

    std::vector<int> nws(sim_n.rep_dim), hws(sim_h.rep_dim);
    std::iota(nws.begin(), nws.end(), 0);
    std::iota(hws.begin(), hws.end(), sim_n.rep_dim);
    GroupNetLayout local_n = group_net_layout(sim_n.rep_dim);
    GroupNetLayout local_h = group_net_layout(sim_h.rep_dim);
    auto map_n = component_map(local_n, layout, nws);
    auto map_h = component_map(local_h, layout, hws);

    auto add_component_layers = [&](const GroupSim& sim, const std::vector<int>& map) {
        for (const auto& l : sim.net.layers) {
            NetLayer rl = remap_layer(l, map, layout.d);
            if (rl.mlp.residual.empty()) rl.mlp.residual.assign(layout.d, 0);
            // Preserve the other component's workspace.
            for (int c = 0; c < out.rep_dim; ++c) {
                bool in_this = false;
                for (std::size_t i = 0; i < map.size(); ++i)
                    if (map[i] == c) in_this = true;
                if (!in_this) {
                    rl.attn.residual[c] = 1;
                    rl.mlp.residual[c] = 1;
                }
            }
            out.net.layers.push_back(std::move(rl));
        }
    };

    // Mixing tables: (rep_N(x), rep_H(h)) -> rep_N(phi_h^{-1}(x)) and back.
    auto mix_block = [&](const std::vector<std::vector<int>>& fwd) {
        InterpTableND table;
        for (int x = 0; x < nn; ++x) {
            for (int h = 0; h < nh; ++h) {
                std::vector<double> key;
                for (int c : sim_n.rep[x]) key.push_back(c);
                for (int c : sim_h.rep[h]) key.push_back(c);
                table.keys.push_back(std::move(key));
                std::vector<double> value;
                for (int c : sim_n.rep[fwd[h][x]]) value.push_back(c);
                table.values.push_back(std::move(value));
            }
        }
        double bx = std::max(out.rep_size - 1, 1);
        double by = std::max(sim_n.rep_size - 1, 1);
        MlpBlock raw = build_interp_mlp_nd(table, 1.0, bx, by);
        std::vector<int> in = nws;
        in.insert(in.end(), hws.begin(), hws.end());
        return embed_mlp(raw, layout.d, in, nws, mask_except(layout.d, nws));
    };

    int l0 = 0;
    add_component_layers(sim_h, map_h);
    append_remapped_checks(out, sim_h, map_h, l0);
    int mix_layer = static_cast<int>(out.net.layers.size());
    out.net.layers.push_back(mlp_only_layer(layout.d, mix_block(phi_inv)));
    {
        WorkspaceCheck c;
        c.layer = mix_layer;
        c.channels.insert(c.channels.end(), nws.begin(), nws.end());
        c.channels.insert(c.channels.end(), hws.begin(), hws.end());
        c.tol = 1e-6;
        c.lo = 0;
        c.hi = out.rep_size - 1;
        out.net.checks.push_back(c);
    }
    int n_start = static_cast<int>(out.net.layers.size());
    add_component_layers(sim_n, map_n);
    append_remapped_checks(out, sim_n, map_n, n_start);
    int unmix_layer = static_cast<int>(out.net.layers.size());
    out.net.layers.push_back(mlp_only_layer(layout.d, mix_block(phi)));
    {
        WorkspaceCheck c;
        c.layer = unmix_layer;
        c.channels = out.rep_channels;
        c.tol = 1e-6;
        c.lo = 0;
        c.hi = out.rep_size - 1;
        out.net.checks.push_back(c);
    }

    out.net.construction = "semidirect";
    set_group_symbols(out);
    out.net.metrics = out.net.recompute_metrics();
    return out;
}

namespace {

// Reindexing MLP for wreath mixing: given p blocks of rep_dim channels plus
// one exponent channel holding a in [0, p), writes block x <- block src(x, a).
// src(x, a) = (x + p - a) % p for the forward basis change, (x + a) % p to
// undo it. Built like the composition gadget: indicator bumps on the exponent
// channel gate pass-through values.
MlpBlock reindex_block(int p, int rep_dim, int rep_size, int d, const std::vector<int>& block_ch,
                       int exp_ch, bool forward) {
    int h1 = 4 * p + p * rep_dim;
    int h2 = p * p * rep_dim;
    double m = std::max(rep_size, 2);
    SparseMatrix::Builder w1(h1, d);
    std::vector<double> b1(h1, 0.0);
    for (int j = 0; j < p; ++j) {
        // Bump centered at exponent value j, delta = 1.
        double base = -4.0 * j;
        static const double offs[4] = {2, 1, -1, -2};
        for (int u = 0; u < 4; ++u) {
            w1.add(4 * j + u, exp_ch, 4.0);
            b1[4 * j + u] = base + offs[u];
        }
    }
    int pass0 = 4 * p;
    for (int i = 0; i < p * rep_dim; ++i) w1.add(pass0 + i, block_ch[i], 1.0);

    SparseMatrix::Builder w2(h2, h1);
    std::vector<double> b2(h2, -m);
    static const double signs[4] = {1, -1, -1, 1};
    for (int x = 0; x < p; ++x) {
        for (int j = 0; j < p; ++j) {
            int src = forward ? (x + p - j) % p : (x + j) % p;
            for (int c = 0; c < rep_dim; ++c) {
                int unit = (x * p + j) * rep_dim + c;
                for (int u = 0; u < 4; ++u) w2.add(unit, 4 * j + u, signs[u] * m);
                w2.add(unit, pass0 + src * rep_dim + c, 1.0);
            }
        }
    }
    SparseMatrix::Builder w3(d, h2);
    std::vector<double> b3(d, 0.0);
    for (int x = 0; x < p; ++x)
        for (int j = 0; j < p; ++j)
            for (int c = 0; c < rep_dim; ++c)
                w3.add(block_ch[x * rep_dim + c], (x * p + j) * rep_dim + c, 1.0);

    MlpBlock block;
    block.layers.push_back({w1.build(), std::move(b1)});
    block.layers.push_back({w2.build(), std::move(b2)});
    block.layers.push_back({w3.build(), std::move(b3)});
    block.residual = mask_except(d, block_ch);
    return block;
}

// Wreath-product net skeleton: p parallel copies of sim_n's layers sandwiched
// between an exponent counter and the two reindexing layers. Returns layers
// plus layout info; group/rep/encoder are wired by the caller.
struct WreathParts {
    std::vector<NetLayer> layers;
    std::vector<WorkspaceCheck> checks;
    GroupNetLayout layout;
    int rep_dim;
    int exp_ch;
};

WreathParts wreath_parts(const GroupSim& sim_n, int p, int T) {
    WreathParts parts;
    parts.rep_dim = p * sim_n.rep_dim + 1;
    parts.layout = group_net_layout(parts.rep_dim);
    parts.exp_ch = p * sim_n.rep_dim;
    const GroupNetLayout& layout = parts.layout;

    std::vector<int> block_ch(p * sim_n.rep_dim);
    std::iota(block_ch.begin(), block_ch.end(), 0);

    // Exponent counter (mod p) on the exponent channel.
    parts.layers.push_back(counter_layer(layout, parts.exp_ch, p, T, 0));
    for (int c : block_ch) {
        parts.layers.back().attn.residual[c] = 1;
        parts.layers.back().mlp.residual[c] = 1;
    }
    parts.checks.push_back(counter_check(0, parts.exp_ch, p, T));

    // Forward basis change.
    parts.layers.push_back(mlp_only_layer(
        layout.d, reindex_block(p, sim_n.rep_dim, sim_n.rep_size, layout.d, block_ch,
                                parts.exp_ch, true)));

    // p parallel copies of sim_n.
    GroupNetLayout local = group_net_layout(sim_n.rep_dim);
    std::vector<std::vector<int>> maps;
    for (int x = 0; x < p; ++x) {
        std::vector<int> ws(sim_n.rep_dim);
        std::iota(ws.begin(), ws.end(), x * sim_n.rep_dim);
        maps.push_back(component_map(local, layout, ws));
    }
    int body_start = static_cast<int>(parts.layers.size());
    for (std::size_t l = 0; l < sim_n.net.layers.size(); ++l) {
        NetLayer merged;
        merged.attn.residual = mask_of(layout.d, {layout.pad_flag, layout.gamma, parts.exp_ch});
        std::vector<MlpBlock> remapped;
        for (int x = 0; x < p; ++x) {
            NetLayer rl = remap_layer(sim_n.net.layers[l], maps[x], layout.d);
            for (auto& h : rl.attn.heads) merged.attn.heads.push_back(std::move(h));
            for (int c = 0; c < layout.d; ++c)
                if (rl.attn.residual[c]) merged.attn.residual[c] = 1;
            remapped.push_back(std::move(rl.mlp));
        }
        merged.attn.residual[parts.exp_ch] = 1;
        std::vector<const MlpBlock*> blocks;
        for (const auto& b : remapped) blocks.push_back(&b);
        merged.mlp = merge_mlp_parallel(blocks, layout.d);
        merged.mlp.residual[parts.exp_ch] = 1;
        merged.mlp.residual[layout.pad_flag] = 1;
        merged.mlp.residual[layout.gamma] = 1;
        parts.layers.push_back(std::move(merged));
    }
    for (int x = 0; x < p; ++x) {
        for (const auto& chk : sim_n.net.checks) {
            WorkspaceCheck c = chk;
            c.layer += body_start;
            for (int& ch : c.channels) ch = maps[x][ch];
            parts.checks.push_back(std::move(c));
        }
    }

    // Undo the basis change.
    parts.layers.push_back(mlp_only_layer(
        layout.d, reindex_block(p, sim_n.rep_dim, sim_n.rep_size, layout.d, block_ch,
                                parts.exp_ch, false)));
    return parts;
}

} // namespace

GroupSim combine_wreath(const GroupSim& sim_n, const GroupSim& sim_h) {
    if (sim_h.rep_dim != 1)
        throw UnsupportedError("wreath: quotient simulators with rep_dim != 1 are not supported");
    if (sim_n.T != sim_h.T) throw InputError("wreath: components compiled for different T");
    int p = sim_h.group.size();
    // The exponent channel semantics require the H rep to be the counter's
    // exponent representation: rep[h] = [h] under C_p indexing.
    for (int h = 0; h < p; ++h)
        if (sim_h.rep[h] != std::vector<int>{h})
            throw UnsupportedError("wreath: H simulator must use exponent encoding");

    GroupSim out;
    out.T = sim_n.T;
    out.group = wreath_product_group(sim_n.group, sim_h.group);
    WreathParts parts = wreath_parts(sim_n, p, out.T);
    out.rep_dim = parts.rep_dim;
    out.rep_size = std::max(sim_n.rep_size, p);
    out.rep_channels.resize(out.rep_dim);
    std::iota(out.rep_channels.begin(), out.rep_channels.end(), 0);
    out.net = group_net_shell(parts.layout, out.T);
    out.net.layers = std::move(parts.layers);
    out.net.checks = std::move(parts.checks);

    // Element index convention of wreath_product_group:
    // idx = a * |N|^p + sum_x f(x) * |N|^x.
    int nsz = sim_n.group.size();
    out.rep.assign(out.group.size(), std::vector<int>(out.rep_dim, 0));
    for (int idx = 0; idx < out.group.size(); ++idx) {
        int rem = idx;
        long long npow = 1;
        for (int x = 0; x < p; ++x) npow *= nsz;
        int a = static_cast<int>(rem / npow);
        rem = static_cast<int>(rem % npow);
        for (int x = 0; x < p; ++x) {
            int fx = rem % nsz;
            rem /= nsz;
            for (int c = 0; c < sim_n.rep_dim; ++c)
                out.rep[idx][x * sim_n.rep_dim + c] = sim_n.rep[fx][c];
        }
        out.rep[idx][parts.exp_ch] = a;
    }
    out.net.construction = "wreath";
    set_group_symbols(out);
    out.net.metrics = out.net.recompute_metrics();
    return out;
}

GroupSim restrict_sim(const GroupSim& sim, const std::vector<int>& element_subset) {
    GroupSim out;
    out.T = sim.T;
    out.rep_dim = sim.rep_dim;
    out.rep_size = sim.rep_size;
    out.rep_channels = sim.rep_channels;
    out.group = subsemigroup(sim.group, element_subset);
    for (int e : element_subset) out.rep.push_back(sim.rep[e]);
    out.net = sim.net;
    out.net.construction = sim.net.construction + "-restricted";
    set_group_symbols(out);
    out.net.metrics = out.net.recompute_metrics();
    return out;
}

namespace {

// Counter-backed simulator for a cyclic subgroup of `g` (elements listed as
// sorted parent indices); the rep is the exponent of a fixed generator.
GroupSim cyclic_subgroup_sim(const FiniteSemigroup& g, const std::vector<int>& subset, int T) {
    FiniteSemigroup sub = subsemigroup(g, subset);
    int n = sub.size();
    int gen = -1;
    for (int i = 0; i < n; ++i)
        if (sub.element_order(i) == n) { gen = i; break; }
    if (gen < 0) throw InputError("cyclic_subgroup_sim: subgroup is not cyclic");
    std::vector<int> exponent(n, -1);
    int cur = sub.identity_index;
    for (int k = 0; k < n; ++k) {
        exponent[cur] = k;
        cur = sub.mul(gen, cur);
    }
    GroupSim sim;
    sim.T = T;
    sim.group = std::move(sub);
    sim.rep_dim = 1;
    sim.rep_size = n;
    sim.rep_channels = {0};
    sim.rep.resize(n);
    for (int i = 0; i < n; ++i) sim.rep[i] = {exponent[i]};
    GroupNetLayout layout = group_net_layout(1);
    sim.net = group_net_shell(layout, T);
    if (n >= 2) {
        // The counter sums exponents; rep[i] = exponent makes the encoder and
        // decoder consistent with the group indexing.
        sim.net.layers.push_back(counter_layer(layout, 0, n, T, 0));
        sim.net.checks.push_back(counter_check(0, 0, n, T));
    }
    sim.net.construction = "counter";
    set_group_symbols(sim);
    sim.net.metrics = sim.net.recompute_metrics();
    return sim;
}

} // namespace

SolvableCompilation compile_solvable_group(const FiniteSemigroup& g, int T) {
    if (!g.is_group()) throw InputError("solvable pipeline: input is not a group");
    if (T < 1) throw InputError("solvable pipeline: T must be >= 1");
    CompositionSeries series = composition_series(g);
    for (std::size_t i = 0; i < series.factor_orders.size(); ++i) {
        int f = series.factor_orders[i];
        bool prime = f >= 2;
        for (int d = 2; d * d <= f; ++d)
            if (f % d == 0) prime = false;
        if (!prime)
            throw UnsupportedError(
                "group is not solvable: composition factor of order " + std::to_string(f) +
                " is not cyclic of prime order");
    }

    SolvableCompilation out;
    int n_ground = g.ground_size();
    // Cyclic groups short-circuit to a single counter.
    bool cyclic = false;
    {
        std::vector<int> all(g.size());
        std::iota(all.begin(), all.end(), 0);
        for (int i = 0; i < g.size() && !cyclic; ++i)
            if (g.element_order(i) == g.size()) cyclic = true;
        if (cyclic) {
            out.sim = cyclic_subgroup_sim(g, all, T);
        }
    }
    if (!cyclic) {
        int levels = static_cast<int>(series.chain.size());
        GroupSim cur = cyclic_subgroup_sim(g, series.chain[levels - 2], T);
        for (int i = levels - 3; i >= 0; --i) {
            // cur simulates chain[i+1]; lift it to chain[i] through the
            // universal embedding chain[i] -> chain[i+1] wr C_p.
            const std::vector<int>& big = series.chain[i];
            WreathEmbedding emb = wreath_embedding(g, big, series.chain[i + 1]);
            int p = emb.quotient.p;
            WreathParts parts = wreath_parts(cur, p, T);
            GroupSim next;
            next.T = T;
            next.group = subsemigroup(g, big);
            next.rep_dim = parts.rep_dim;
            next.rep_size = std::max(cur.rep_size, p);
            next.rep_channels.resize(next.rep_dim);
            std::iota(next.rep_channels.begin(), next.rep_channels.end(), 0);
            next.net = group_net_shell(parts.layout, T);
            next.net.layers = std::move(parts.layers);
            next.net.checks = std::move(parts.checks);
            next.rep.assign(big.size(), std::vector<int>(next.rep_dim, 0));
            for (std::size_t e = 0; e < big.size(); ++e) {
                for (int x = 0; x < p; ++x) {
                    int pos = emb.f_parts[e][x];
                    for (int c = 0; c < cur.rep_dim; ++c)
                        next.rep[e][x * cur.rep_dim + c] = cur.rep[pos][c];
                }
                next.rep[e][parts.exp_ch] = emb.m_exp[e];
            }
            next.net.construction = "krohn-rhodes-group";
            set_group_symbols(next);
            next.net.metrics = next.net.recompute_metrics();
            cur = std::move(next);
        }
        out.sim = std::move(cur);
    }

    out.report.construction = "krohn-rhodes-group";
    out.report.automaton = "group-" + std::to_string(g.size());
    out.report.T = T;
    out.report.metrics = out.sim.net.metrics;
    double logG = std::log2(static_cast<double>(g.size()));
    out.report.add("depth", out.report.metrics.depth, std::max(1.0, 3.0 * logG));
    out.report.add("embed_dim", out.report.metrics.embed_dim,
                   std::max(3.0, 2.0 * g.size()));
    out.report.add("heads", out.report.metrics.max_heads, std::max(1.0, 2.0 * g.size()));
    out.report.add("rep_dim", out.sim.rep_dim, 2.0 * g.size());
    out.report.add("rep_size", out.sim.rep_size, std::max(2, n_ground));
    out.report.add("mlp_width", out.report.metrics.mlp_width,
                   std::max(20.0 * n_ground * T * g.size(), 4.0 * g.size() * T));
    out.report.add("max_abs_weight", out.report.metrics.max_abs_weight,
                   std::max(6.0 * n_ground * T, 4.0 * g.size() * T + 2.0));
    return out;
}

// ---------------------------------------------------------------------------
// Permutation-reset semiautomata and cascades.

namespace {

// Layout and layers of a permutation-reset simulation on its own channels.
struct PermResetParts {
    int d = 0;
    std::vector<int> gws, iws;
    int mval = 0, mflag = 0, ramp = 0, cone = 0, pad_flag = 0, gamma = 0;
    std::vector<NetLayer> layers;
    std::vector<WorkspaceCheck> checks;
    std::vector<std::vector<double>> encoder;  // per automaton symbol
    std::vector<double> pad_row;
    GroupSim group_sim;  // the underlying group simulator (possibly trivial)
    FiniteSemigroup group;
    int q0 = 0;
};

GroupSim trivial_group_sim(int T) {
    GroupSim sim;
    sim.T = T;
    sim.group = left_regular_group({{0}});
    sim.rep_dim = 1;
    sim.rep_size = 1;
    sim.rep_channels = {0};
    sim.rep = {{0}};
    GroupNetLayout layout = group_net_layout(1);
    sim.net = group_net_shell(layout, T);
    sim.net.construction = "trivial";
    set_group_symbols(sim);
    sim.net.metrics = sim.net.recompute_metrics();
    return sim;
}

PermResetParts build_perm_reset_parts(const Semiautomaton& a, int q0, int T) {
    a.validate();
    if (!is_permutation_reset(a))
        throw InputError("permutation-reset construction: some symbol is neither a bijection nor a constant");
    if (q0 < 0 || q0 >= a.num_states) throw InputError("permutation-reset: q0 out of range");

    // Group generated by the bijection symbols.
    std::vector<Transformation> gens = {Transformation::identity(a.num_states)};
    for (int s = 0; s < a.num_symbols(); ++s) {
        auto t = transition_map(a, s);
        if (t.is_bijection()) gens.push_back(t);
    }
    FiniteSemigroup g = semigroup_closure(gens);
    if (!is_solvable_group(g))
        throw UnsupportedError("permutation-reset: the permutation group (order " +
                               std::to_string(g.size()) + ") is not solvable");

    PermResetParts parts;
    parts.q0 = q0;
    GroupSim sim = g.size() > 1 ? compile_solvable_group(g, T).sim : trivial_group_sim(T);
    int rd = sim.rep_dim;
    parts.gws.resize(rd);
    std::iota(parts.gws.begin(), parts.gws.end(), 0);
    parts.iws.resize(rd);
    std::iota(parts.iws.begin(), parts.iws.end(), rd);
    parts.mval = 2 * rd;
    parts.mflag = 2 * rd + 1;
    parts.ramp = 2 * rd + 2;
    parts.cone = 2 * rd + 3;
    parts.pad_flag = 2 * rd + 4;
    parts.gamma = 2 * rd + 5;
    parts.d = 2 * rd + 6;

    GroupNetLayout local = group_net_layout(rd);
    std::vector<int> map(local.d);
    for (int c = 0; c < rd; ++c) map[c] = parts.gws[c];
    map[local.pad_flag] = parts.pad_flag;
    map[local.gamma] = parts.gamma;

    int nq = a.num_states;
    for (const auto& l : sim.net.layers) {
        NetLayer rl = remap_layer(l, map, parts.d);
        for (int c : {parts.mval, parts.mflag, parts.ramp, parts.cone}) {
            rl.attn.residual[c] = 1;
            if (rl.mlp.residual.empty()) rl.mlp.residual.assign(parts.d, 0);
            rl.mlp.residual[c] = 1;
        }
        for (int c : parts.iws) {
            rl.attn.residual[c] = 1;
            rl.mlp.residual[c] = 1;
        }
        parts.layers.push_back(std::move(rl));
    }
    for (const auto& chk : sim.net.checks) {
        WorkspaceCheck c = chk;
        for (int& ch : c.channels) ch = map[ch];
        parts.checks.push_back(std::move(c));
    }

    // Memory lookup + copy layer: fetch the most recent reset's value and the
    // group prefix at that position.
    int lg = static_cast<int>(parts.layers.size());
    double c = T * std::log(16.0 * std::max(nq, 2) * T);
    {
        NetLayer layer;
        AttentionHead head;
        int k = 2 + rd;
        SparseMatrix::Builder q(k, parts.d), kk(k, parts.d), v(k, parts.d), wc(parts.d, k);
        q.add(0, parts.cone, -2.0);
        q.add(1, parts.cone, 1.0);
        kk.add(0, parts.mflag, c);
        kk.add(1, parts.ramp, c);
        v.add(0, parts.mval, 1.0);
        wc.add(parts.mval, 0, 1.0);
        for (int i = 0; i < rd; ++i) {
            v.add(2 + i, parts.gws[i], 1.0);
            wc.add(parts.iws[i], 2 + i, 1.0);
        }
        head.wq = q.build();
        head.wk = kk.build();
        head.wv = v.build();
        head.wc = wc.build();
        layer.attn.heads.push_back(std::move(head));
        std::vector<int> written = parts.iws;
        written.push_back(parts.mval);
        layer.attn.residual = mask_except(parts.d, written);
        layer.mlp.residual = mask_all(parts.d);
        parts.layers.push_back(std::move(layer));
    }

    // Final position-wise map (g, h, q) -> (g o h^-1)(q).
    {
        std::vector<int> targets;
        for (int s = 0; s < a.num_symbols(); ++s) {
            auto t = transition_map(a, s);
            if (!t.is_bijection()) targets.push_back(t.image[0]);
        }
        targets.push_back(q0);
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        InterpTableND table;
        for (int gi = 0; gi < g.size(); ++gi) {
            for (int hi = 0; hi < g.size(); ++hi) {
                int ghinv = g.mul(gi, g.inverse(hi));
                for (int q : targets) {
                    std::vector<double> key;
                    for (int cch : sim.rep[gi]) key.push_back(cch);
                    for (int cch : sim.rep[hi]) key.push_back(cch);
                    key.push_back(q);
                    table.keys.push_back(std::move(key));
                    table.values.push_back({static_cast<double>(g.elements[ghinv].image[q])});
                }
            }
        }
        double bx = std::max({sim.rep_size - 1, nq - 1, 1});
        double by = std::max(nq - 1, 1);
        MlpBlock raw = build_interp_mlp_nd(table, 1.0, bx, by);
        std::vector<int> in = parts.gws;
        in.insert(in.end(), parts.iws.begin(), parts.iws.end());
        in.push_back(parts.mval);
        NetLayer layer = mlp_only_layer(
            parts.d, embed_mlp(raw, parts.d, in, {parts.mval}, mask_except(parts.d, {parts.mval})));
        parts.layers.push_back(std::move(layer));
        WorkspaceCheck chk;
        chk.layer = lg + 1;
        chk.channels = in;
        chk.tol = 0.25;
        chk.lo = 0;
        chk.hi = std::max(sim.rep_size - 1, nq - 1);
        parts.checks.push_back(chk);
    }

    // Encoder and the padding row.
    parts.encoder.assign(a.num_symbols(), std::vector<double>(parts.d, 0.0));
    for (int s = 0; s < a.num_symbols(); ++s) {
        auto t = transition_map(a, s);
        auto& row = parts.encoder[s];
        row[parts.cone] = 1.0;
        if (t.is_bijection()) {
            int e = g.find(t);
            for (int cch = 0; cch < rd; ++cch) row[parts.gws[cch]] = sim.rep[e][cch];
            row[parts.mval] = q0;
            row[parts.mflag] = 1.0;
        } else {
            row[parts.mval] = t.image[0];
            row[parts.mflag] = 0.0;
        }
    }
    parts.pad_row.assign(parts.d, 0.0);
    parts.pad_row[parts.pad_flag] = 1.0;
    parts.pad_row[parts.cone] = 1.0;
    parts.pad_row[parts.mval] = q0;
    parts.group_sim = std::move(sim);
    parts.group = std::move(g);
    return parts;
}

// Positional rows shared by the permutation-reset and cascade assemblies.
void fill_perm_reset_positions(TransformerNet& net, const PermResetParts& parts, int T) {
    net.positional.assign(T + 1, std::vector<double>(parts.d, 0.0));
    for (int t = 1; t <= T; ++t) {
        net.positional[t][parts.gamma] = gamma_pos(t, T);
        net.positional[t][parts.ramp] = static_cast<double>(t) / T;
    }
}

} // namespace

CompiledNet compile_permutation_reset(const Semiautomaton& a, int q0, int T) {
    PermResetParts parts = build_perm_reset_parts(a, q0, T);
    TransformerNet net;
    net.capacity = T;
    net.d = parts.d;
    net.padding_prefix.push_back(parts.pad_row);
    fill_perm_reset_positions(net, parts, T);
    net.symbols = a.alphabet;
    net.encoder = parts.encoder;
    net.layers = parts.layers;
    net.checks = parts.checks;
    net.decoder.kind = Decoder::Kind::RoundChannel;
    net.decoder.channel = parts.mval;
    net.q0 = q0;
    net.construction = "permutation-reset";
    net.automaton_name = a.name;
    net.metrics = net.recompute_metrics();

    CompiledNet out;
    out.net = std::move(net);
    out.report.construction = "permutation-reset";
    out.report.automaton = a.name;
    out.report.T = T;
    out.report.metrics = out.net.metrics;
    int gsz = parts.group.size();
    double lg = gsz > 1 ? std::log2(static_cast<double>(gsz)) : 0.0;
    out.report.add("depth", out.report.metrics.depth, 3.0 * lg + 2.0 + (gsz == 1 ? 1 : 0));
    out.report.add("embed_dim", out.report.metrics.embed_dim,
                   parts.group_sim.net.d + parts.group_sim.rep_dim + 6);
    out.report.add("max_abs_weight", out.report.metrics.max_abs_weight,
                   std::max({6.0 * a.num_states * T * std::log(static_cast<double>(T) + 1),
                             2.0 * T * std::log(16.0 * std::max(a.num_states, 2) * T),
                             4.0 * gsz * T + 2.0}));
    return out;
}

CompiledNet compile_cascade(const CascadeSpec& spec, const std::vector<int>& q0_tuple, int T) {
    spec.validate();
    int n = spec.levels();
    if (static_cast<int>(q0_tuple.size()) != n)
        throw InputError("cascade: q0 tuple arity mismatch");
    const Semiautomaton& raw_aut = spec.components[0];
    int nsym = raw_aut.num_symbols();

    std::vector<PermResetParts> comp;
    for (int i = 0; i < n; ++i) {
        try {
            comp.push_back(build_perm_reset_parts(spec.components[i], q0_tuple[i], T));
        } catch (const std::exception& e) {
            throw InputError("cascade component " + std::to_string(i + 1) + ": " + e.what());
        }
    }

    // Global layout: per-component blocks, then shared channels.
    std::vector<int> block_off(n);
    int pos = 0;
    // Per component the block holds gws, iws, mval, mflag (ramp/cone/pad/gamma
    // are shared).
    std::vector<std::vector<int>> cmap(n);
    for (int i = 0; i < n; ++i) {
        block_off[i] = pos;
        pos += 2 * static_cast<int>(comp[i].gws.size()) + 2;
    }
    int shared_ramp = pos, shared_cone = pos + 1, shared_pad = pos + 2, shared_gamma = pos + 3;
    int raw_ch = pos + 4;
    int cos_ch = pos + 5, sin_ch = pos + 6;
    int out_ch = pos + 7;
    std::vector<int> scratch(n);  // shifted state of component i (used by wiring)
    for (int i = 0; i < n; ++i) scratch[i] = pos + 8 + i;
    int d = pos + 8 + n;

    for (int i = 0; i < n; ++i) {
        int rd = static_cast<int>(comp[i].gws.size());
        cmap[i].assign(comp[i].d, -1);
        for (int c = 0; c < rd; ++c) cmap[i][comp[i].gws[c]] = block_off[i] + c;
        for (int c = 0; c < rd; ++c) cmap[i][comp[i].iws[c]] = block_off[i] + rd + c;
        cmap[i][comp[i].mval] = block_off[i] + 2 * rd;
        cmap[i][comp[i].mflag] = block_off[i] + 2 * rd + 1;
        cmap[i][comp[i].ramp] = shared_ramp;
        cmap[i][comp[i].cone] = shared_cone;
        cmap[i][comp[i].pad_flag] = shared_pad;
        cmap[i][comp[i].gamma] = shared_gamma;
    }
    auto mval_ch = [&](int i) { return block_off[i] + 2 * static_cast<int>(comp[i].gws.size()); };

    TransformerNet net;
    net.capacity = T;
    net.d = d;
    // Padding row: union of component pad rows plus shared values.
    std::vector<double> pad(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < comp[i].d; ++c)
            if (comp[i].pad_row[c] != 0.0) pad[cmap[i][c]] = comp[i].pad_row[c];
    pad[shared_cone] = 1.0;
    pad[shared_pad] = 1.0;
    {
        auto pt = half_circle_point(0, T + 1);
        pad[cos_ch] = pt[0];
        pad[sin_ch] = pt[1];
    }
    net.padding_prefix.push_back(pad);
    net.positional.assign(T + 1, std::vector<double>(d, 0.0));
    for (int t = 1; t <= T; ++t) {
        net.positional[t][shared_gamma] = gamma_pos(t, T);
        net.positional[t][shared_ramp] = static_cast<double>(t) / T;
        auto pt = half_circle_point(t, T + 1);
        net.positional[t][cos_ch] = pt[0];
        net.positional[t][sin_ch] = pt[1];
    }
    // Encoder: component 1's encoding plus the raw symbol index channel.
    net.symbols = raw_aut.alphabet;
    net.encoder.assign(nsym, std::vector<double>(d, 0.0));
    for (int s = 0; s < nsym; ++s) {
        for (int c = 0; c < comp[0].d; ++c)
            if (comp[0].encoder[s][c] != 0.0) net.encoder[s][cmap[0][c]] = comp[0].encoder[s][c];
        net.encoder[s][raw_ch] = s;
        net.encoder[s][shared_cone] = 1.0;
    }

    auto append_component = [&](int i) {
        int base = static_cast<int>(net.layers.size());
        for (const auto& l : comp[i].layers) {
            NetLayer rl = remap_layer(l, cmap[i], d);
            // Everything outside this component's writes is preserved.
            for (int c = 0; c < d; ++c) {
                bool mapped = false;
                for (int lc = 0; lc < comp[i].d; ++lc)
                    if (cmap[i][lc] == c) mapped = true;
                if (!mapped) {
                    rl.attn.residual[c] = 1;
                    if (rl.mlp.residual.empty()) rl.mlp.residual.assign(d, 0);
                    rl.mlp.residual[c] = 1;
                }
            }
            net.layers.push_back(std::move(rl));
        }
        for (const auto& chk : comp[i].checks) {
            WorkspaceCheck c = chk;
            c.layer += base;
            for (int& ch : c.channels) ch = cmap[i][ch];
            net.checks.push_back(std::move(c));
        }
    };

    double beta = 768.0 / (1.0 - std::cos(M_PI / (T + 1)));
    double sb = std::sqrt(beta);
    append_component(0);
    for (int i = 1; i < n; ++i) {
        // Wiring layer: shift upstream states to t-1, then map them (plus the
        // raw symbol) through phi_i into component i's encoding.
        NetLayer layer;
        AttentionHead head;
        int k = 2 + i;
        SparseMatrix::Builder q(k, d), kk(k, d), v(k, d), wc(d, k);
        double theta = -M_PI / (T + 1);
        q.add(0, cos_ch, sb * std::cos(theta));
        q.add(0, sin_ch, sb * -std::sin(theta));
        q.add(1, cos_ch, sb * std::sin(theta));
        q.add(1, sin_ch, sb * std::cos(theta));
        kk.add(0, cos_ch, sb);
        kk.add(1, sin_ch, sb);
        for (int j = 0; j < i; ++j) {
            v.add(2 + j, mval_ch(j), 1.0);
            wc.add(scratch[j], 2 + j, 1.0);
        }
        head.wq = q.build();
        head.wk = kk.build();
        head.wv = v.build();
        head.wc = wc.build();
        layer.attn.heads.push_back(std::move(head));
        std::vector<int> written(scratch.begin(), scratch.begin() + i);
        layer.attn.residual = mask_except(d, written);

        // Dependency table: (pad?, q_1..q_{i-1}, sigma) -> component-i encoding.
        InterpTableND table;
        std::vector<int> out_cols;
        int rd = static_cast<int>(comp[i].gws.size());
        for (int c = 0; c < rd; ++c) out_cols.push_back(block_off[i] + c);
        out_cols.push_back(mval_ch(i));
        out_cols.push_back(block_off[i] + 2 * rd + 1);
        auto encode_value = [&](const std::vector<double>& enc_row) {
            std::vector<double> v2;
            for (int c = 0; c < rd; ++c) v2.push_back(enc_row[comp[i].gws[c]]);
            v2.push_back(enc_row[comp[i].mval]);
            v2.push_back(enc_row[comp[i].mflag]);
            return v2;
        };
        std::vector<int> states(i, 0);
        while (true) {
            for (int s = 0; s < nsym; ++s) {
                std::vector<double> key;
                key.push_back(0.0);
                for (int j = 0; j < i; ++j) key.push_back(states[j]);
                key.push_back(s);
                auto dep_key = cascade_key(std::span<const int>(states.data(), i),
                                           raw_aut.alphabet[s]);
                int sym = spec.components[i].symbol_index(spec.deps[i - 1].at(dep_key));
                table.keys.push_back(std::move(key));
                table.values.push_back(encode_value(comp[i].encoder[sym]));
            }
            int kidx = i - 1;
            while (kidx >= 0 && ++states[kidx] == spec.components[kidx].num_states)
                states[kidx--] = 0;
            if (kidx < 0) break;
        }
        {
            // Padding key reproduces component i's padding-row values.
            std::vector<double> key;
            key.push_back(1.0);
            for (int j = 0; j < i; ++j) key.push_back(q0_tuple[j]);
            key.push_back(0.0);
            table.keys.push_back(std::move(key));
            std::vector<double> v2;
            for (int c = 0; c < rd; ++c) v2.push_back(comp[i].pad_row[comp[i].gws[c]]);
            v2.push_back(comp[i].pad_row[comp[i].mval]);
            v2.push_back(comp[i].pad_row[comp[i].mflag]);
            table.values.push_back(std::move(v2));
        }
        double bx = std::max<double>(nsym - 1, 1);
        for (int j = 0; j < i; ++j) bx = std::max(bx, spec.components[j].num_states - 1.0);
        double by = 1.0;
        for (const auto& vrow : table.values)
            for (double x : vrow) by = std::max(by, std::fabs(x));
        std::vector<int> in_cols;
        in_cols.push_back(shared_pad);
        for (int j = 0; j < i; ++j) in_cols.push_back(scratch[j]);
        in_cols.push_back(raw_ch);
        MlpBlock raw_mlp = build_interp_mlp_nd(table, 1.0, bx, by);
        layer.mlp = embed_mlp(raw_mlp, d, in_cols, out_cols, mask_except(d, out_cols));
        net.layers.push_back(std::move(layer));
        append_component(i);
    }

    // Readout layer.
    {
        InterpTableND table;
        std::vector<int> states(n, 0);
        while (true) {
            std::vector<double> key;
            for (int j = 0; j < n; ++j) key.push_back(states[j]);
            table.keys.push_back(key);
            table.values.push_back(
                {static_cast<double>(spec.readout.at(cascade_key(states)))});
            int kidx = n - 1;
            while (kidx >= 0 && ++states[kidx] == spec.components[kidx].num_states)
                states[kidx--] = 0;
            if (kidx < 0) break;
        }
        double bx = 1.0, by = 1.0;
        for (const auto& kk2 : table.keys)
            for (double x : kk2) bx = std::max(bx, std::fabs(x));
        for (const auto& vv : table.values)
            for (double x : vv) by = std::max(by, std::fabs(x));
        std::vector<int> in_cols;
        for (int j = 0; j < n; ++j) in_cols.push_back(mval_ch(j));
        MlpBlock raw_mlp = build_interp_mlp_nd(table, 1.0, bx, by);
        net.layers.push_back(mlp_only_layer(
            d, embed_mlp(raw_mlp, d, in_cols, {out_ch}, mask_except(d, {out_ch}))));
    }

    net.decoder.kind = Decoder::Kind::RoundChannel;
    net.decoder.channel = out_ch;
    net.q0 = spec.readout.at(cascade_key(q0_tuple));
    net.construction = "cascade";
    net.automaton_name = spec.name;
    net.metrics = net.recompute_metrics();

    CompiledNet out;
    out.net = std::move(net);
    out.report.construction = "cascade";
    out.report.automaton = spec.name;
    out.report.T = T;
    out.report.metrics = out.net.metrics;
    int comp_depth = 0;
    for (const auto& c : comp) comp_depth += static_cast<int>(c.layers.size());
    out.report.add("depth", out.report.metrics.depth, comp_depth + (n - 1) + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Bridges.

TransformerNet net_for_automaton(const GroupSim& sim, const Semiautomaton& a, int q0) {
    a.validate();
    if (q0 < 0 || q0 >= a.num_states) throw InputError("bridge: q0 out of range");
    TransformerNet net = sim.net;
    net.symbols = a.alphabet;
    net.encoder.clear();
    for (int s = 0; s < a.num_symbols(); ++s) {
        auto t = transition_map(a, s);
        int e = sim.group.find(t);
        if (e < 0)
            throw InputError("bridge: transition map of symbol " + a.alphabet[s] +
                             " is not in the simulated group");
        std::vector<double> row(net.d, 0.0);
        for (int c = 0; c < sim.rep_dim; ++c) row[sim.rep_channels[c]] = sim.rep[e][c];
        net.encoder.push_back(std::move(row));
    }
    net.decoder.kind = Decoder::Kind::RepLookup;
    net.decoder.channels = sim.rep_channels;
    net.decoder.table.clear();
    for (int e = 0; e < sim.group.size(); ++e)
        net.decoder.table[sim.rep[e]] = sim.group.elements[e].image[q0];
    net.q0 = q0;
    net.automaton_name = a.name;
    net.metrics = net.recompute_metrics();
    return net;
}

CompiledNet compile_krohn_rhodes(const Semiautomaton& a, int q0, int T) {
    a.validate();
    FiniteSemigroup t = transformation_semigroup(a);
    if (t.is_group()) {
        if (!is_solvable_group(t))
            throw UnsupportedError(
                "krohn-rhodes: the transformation group (order " + std::to_string(t.size()) +
                ") is not solvable; only the log-depth construction applies");
        SolvableCompilation sc = compile_solvable_group(t, T);
        CompiledNet out;
        out.net = net_for_automaton(sc.sim, a, q0);
        out.net.construction = "krohn-rhodes";
        out.report = sc.report;
        out.report.construction = "krohn-rhodes";
        out.report.automaton = a.name;
        return out;
    }
    if (is_permutation_reset(a)) {
        CompiledNet out = compile_permutation_reset(a, q0, T);
        out.net.construction = "krohn-rhodes";
        out.report.construction = "krohn-rhodes";
        return out;
    }
    throw UnsupportedError(
        "krohn-rhodes: automatic compilation covers groups and permutation-reset semiautomata; "
        "supply an explicit cascade for general semigroups");
}

} // namespace shortcut
