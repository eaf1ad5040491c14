#include "shortcut/gadgets.hpp"

#include <algorithm>
#include <cmath>

namespace shortcut {

namespace {

struct BumpSpec {
    // Four ReLU units forming an exact indicator of x within +-delta/4 of x0:
    // +u(base+2) -u(base+1) -u(base-1) +u(base-2) with u(b) = relu(x/dp + b),
    // dp = delta/4. Offsets are added to a shared base so unit pairs cancel.
    double slope;
    double base;
};

BumpSpec bump_for(double x0, double delta) {
    double dp = delta / 4.0;
    return {1.0 / dp, -(x0 / dp)};
}

constexpr double kBumpOffsets[4] = {2.0, 1.0, -1.0, -2.0};
constexpr double kBumpSigns[4] = {1.0, -1.0, -1.0, 1.0};

// Slightly tolerant comparisons: keys like m/(2T) carry one rounding each.
constexpr double kRelTol = 1e-9;

void check_separation(const std::vector<double>& keys, double delta) {
    for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j)
            if (std::fabs(keys[i] - keys[j]) < delta * (1.0 - kRelTol))
                throw InputError("interp table: keys closer than delta");
}

} // namespace

MlpBlock build_interp_mlp_1d(const InterpTable1D& table, double delta, double bx, double by) {
    if (table.keys.empty() || table.keys.size() != table.values.size())
        throw InputError("interp1d: empty or mismatched table");
    if (delta <= 0) throw InputError("interp1d: delta must be positive");
    check_separation(table.keys, delta);
    int nkeys = static_cast<int>(table.keys.size());
    int dout = static_cast<int>(table.values[0].size());
    for (const auto& k : table.keys)
        if (std::fabs(k) > bx * (1.0 + kRelTol)) throw InputError("interp1d: key exceeds bx");
    for (const auto& v : table.values)
        for (double y : v)
            if (std::fabs(y) > by * (1.0 + kRelTol)) throw InputError("interp1d: value exceeds by");

    MlpBlock block;
    SparseMatrix::Builder w1(4 * nkeys, 1);
    std::vector<double> b1(4 * nkeys);
    SparseMatrix::Builder w2(dout, 4 * nkeys);
    std::vector<double> b2(dout, 0.0);
    for (int k = 0; k < nkeys; ++k) {
        BumpSpec bump = bump_for(table.keys[k], delta);
        for (int u = 0; u < 4; ++u) {
            int unit = 4 * k + u;
            w1.add(unit, 0, bump.slope);
            b1[unit] = bump.base + kBumpOffsets[u];
            for (int o = 0; o < dout; ++o) {
                double v = table.values[k][o];
                if (v != 0.0) w2.add(o, unit, v * kBumpSigns[u]);
            }
        }
    }
    block.layers.push_back({w1.build(), std::move(b1)});
    block.layers.push_back({w2.build(), std::move(b2)});
    // Declared weight bounds, asserted on build.
    if (block.layers[0].w.max_abs() > 4.0 / delta + 1e-9)
        throw std::logic_error("interp1d: W1 bound violated");
    for (double b : block.layers[0].b)
        if (std::fabs(b) > 4.0 * bx / delta + 2.0 + 1e-9)
            throw std::logic_error("interp1d: b1 bound violated");
    if (block.layers[1].w.max_abs() > by + 1e-9)
        throw std::logic_error("interp1d: W2 bound violated");
    return block;
}

MlpBlock build_interp_mlp_nd(const InterpTableND& table, double delta, double bx, double by) {
    if (table.keys.empty() || table.keys.size() != table.values.size())
        throw InputError("interpnd: empty or mismatched table");
    if (delta <= 0) throw InputError("interpnd: delta must be positive");
    int din = static_cast<int>(table.keys[0].size());
    int dout = static_cast<int>(table.values[0].size());
    int nkeys = static_cast<int>(table.keys.size());
    for (std::size_t i = 0; i < table.keys.size(); ++i) {
        if (static_cast<int>(table.keys[i].size()) != din)
            throw InputError("interpnd: ragged keys");
        for (double x : table.keys[i])
            if (std::fabs(x) > bx * (1.0 + kRelTol)) throw InputError("interpnd: key exceeds bx");
        for (std::size_t j = i + 1; j < table.keys.size(); ++j) {
            double dist = 0.0;
            for (int c = 0; c < din; ++c)
                dist = std::max(dist, std::fabs(table.keys[i][c] - table.keys[j][c]));
            if (dist < delta * (1.0 - kRelTol)) throw InputError("interpnd: keys closer than delta");
        }
    }
    for (const auto& v : table.values)
        for (double y : v)
            if (std::fabs(y) > by * (1.0 + kRelTol)) throw InputError("interpnd: value exceeds by");

    // Distinct values per coordinate.
    std::vector<std::vector<double>> coord_vals(din);
    for (const auto& key : table.keys)
        for (int c = 0; c < din; ++c)
            if (std::find(coord_vals[c].begin(), coord_vals[c].end(), key[c]) ==
                coord_vals[c].end())
                coord_vals[c].push_back(key[c]);

    int h1 = 0;
    std::vector<int> coord_base(din);
    for (int c = 0; c < din; ++c) {
        coord_base[c] = h1;
        h1 += 4 * static_cast<int>(coord_vals[c].size());
    }

    MlpBlock block;
    SparseMatrix::Builder w1(h1, din);
    std::vector<double> b1(h1);
    for (int c = 0; c < din; ++c) {
        for (std::size_t k = 0; k < coord_vals[c].size(); ++k) {
            BumpSpec bump = bump_for(coord_vals[c][k], delta);
            for (int u = 0; u < 4; ++u) {
                int unit = coord_base[c] + 4 * static_cast<int>(k) + u;
                w1.add(unit, c, bump.slope);
                b1[unit] = bump.base + kBumpOffsets[u];
            }
        }
    }
    // Second layer: one AND unit per key, relu(sum of its coordinate
    // indicators - (din - 1)).
    SparseMatrix::Builder w2(nkeys, h1);
    std::vector<double> b2(nkeys, -(din - 1.0));
    for (int k = 0; k < nkeys; ++k) {
        for (int c = 0; c < din; ++c) {
            auto it = std::find(coord_vals[c].begin(), coord_vals[c].end(), table.keys[k][c]);
            int vi = static_cast<int>(it - coord_vals[c].begin());
            for (int u = 0; u < 4; ++u)
                w2.add(k, coord_base[c] + 4 * vi + u, kBumpSigns[u]);
        }
    }
    SparseMatrix::Builder w3(dout, nkeys);
    std::vector<double> b3(dout, 0.0);
    for (int k = 0; k < nkeys; ++k)
        for (int o = 0; o < dout; ++o)
            if (table.values[k][o] != 0.0) w3.add(o, k, table.values[k][o]);

    block.layers.push_back({w1.build(), std::move(b1)});
    block.layers.push_back({w2.build(), std::move(b2)});
    block.layers.push_back({w3.build(), std::move(b3)});
    if (block.layers[0].w.max_abs() > 4.0 / delta + 1e-9)
        throw std::logic_error("interpnd: W1 bound violated");
    for (double b : block.layers[0].b)
        if (std::fabs(b) > 4.0 * bx / delta + 2.0 + 1e-9)
            throw std::logic_error("interpnd: b1 bound violated");
    if (block.layers[1].w.max_abs() > 1.0 + 1e-12)
        throw std::logic_error("interpnd: W2 bound violated");
    for (double b : block.layers[1].b)
        if (std::fabs(b) > din + 1e-12) throw std::logic_error("interpnd: b2 bound violated");
    if (block.layers[2].w.max_abs() > by + 1e-9)
        throw std::logic_error("interpnd: W3 bound violated");
    return block;
}

MlpBlock build_threshold_mlp(double delta) {
    if (delta <= 0) throw InputError("threshold: delta must be positive");
    MlpBlock block;
    // Clamped ramp over [-delta/2, delta/2]: saturated for |x| >= delta/2,
    // which covers |x| >= delta with the +-delta/4 input tolerance. On dyadic
    // scales the shared slope keeps the saturated values exactly 0 and 1.
    double slope = 1.0 / delta;
    SparseMatrix::Builder w1(2, 1);
    w1.add(0, 0, slope);
    w1.add(1, 0, slope);
    SparseMatrix::Builder w2(1, 2);
    w2.add(0, 0, 1.0);
    w2.add(0, 1, -1.0);
    block.layers.push_back({w1.build(), {0.5, -0.5}});
    block.layers.push_back({w2.build(), {0.0}});
    return block;
}

MlpBlock build_composition_mlp(int num_states) {
    if (num_states < 2) throw InputError("composition mlp: need at least 2 states");
    int n = num_states;
    // Input dims: 0..n-1 hold g's image (1-based values), n..2n-1 hold f's.
    int h1 = 4 * n * n + n;
    int h2 = n * n;
    MlpBlock block;
    SparseMatrix::Builder w1(h1, 2 * n);
    std::vector<double> b1(h1, 0.0);
    // Indicator bumps 1[g(q) == q'+1] and pass-through of f's values.
    for (int q = 0; q < n; ++q) {
        for (int qp = 0; qp < n; ++qp) {
            BumpSpec bump = bump_for(qp + 1.0, 1.0);
            for (int u = 0; u < 4; ++u) {
                int unit = 4 * (q * n + qp) + u;
                w1.add(unit, q, bump.slope);
                b1[unit] = bump.base + kBumpOffsets[u];
            }
        }
    }
    int pass0 = 4 * n * n;
    for (int qp = 0; qp < n; ++qp) w1.add(pass0 + qp, n + qp, 1.0);

    // Product units: relu(M * 1[g(q) == q'+1] + f(q'+1) - M) = f value when
    // the indicator fires, 0 otherwise. The gate M = n + 1 exceeds the top
    // f value n, so positive input noise cannot leak through unfired gates.
    double gate = n + 1.0;
    SparseMatrix::Builder w2(h2, h1);
    std::vector<double> b2(h2, -gate);
    for (int q = 0; q < n; ++q) {
        for (int qp = 0; qp < n; ++qp) {
            int unit = q * n + qp;
            for (int u = 0; u < 4; ++u)
                w2.add(unit, 4 * (q * n + qp) + u, kBumpSigns[u] * gate);
            w2.add(unit, pass0 + qp, 1.0);
        }
    }
    SparseMatrix::Builder w3(2 * n, h2);
    std::vector<double> b3(2 * n, 0.0);
    for (int q = 0; q < n; ++q)
        for (int qp = 0; qp < n; ++qp) w3.add(n + q, q * n + qp, 1.0);

    block.layers.push_back({w1.build(), std::move(b1)});
    block.layers.push_back({w2.build(), std::move(b2)});
    block.layers.push_back({w3.build(), std::move(b3)});
    if (block.max_abs_weight() > 4.0 * n + 2.0 + 1e-9)
        throw std::logic_error("composition mlp: weight bound violated");
    return block;
}

// ---------------------------------------------------------------------------

SparseMatrix remap_cols(const SparseMatrix& m, const std::vector<int>& col_map, int new_cols) {
    SparseMatrix::Builder b(m.rows, new_cols);
    for (int r = 0; r < m.rows; ++r)
        for (int e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) b.add(r, col_map[m.col[e]], m.val[e]);
    return b.build();
}

SparseMatrix remap_rows(const SparseMatrix& m, const std::vector<int>& row_map, int new_rows) {
    SparseMatrix::Builder b(new_rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) b.add(row_map[r], m.col[e], m.val[e]);
    return b.build();
}

AttentionHead remap_head(const AttentionHead& h, const std::vector<int>& map, int d_new) {
    AttentionHead out;
    out.wq = remap_cols(h.wq, map, d_new);
    out.wk = remap_cols(h.wk, map, d_new);
    out.wv = remap_cols(h.wv, map, d_new);
    out.wc = remap_rows(h.wc, map, d_new);
    return out;
}

namespace {
std::vector<std::uint8_t> remap_mask(const std::vector<std::uint8_t>& mask,
                                     const std::vector<int>& map, int d_new) {
    std::vector<std::uint8_t> out(d_new, 0);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out[map[i]] = 1;
    return out;
}
} // namespace

AttentionBlock remap_attention(const AttentionBlock& b, const std::vector<int>& map, int d_new) {
    AttentionBlock out;
    for (const auto& h : b.heads) out.heads.push_back(remap_head(h, map, d_new));
    out.residual = remap_mask(b.residual, map, d_new);
    return out;
}

MlpBlock remap_mlp(const MlpBlock& b, const std::vector<int>& map, int d_new) {
    MlpBlock out = b;
    out.residual = remap_mask(b.residual, map, d_new);
    if (out.layers.empty()) return out;
    out.layers.front().w = remap_cols(out.layers.front().w, map, d_new);
    if (out.layers.size() == 1) {
        // Single linear layer: remap rows too.
        out.layers.back().w = remap_rows(out.layers.back().w, map, d_new);
        std::vector<double> nb(d_new, 0.0);
        for (std::size_t r = 0; r < b.layers.back().b.size(); ++r)
            nb[map[r]] = b.layers.back().b[r];
        out.layers.back().b = std::move(nb);
        return out;
    }
    out.layers.back().w = remap_rows(out.layers.back().w, map, d_new);
    std::vector<double> nb(d_new, 0.0);
    for (std::size_t r = 0; r < b.layers.back().b.size(); ++r) nb[map[r]] = b.layers.back().b[r];
    out.layers.back().b = std::move(nb);
    return out;
}

NetLayer remap_layer(const NetLayer& l, const std::vector<int>& map, int d_new) {
    NetLayer out;
    out.attn = remap_attention(l.attn, map, d_new);
    out.mlp = remap_mlp(l.mlp, map, d_new);
    return out;
}

NetLayer identity_layer(int d) {
    NetLayer l;
    l.attn.residual = mask_all(d);
    l.mlp.residual = mask_all(d);
    return l;
}

std::vector<int> mlp_written_channels(const MlpBlock& b) {
    std::vector<int> out;
    if (b.layers.empty()) return out;
    const auto& last = b.layers.back();
    for (int r = 0; r < last.w.rows; ++r)
        if (last.w.row_ptr[r + 1] > last.w.row_ptr[r] || last.b[r] != 0.0) out.push_back(r);
    return out;
}

MlpBlock merge_mlp_parallel(const std::vector<const MlpBlock*>& blocks, int d) {
    std::vector<const MlpBlock*> live;
    for (const auto* b : blocks)
        if (b && !b->layers.empty()) live.push_back(b);
    MlpBlock out;
    out.residual.assign(d, 0);
    for (const auto* b : blocks) {
        if (!b) continue;
        for (std::size_t i = 0; i < b->residual.size(); ++i)
            if (b->residual[i]) out.residual[i] = 1;
    }
    // A channel written by any component must not also receive a residual
    // copy of the block input.
    for (const auto* b : live)
        for (int r : mlp_written_channels(*b)) out.residual[r] = 0;
    if (live.empty()) return out;
    std::size_t depth = live[0]->layers.size();
    for (const auto* b : live)
        if (b->layers.size() != depth)
            throw std::logic_error("merge_mlp_parallel: blocks differ in depth");
    // Hidden offsets per block per layer boundary.
    for (std::size_t l = 0; l < depth; ++l) {
        int in_cols = l == 0 ? d : 0;
        int out_rows = l + 1 == depth ? d : 0;
        if (l != 0)
            for (const auto* b : live) in_cols += b->layers[l].w.cols;
        if (l + 1 != depth)
            for (const auto* b : live) out_rows += b->layers[l].w.rows;
        SparseMatrix::Builder w(out_rows, in_cols);
        std::vector<double> bias(out_rows, 0.0);
        int roff = 0, coff = 0;
        for (const auto* b : live) {
            const auto& layer = b->layers[l];
            int rbase = l + 1 == depth ? 0 : roff;
            int cbase = l == 0 ? 0 : coff;
            for (int r = 0; r < layer.w.rows; ++r) {
                for (int e = layer.w.row_ptr[r]; e < layer.w.row_ptr[r + 1]; ++e)
                    w.add(rbase + r, cbase + layer.w.col[e], layer.w.val[e]);
                bias[rbase + r] += layer.b[r];
            }
            if (l + 1 != depth) roff += layer.w.rows;
            if (l != 0) coff += layer.w.cols;
        }
        out.layers.push_back({w.build(), std::move(bias)});
    }
    return out;
}

MlpBlock embed_mlp(const MlpBlock& raw, int d, const std::vector<int>& in_channels,
                   const std::vector<int>& out_channels, std::vector<std::uint8_t> residual) {
    if (raw.layers.empty()) throw std::logic_error("embed_mlp: empty block");
    MlpBlock out = raw;
    out.residual = std::move(residual);
    if (static_cast<int>(in_channels.size()) != raw.layers.front().w.cols)
        throw std::logic_error("embed_mlp: input channel count mismatch");
    if (static_cast<int>(out_channels.size()) != raw.layers.back().w.rows)
        throw std::logic_error("embed_mlp: output channel count mismatch");
    out.layers.front().w = remap_cols(raw.layers.front().w, in_channels, d);
    out.layers.back().w = remap_rows(out.layers.back().w, out_channels, d);
    std::vector<double> nb(d, 0.0);
    for (std::size_t r = 0; r < raw.layers.back().b.size(); ++r)
        nb[out_channels[r]] = raw.layers.back().b[r];
    out.layers.back().b = std::move(nb);
    return out;
}

std::vector<std::uint8_t> mask_all(int d) { return std::vector<std::uint8_t>(d, 1); }

std::vector<std::uint8_t> mask_of(int d, const std::vector<int>& on) {
    std::vector<std::uint8_t> m(d, 0);
    for (int i : on) m[i] = 1;
    return m;
}

std::vector<std::uint8_t> mask_except(int d, const std::vector<int>& off) {
    std::vector<std::uint8_t> m(d, 1);
    for (int i : off) m[i] = 0;
    return m;
}

} // namespace shortcut
