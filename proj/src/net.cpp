#include "shortcut/net.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "shortcut/kernels.hpp"

namespace shortcut {

SparseMatrix SparseMatrix::zero(int rows, int cols) {
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    return m;
}

double SparseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : val) m = std::max(m, std::fabs(v));
    return m;
}

void SparseMatrix::apply_accumulate(const double* x, double* y, int p) const {
    const auto& k = kernels::ops();
    for (int r = 0; r < rows; ++r) {
        double* yr = y + static_cast<std::size_t>(r) * p;
        for (int e = row_ptr[r]; e < row_ptr[r + 1]; ++e)
            k.axpy(yr, val[e], x + static_cast<std::size_t>(col[e]) * p, p);
    }
}

void SparseMatrix::Builder::add(int r, int c, double v) {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
        throw InputError("sparse builder: entry out of range");
    if (v != 0.0) entries.emplace_back(r, c, v);
}

SparseMatrix SparseMatrix::Builder::build() const {
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    auto sortedEntries = entries;
    std::stable_sort(sortedEntries.begin(), sortedEntries.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    m.row_ptr.assign(rows + 1, 0);
    for (const auto& [r, c, v] : sortedEntries) m.row_ptr[r + 1]++;
    for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    m.col.resize(sortedEntries.size());
    m.val.resize(sortedEntries.size());
    for (std::size_t i = 0; i < sortedEntries.size(); ++i) {
        m.col[i] = std::get<1>(sortedEntries[i]);
        m.val[i] = std::get<2>(sortedEntries[i]);
    }
    return m;
}

int MlpBlock::max_hidden_width() const {
    int w = 0;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) w = std::max(w, layers[i].w.rows);
    return w;
}

double MlpBlock::max_abs_weight() const {
    double m = 0.0;
    for (const auto& l : layers) {
        m = std::max(m, l.w.max_abs());
        for (double v : l.b) m = std::max(m, std::fabs(v));
    }
    return m;
}

int TransformerNet::symbol_index(const std::string& label) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
        if (symbols[i] == label) return static_cast<int>(i);
    throw InputError("net: unknown symbol " + label);
}

NetMetrics TransformerNet::recompute_metrics() const {
    NetMetrics m;
    m.depth = static_cast<int>(layers.size());
    m.embed_dim = d;
    double w = 0.0;
    for (const auto& row : encoder)
        for (double v : row) w = std::max(w, std::fabs(v));
    for (const auto& row : padding_prefix)
        for (double v : row) w = std::max(w, std::fabs(v));
    for (const auto& row : positional)
        for (double v : row) w = std::max(w, std::fabs(v));
    for (const auto& layer : layers) {
        int hk = 0;
        for (const auto& h : layer.attn.heads) {
            hk += h.head_dim();
            for (const SparseMatrix* mat : {&h.wq, &h.wk, &h.wv, &h.wc})
                w = std::max(w, mat->max_abs());
        }
        m.attention_width = std::max(m.attention_width, std::max(d, hk));
        m.max_heads = std::max(m.max_heads, static_cast<int>(layer.attn.heads.size()));
        m.mlp_width = std::max(m.mlp_width, layer.mlp.max_hidden_width());
        w = std::max(w, layer.mlp.max_abs_weight());
    }
    if (layers.empty()) m.attention_width = d;
    m.max_abs_weight = w;
    return m;
}

namespace {

// out = sum over heads wc * mixed + residual (*) x.
void run_attention(const AttentionBlock& block, const Activations& x, Activations& out,
                   std::vector<double>& scores) {
    const auto& k = kernels::ops();
    int p = x.p;
    out = Activations(x.d, p);
    scores.resize(p);
    for (const auto& head : block.heads) {
        int hd = head.head_dim();
        Activations q(hd, p), key(hd, p), v(hd, p), mixed(hd, p);
        head.wq.apply_accumulate(x.data.data(), q.data.data(), p);
        head.wk.apply_accumulate(x.data.data(), key.data.data(), p);
        head.wv.apply_accumulate(x.data.data(), v.data.data(), p);
        // Rows of q/key/v are zero unless the projection writes them.
        std::vector<char> qrow(hd, 0), krow(hd, 0), vrow(hd, 0);
        for (int f = 0; f < hd; ++f) {
            qrow[f] = head.wq.row_ptr[f + 1] > head.wq.row_ptr[f];
            krow[f] = head.wk.row_ptr[f + 1] > head.wk.row_ptr[f];
            vrow[f] = head.wv.row_ptr[f + 1] > head.wv.row_ptr[f];
        }
        for (int t = 0; t < p; ++t) {
            int n = t + 1;
            k.fill(scores.data(), 0.0, n);
            for (int f = 0; f < hd; ++f) {
                if (!qrow[f] || !krow[f]) continue;
                double qv = q.at(f, t);
                if (qv != 0.0) k.axpy(scores.data(), qv, key.row(f), n);
            }
            kernels::softmax_inplace(scores.data(), n);
            for (int f = 0; f < hd; ++f)
                mixed.at(f, t) = vrow[f] ? k.dot(scores.data(), v.row(f), n) : 0.0;
        }
        head.wc.apply_accumulate(mixed.data.data(), out.data.data(), p);
    }
    if (!block.residual.empty()) {
        for (int f = 0; f < x.d; ++f)
            if (block.residual[f]) k.axpy(out.row(f), 1.0, x.row(f), p);
    }
}

// Applies the MLP to a column slice of x, writing the slice of out. Both
// buffers have the same column count; slicing keeps the wide hidden buffers
// cache-resident.
void run_mlp_cols(const MlpBlock& block, const Activations& x, Activations& out, int c0,
                  int c1) {
    const auto& k = kernels::ops();
    int cols = c1 - c0;
    Activations cur(x.d, cols);
    for (int f = 0; f < x.d; ++f)
        std::copy(x.row(f) + c0, x.row(f) + c1, cur.row(f));
    for (std::size_t l = 0; l < block.layers.size(); ++l) {
        const auto& layer = block.layers[l];
        Activations next(layer.w.rows, cols);
        for (int r = 0; r < layer.w.rows; ++r) k.fill(next.row(r), layer.b[r], cols);
        layer.w.apply_accumulate(cur.data.data(), next.data.data(), cols);
        if (l + 1 < block.layers.size()) k.relu(next.data.data(), next.data.size());
        cur = std::move(next);
    }
    if (cur.d != out.d) throw InputError("mlp: output width mismatch");
    for (int f = 0; f < out.d; ++f) {
        double* dst = out.row(f) + c0;
        std::copy(cur.row(f), cur.row(f) + cols, dst);
        if (!block.residual.empty() && block.residual[f]) k.axpy(dst, 1.0, x.row(f) + c0, cols);
    }
}

int mlp_chunk_cols(const MlpBlock& block, int total) {
    int maxw = 1;
    for (const auto& l : block.layers) maxw = std::max(maxw, l.w.rows);
    int c = static_cast<int>((3 << 17) / (sizeof(double) * maxw));  // ~roughly 384 KiB buffers
    c = std::max(c, 8);
    return std::min(c, total);
}

void run_mlp(const MlpBlock& block, const Activations& x, Activations& out) {
    if (block.layers.empty()) {
        out = x;
        return;
    }
    out = Activations(static_cast<int>(block.layers.back().w.rows), x.p);
    int chunk = mlp_chunk_cols(block, x.p);
    for (int c0 = 0; c0 < x.p; c0 += chunk)
        run_mlp_cols(block, x, out, c0, std::min(x.p, c0 + chunk));
}

// Attention over real columns only; padding keys/values come from the cache.
void run_attention_cached(const AttentionBlock& block, const Activations& xr, int pads,
                          const std::vector<EvalCache::HeadKv>& kv, Activations& out,
                          std::vector<double>& scores) {
    const auto& k = kernels::ops();
    int r = xr.p;
    out = Activations(xr.d, r);
    scores.resize(pads + r);
    for (std::size_t hi = 0; hi < block.heads.size(); ++hi) {
        const auto& head = block.heads[hi];
        const Activations& kpad = kv[hi].k_pad;
        const Activations& vpad = kv[hi].v_pad;
        int hd = head.head_dim();
        Activations q(hd, r), key(hd, r), v(hd, r), mixed(hd, r);
        head.wq.apply_accumulate(xr.data.data(), q.data.data(), r);
        head.wk.apply_accumulate(xr.data.data(), key.data.data(), r);
        head.wv.apply_accumulate(xr.data.data(), v.data.data(), r);
        std::vector<char> qrow(hd, 0), krow(hd, 0), vrow(hd, 0);
        for (int f = 0; f < hd; ++f) {
            qrow[f] = head.wq.row_ptr[f + 1] > head.wq.row_ptr[f];
            krow[f] = head.wk.row_ptr[f + 1] > head.wk.row_ptr[f];
            vrow[f] = head.wv.row_ptr[f + 1] > head.wv.row_ptr[f];
        }
        for (int t = 0; t < r; ++t) {
            int n = pads + t + 1;
            k.fill(scores.data(), 0.0, n);
            for (int f = 0; f < hd; ++f) {
                if (!qrow[f] || !krow[f]) continue;
                double qv = q.at(f, t);
                if (qv == 0.0) continue;
                if (pads) k.axpy(scores.data(), qv, kpad.row(f), pads);
                k.axpy(scores.data() + pads, qv, key.row(f), t + 1);
            }
            kernels::softmax_inplace(scores.data(), n);
            for (int f = 0; f < hd; ++f) {
                if (!vrow[f]) {
                    mixed.at(f, t) = 0.0;
                    continue;
                }
                double acc = pads ? k.dot(scores.data(), vpad.row(f), pads) : 0.0;
                mixed.at(f, t) = acc + k.dot(scores.data() + pads, v.row(f), t + 1);
            }
        }
        head.wc.apply_accumulate(mixed.data.data(), out.data.data(), r);
    }
    if (!block.residual.empty()) {
        for (int f = 0; f < xr.d; ++f)
            if (block.residual[f]) k.axpy(out.row(f), 1.0, xr.row(f), r);
    }
}

int decode_position(const TransformerNet& net, const Activations& x, int col, int pos,
                    EvalStats* stats) {
    const Decoder& dec = net.decoder;
    auto track = [&](double dev) {
        if (stats) stats->max_decode_deviation = std::max(stats->max_decode_deviation, dev);
    };
    if (dec.kind == Decoder::Kind::RoundChannel) {
        double v = x.at(dec.channel, col);
        double r = std::round(v);
        double dev = std::fabs(v - r);
        track(dev);
        if (dev > dec.tolerance)
            throw DecodeError("decoder: activation too far from an integer", v, pos);
        return static_cast<int>(r) + dec.offset;
    }
    std::vector<int> key;
    key.reserve(dec.channels.size());
    for (int c : dec.channels) {
        double v = x.at(c, col);
        double r = std::round(v);
        double dev = std::fabs(v - r);
        track(dev);
        if (dev > dec.tolerance)
            throw DecodeError("decoder: rep activation too far from an integer", v, pos);
        key.push_back(static_cast<int>(r));
    }
    auto it = dec.table.find(key);
    if (it == dec.table.end())
        throw DecodeError("decoder: rep vector not in decode table", key.empty() ? 0.0 : key[0],
                          pos);
    return it->second;
}

} // namespace

EvalCache build_eval_cache(const TransformerNet& net) {
    EvalCache cache;
    cache.pads = net.pad_rows();
    int pads = cache.pads;
    Activations xpad(net.d, pads);
    for (int j = 0; j < pads; ++j) {
        for (int f = 0; f < net.d; ++f) {
            double v = net.padding_prefix[j][f];
            if (j < static_cast<int>(net.positional.size())) v += net.positional[j][f];
            xpad.at(f, j) = v;
        }
    }
    std::vector<double> scores;
    Activations buf;
    for (const auto& layer : net.layers) {
        std::vector<EvalCache::HeadKv> kvs;
        for (const auto& head : layer.attn.heads) {
            EvalCache::HeadKv kv;
            kv.k_pad = Activations(head.head_dim(), pads);
            kv.v_pad = Activations(head.head_dim(), pads);
            head.wk.apply_accumulate(xpad.data.data(), kv.k_pad.data.data(), pads);
            head.wv.apply_accumulate(xpad.data.data(), kv.v_pad.data.data(), pads);
            kvs.push_back(std::move(kv));
        }
        cache.layers.push_back(std::move(kvs));
        // Padding rows only ever attend to padding rows, so their next-layer
        // activations follow from the padding slice alone.
        if (pads) {
            run_attention(layer.attn, xpad, buf, scores);
            run_mlp(layer.mlp, buf, xpad);
        }
    }
    return cache;
}

namespace {

void probe_checks(const TransformerNet& net, const Activations& x, int layer, EvalStats* stats) {
    if (!stats) return;
    for (const auto& chk : net.checks) {
        if (chk.layer != layer) continue;
        for (int c : chk.channels) {
            for (int j = 0; j < x.p; ++j) {
                double v = x.at(c, j) * chk.scale;
                double dev = std::fabs(v - std::round(v));
                stats->max_workspace_deviation = std::max(stats->max_workspace_deviation, dev);
                if (dev > chk.tol || v < chk.lo - 0.5 || v > chk.hi + 0.5)
                    stats->workspace_ok = false;
            }
        }
    }
}

} // namespace

StateSequence net_evaluate(const TransformerNet& net, std::span<const int> symbols,
                           EvalStats* stats, const EvalCache* cache) {
    if (static_cast<int>(symbols.size()) > net.capacity)
        throw InputError("net_evaluate: input longer than compiled capacity");
    StateSequence out;
    out.q0 = net.q0;
    if (symbols.empty()) return out;

    int pads = net.pad_rows();
    int len = static_cast<int>(symbols.size());
    std::vector<double> scores;
    Activations buf;

    if (cache) {
        if (cache->pads != pads || cache->layers.size() != net.layers.size())
            throw InputError("net_evaluate: cache does not match the net");
        // Real columns only; padding keys/values come from the cache.
        Activations xr(net.d, len);
        for (int t = 0; t < len; ++t) {
            int j = pads + t;
            for (int f = 0; f < net.d; ++f) {
                double v = net.encoder[symbols[t]][f];
                if (j < static_cast<int>(net.positional.size())) v += net.positional[j][f];
                xr.at(f, t) = v;
            }
        }
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            run_attention_cached(net.layers[li].attn, xr, pads, cache->layers[li], buf, scores);
            probe_checks(net, buf, static_cast<int>(li), stats);
            run_mlp(net.layers[li].mlp, buf, xr);
        }
        out.states.reserve(len);
        for (int t = 0; t < len; ++t) out.states.push_back(decode_position(net, xr, t, t, stats));
        return out;
    }

    int p = pads + len;
    Activations x(net.d, p);
    for (int j = 0; j < p; ++j) {
        const std::vector<double>& tok =
            j < pads ? net.padding_prefix[j] : net.encoder[symbols[j - pads]];
        for (int f = 0; f < net.d; ++f) {
            double v = tok[f];
            if (j < static_cast<int>(net.positional.size())) v += net.positional[j][f];
            x.at(f, j) = v;
        }
    }
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        run_attention(net.layers[li].attn, x, buf, scores);
        probe_checks(net, buf, static_cast<int>(li), stats);
        run_mlp(net.layers[li].mlp, buf, x);
    }
    out.states.reserve(len);
    for (int j = pads; j < p; ++j)
        out.states.push_back(decode_position(net, x, j, j - pads, stats));
    return out;
}

StateSequence net_evaluate(const TransformerNet& net, const std::vector<std::string>& labels,
                           EvalStats* stats) {
    std::vector<int> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(net.symbol_index(l));
    return net_evaluate(net, idx, stats);
}

std::vector<std::vector<double>> causal_attention(const std::vector<std::vector<double>>& xin,
                                                  const AttentionBlock& block) {
    int p = static_cast<int>(xin.size());
    if (p == 0) return {};
    int d = static_cast<int>(xin[0].size());
    Activations x(d, p);
    for (int j = 0; j < p; ++j)
        for (int f = 0; f < d; ++f) x.at(f, j) = xin[j][f];
    Activations out;
    std::vector<double> scores;
    run_attention(block, x, out, scores);
    std::vector<std::vector<double>> res(p, std::vector<double>(d));
    for (int j = 0; j < p; ++j)
        for (int f = 0; f < d; ++f) res[j][f] = out.at(f, j);
    return res;
}

std::vector<std::vector<double>> mlp_apply(const std::vector<std::vector<double>>& xin,
                                           const MlpBlock& block) {
    int p = static_cast<int>(xin.size());
    if (p == 0) return {};
    int d = static_cast<int>(xin[0].size());
    Activations x(d, p);
    for (int j = 0; j < p; ++j)
        for (int f = 0; f < d; ++f) x.at(f, j) = xin[j][f];
    Activations out;
    run_mlp(block, x, out);
    std::vector<std::vector<double>> res(p, std::vector<double>(out.d));
    for (int j = 0; j < p; ++j)
        for (int f = 0; f < out.d; ++f) res[j][f] = out.at(f, j);
    return res;
}

std::vector<std::array<double, 2>> circle_positions(int n) {
    std::vector<std::array<double, 2>> rows(n);
    for (int t = 0; t < n; ++t) {
        double a = 2.0 * M_PI * t / n;
        rows[t] = {std::cos(a), std::sin(a)};
    }
    return rows;
}

std::array<double, 2> half_circle_point(int t, int denom) {
    double a = M_PI * t / denom;
    return {std::cos(a), std::sin(a)};
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

nlohmann::ordered_json sparse_to_json(const SparseMatrix& m) {
    nlohmann::ordered_json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    auto entries = nlohmann::ordered_json::array();
    for (int r = 0; r < m.rows; ++r)
        for (int e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e)
            entries.push_back(nlohmann::ordered_json::array({r, m.col[e], m.val[e]}));
    j["entries"] = std::move(entries);
    return j;
}

SparseMatrix sparse_from_json(const nlohmann::json& j) {
    SparseMatrix::Builder b(j.at("rows").get<int>(), j.at("cols").get<int>());
    for (const auto& e : j.at("entries"))
        b.add(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
    return b.build();
}

nlohmann::ordered_json mask_to_json(const std::vector<std::uint8_t>& mask) {
    auto idx = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) idx.push_back(i);
    nlohmann::ordered_json j;
    j["size"] = mask.size();
    j["on"] = std::move(idx);
    return j;
}

std::vector<std::uint8_t> mask_from_json(const nlohmann::json& j) {
    std::vector<std::uint8_t> mask(j.at("size").get<std::size_t>(), 0);
    for (const auto& i : j.at("on")) mask[i.get<std::size_t>()] = 1;
    return mask;
}

} // namespace

nlohmann::ordered_json to_json(const TransformerNet& net) {
    nlohmann::ordered_json j;
    j["format"] = "shortcut-net-v1";
    j["construction"] = net.construction;
    j["automaton"] = net.automaton_name;
    j["q0"] = net.q0;
    j["capacity"] = net.capacity;
    j["embed_dim"] = net.d;
    j["symbols"] = net.symbols;
    j["encoder"] = net.encoder;
    j["padding_prefix"] = net.padding_prefix;
    j["positional"] = net.positional;
    auto layers = nlohmann::ordered_json::array();
    for (const auto& layer : net.layers) {
        nlohmann::ordered_json lj;
        auto heads = nlohmann::ordered_json::array();
        for (const auto& h : layer.attn.heads) {
            nlohmann::ordered_json hj;
            hj["wq"] = sparse_to_json(h.wq);
            hj["wk"] = sparse_to_json(h.wk);
            hj["wv"] = sparse_to_json(h.wv);
            hj["wc"] = sparse_to_json(h.wc);
            heads.push_back(std::move(hj));
        }
        lj["attn"]["heads"] = std::move(heads);
        lj["attn"]["residual"] = mask_to_json(layer.attn.residual);
        auto mls = nlohmann::ordered_json::array();
        for (const auto& ml : layer.mlp.layers) {
            nlohmann::ordered_json mj;
            mj["w"] = sparse_to_json(ml.w);
            mj["b"] = ml.b;
            mls.push_back(std::move(mj));
        }
        lj["mlp"]["layers"] = std::move(mls);
        lj["mlp"]["residual"] = mask_to_json(layer.mlp.residual);
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    nlohmann::ordered_json dj;
    dj["kind"] = net.decoder.kind == Decoder::Kind::RoundChannel ? "round_channel" : "rep_lookup";
    dj["tolerance"] = net.decoder.tolerance;
    dj["channel"] = net.decoder.channel;
    dj["offset"] = net.decoder.offset;
    dj["channels"] = net.decoder.channels;
    auto tbl = nlohmann::ordered_json::array();
    for (const auto& [key, state] : net.decoder.table)
        tbl.push_back(nlohmann::ordered_json::array({key, state}));
    dj["table"] = std::move(tbl);
    j["decoder"] = std::move(dj);
    auto cj = nlohmann::ordered_json::array();
    for (const auto& c : net.checks) {
        nlohmann::ordered_json e;
        e["layer"] = c.layer;
        e["channels"] = c.channels;
        e["scale"] = c.scale;
        e["tol"] = c.tol;
        e["lo"] = c.lo;
        e["hi"] = c.hi;
        cj.push_back(std::move(e));
    }
    j["checks"] = std::move(cj);
    nlohmann::ordered_json mj;
    mj["depth"] = net.metrics.depth;
    mj["embed_dim"] = net.metrics.embed_dim;
    mj["attention_width"] = net.metrics.attention_width;
    mj["mlp_width"] = net.metrics.mlp_width;
    mj["max_heads"] = net.metrics.max_heads;
    mj["max_abs_weight"] = net.metrics.max_abs_weight;
    j["metrics"] = std::move(mj);
    return j;
}

TransformerNet net_from_json(const nlohmann::json& j) {
    TransformerNet net;
    try {
        if (j.at("format").get<std::string>() != "shortcut-net-v1")
            throw InputError("unknown net format");
        net.construction = j.at("construction").get<std::string>();
        net.automaton_name = j.at("automaton").get<std::string>();
        net.q0 = j.at("q0").get<int>();
        net.capacity = j.at("capacity").get<int>();
        net.d = j.at("embed_dim").get<int>();
        net.symbols = j.at("symbols").get<std::vector<std::string>>();
        net.encoder = j.at("encoder").get<std::vector<std::vector<double>>>();
        net.padding_prefix = j.at("padding_prefix").get<std::vector<std::vector<double>>>();
        net.positional = j.at("positional").get<std::vector<std::vector<double>>>();
        for (const auto& lj : j.at("layers")) {
            NetLayer layer;
            for (const auto& hj : lj.at("attn").at("heads")) {
                AttentionHead h;
                h.wq = sparse_from_json(hj.at("wq"));
                h.wk = sparse_from_json(hj.at("wk"));
                h.wv = sparse_from_json(hj.at("wv"));
                h.wc = sparse_from_json(hj.at("wc"));
                layer.attn.heads.push_back(std::move(h));
            }
            layer.attn.residual = mask_from_json(lj.at("attn").at("residual"));
            for (const auto& mj : lj.at("mlp").at("layers")) {
                MlpLayer ml;
                ml.w = sparse_from_json(mj.at("w"));
                ml.b = mj.at("b").get<std::vector<double>>();
                layer.mlp.layers.push_back(std::move(ml));
            }
            layer.mlp.residual = mask_from_json(lj.at("mlp").at("residual"));
            net.layers.push_back(std::move(layer));
        }
        const auto& dj = j.at("decoder");
        net.decoder.kind = dj.at("kind").get<std::string>() == "round_channel"
                               ? Decoder::Kind::RoundChannel
                               : Decoder::Kind::RepLookup;
        net.decoder.tolerance = dj.at("tolerance").get<double>();
        net.decoder.channel = dj.at("channel").get<int>();
        net.decoder.offset = dj.at("offset").get<int>();
        net.decoder.channels = dj.at("channels").get<std::vector<int>>();
        for (const auto& e : dj.at("table"))
            net.decoder.table[e.at(0).get<std::vector<int>>()] = e.at(1).get<int>();
        for (const auto& e : j.at("checks")) {
            WorkspaceCheck c;
            c.layer = e.at("layer").get<int>();
            c.channels = e.at("channels").get<std::vector<int>>();
            c.scale = e.at("scale").get<double>();
            c.tol = e.at("tol").get<double>();
            c.lo = e.at("lo").get<double>();
            c.hi = e.at("hi").get<double>();
            net.checks.push_back(std::move(c));
        }
        const auto& mj = j.at("metrics");
        net.metrics.depth = mj.at("depth").get<int>();
        net.metrics.embed_dim = mj.at("embed_dim").get<int>();
        net.metrics.attention_width = mj.at("attention_width").get<int>();
        net.metrics.mlp_width = mj.at("mlp_width").get<int>();
        net.metrics.max_heads = mj.at("max_heads").get<int>();
        net.metrics.max_abs_weight = mj.at("max_abs_weight").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad net json: ") + e.what());
    }
    return net;
}

TransformerNet load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return net_from_json(j);
}

void save_net(const TransformerNet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << to_json(net).dump() << "\n";
}

} // namespace shortcut
