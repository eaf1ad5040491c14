#pragma once

// Numeric transformer primitives: causal attention, position-wise ReLU MLPs,
// positional encodings, padding, and fixed-weight nets with explicit decoders.
// Weight matrices are sparse (the constructions are); activations are dense
// and processed feature-major so the kernels can vectorize over positions.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "shortcut/semiautomaton.hpp"

namespace shortcut {

// Raised when a decoder cannot map an activation to a state.
struct DecodeError : std::runtime_error {
    double offending_value;
    int position;
    DecodeError(const std::string& m, double v, int pos)
        : std::runtime_error(m), offending_value(v), position(pos) {}
};

struct SparseMatrix {
    int rows = 0, cols = 0;
    std::vector<int> row_ptr;  // rows + 1 entries
    std::vector<int> col;
    std::vector<double> val;

    static SparseMatrix zero(int rows, int cols);
    std::size_t nnz() const { return val.size(); }
    double max_abs() const;
    // y (rows x p, feature-major) = this * x (cols x p); y must be zeroed or
    // preloaded with the bias by the caller.
    void apply_accumulate(const double* x, double* y, int p) const;

    struct Builder {
        int rows, cols;
        std::vector<std::tuple<int, int, double>> entries;
        Builder(int r, int c) : rows(r), cols(c) {}
        void add(int r, int c, double v);
        SparseMatrix build() const;
    };
};

// Dense feature-major activation buffer: row = feature, col = position.
struct Activations {
    int d = 0, p = 0;
    std::vector<double> data;
    Activations() = default;
    Activations(int d_, int p_) : d(d_), p(p_), data(static_cast<std::size_t>(d_) * p_, 0.0) {}
    double* row(int f) { return data.data() + static_cast<std::size_t>(f) * p; }
    const double* row(int f) const { return data.data() + static_cast<std::size_t>(f) * p; }
    double& at(int f, int pos) { return data[static_cast<std::size_t>(f) * p + pos]; }
    double at(int f, int pos) const { return data[static_cast<std::size_t>(f) * p + pos]; }
};

struct AttentionHead {
    // Projections are stored k x d ("query = wq * x"); wc is d x k.
    SparseMatrix wq, wk, wv, wc;
    int head_dim() const { return wq.rows; }
};

struct AttentionBlock {
    std::vector<AttentionHead> heads;
    std::vector<std::uint8_t> residual;  // per-dimension mask, size d (may be empty = none)
};

struct MlpLayer {
    SparseMatrix w;
    std::vector<double> b;
};

struct MlpBlock {
    // ReLU between layers, linear output. Output width of the last layer must
    // equal the embedding dimension when used inside a net.
    std::vector<MlpLayer> layers;
    std::vector<std::uint8_t> residual;

    int max_hidden_width() const;
    double max_abs_weight() const;
};

struct NetLayer {
    AttentionBlock attn;
    MlpBlock mlp;
};

// Construction-declared integrality checks probed at MLP inputs:
// |value * scale - round(value * scale)| <= tol on the listed channels.
struct WorkspaceCheck {
    int layer = 0;  // checked on the input of this layer's MLP
    std::vector<int> channels;
    double scale = 1.0;
    double tol = 1e-6;
    double lo = 0.0, hi = 0.0;  // expected integer range after scaling
};

struct Decoder {
    enum class Kind { RoundChannel, RepLookup };
    Kind kind = Kind::RoundChannel;
    double tolerance = 0.25;
    int channel = 0;  // RoundChannel
    int offset = 0;   // added to the rounded value (1-based encodings use -1)
    std::vector<int> channels;              // RepLookup
    std::map<std::vector<int>, int> table;  // RepLookup: integer vector -> state
};

struct NetMetrics {
    int depth = 0;
    int embed_dim = 0;
    int attention_width = 0;  // max over layers of max(d, H*k)
    int mlp_width = 0;        // max intermediate MLP width
    int max_heads = 0;
    double max_abs_weight = 0.0;

    bool operator==(const NetMetrics&) const = default;
};

struct TransformerNet {
    int capacity = 0;  // maximum input length T
    int d = 0;
    // Token embeddings for fixed padding positions, prepended before input 1.
    std::vector<std::vector<double>> padding_prefix;
    // Positional encodings for all capacity + padding rows.
    std::vector<std::vector<double>> positional;
    std::vector<std::string> symbols;                 // encoder order
    std::vector<std::vector<double>> encoder;         // one row per symbol
    std::vector<NetLayer> layers;
    Decoder decoder;
    std::vector<WorkspaceCheck> checks;
    NetMetrics metrics;  // stored at compile time; recomputable

    std::string construction;
    std::string automaton_name;
    int q0 = 0;

    int pad_rows() const { return static_cast<int>(padding_prefix.size()); }
    int symbol_index(const std::string& label) const;
    NetMetrics recompute_metrics() const;
};

struct EvalStats {
    double max_decode_deviation = 0.0;   // distance from decoded activations to integers
    double max_workspace_deviation = 0.0;
    bool workspace_ok = true;
};

// Padding rows precede every input row, so their activations (and their
// key/value projections) are input-independent. Precomputing them once per
// net removes the padding half of the work from every evaluation.
struct EvalCache {
    int pads = 0;
    struct HeadKv {
        Activations k_pad, v_pad;
    };
    std::vector<std::vector<HeadKv>> layers;  // [layer][head]
};
EvalCache build_eval_cache(const TransformerNet& net);

// Runs the net on a symbol sequence (indices into net.symbols). Throws
// InputError if the input is longer than the compiled capacity and
// DecodeError when no decoder rule matches. The cache, when given, must have
// been built from the same net.
StateSequence net_evaluate(const TransformerNet& net, std::span<const int> symbols,
                           EvalStats* stats = nullptr, const EvalCache* cache = nullptr);
StateSequence net_evaluate(const TransformerNet& net, const std::vector<std::string>& labels,
                           EvalStats* stats = nullptr);

// Standalone block semantics (row-major X, one row per position), used by the
// evaluator and directly testable.
std::vector<std::vector<double>> causal_attention(const std::vector<std::vector<double>>& x,
                                                  const AttentionBlock& block);
std::vector<std::vector<double>> mlp_apply(const std::vector<std::vector<double>>& x,
                                           const MlpBlock& block);

// Equally spaced points on the circle: row t = (cos(2 pi t / n), sin(2 pi t / n)).
std::vector<std::array<double, 2>> circle_positions(int n);
// Half-circle spacing used by the scan construction: angle(t) = pi t / denom.
std::array<double, 2> half_circle_point(int t, int denom);

// Serialization. Round trip preserves net_evaluate outputs bitwise.
nlohmann::ordered_json to_json(const TransformerNet& net);
TransformerNet net_from_json(const nlohmann::json& j);
TransformerNet load_net(const std::string& path);
void save_net(const TransformerNet& net, const std::string& path);

} // namespace shortcut
