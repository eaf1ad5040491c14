#pragma once

// MLP weight gadgets used by every construction (discrete interpolation,
// thresholds, transition-map composition) plus the channel-remapping helpers
// used to assemble nets from component nets.

#include "shortcut/net.hpp"

namespace shortcut {

// 2-layer ReLU interpolator for a finite 1D table. Keys must be pairwise
// >= delta apart, |key| <= bx, values <= by in max norm. Output equals the
// table value for inputs within +-delta/4 of a key. Hidden width 4*|table|,
// ||W1|| <= 4/delta, ||b1|| <= 4*bx/delta + 2, ||W2|| <= by.
struct InterpTable1D {
    std::vector<double> keys;
    std::vector<std::vector<double>> values;
};
MlpBlock build_interp_mlp_1d(const InterpTable1D& table, double delta, double bx, double by);

// 3-layer ReLU interpolator for a finite table on R^din. Per-coordinate
// perturbations up to delta/4 leave the output unchanged. Hidden widths
// 4*sum_i |X_i| and |table|.
struct InterpTableND {
    std::vector<std::vector<double>> keys;
    std::vector<std::vector<double>> values;
};
MlpBlock build_interp_mlp_nd(const InterpTableND& table, double delta, double bx, double by);

// 2-layer ReLU block computing 1[x > 0] exactly for |x| >= delta, robust to
// |xi| <= delta/4. Width 2.
MlpBlock build_threshold_mlp(double delta);

// 3-layer ReLU block for transition-map composition. Input: g's image vector
// (1-based) in dims 0..n-1, f's in dims n..2n-1. Output: (f o g)'s image
// vector in dims n..2n-1 (other outputs zero). Exact on all n^(2n) pairs and
// under per-coordinate noise <= 0.1 the rounded output map is unchanged.
// Widths 4n^2+n and n^2, weights bounded by 4n+2.
MlpBlock build_composition_mlp(int num_states);

// ---------------------------------------------------------------------------
// Assembly helpers.

SparseMatrix remap_cols(const SparseMatrix& m, const std::vector<int>& col_map, int new_cols);
SparseMatrix remap_rows(const SparseMatrix& m, const std::vector<int>& row_map, int new_rows);

// Rebuilds the block on a d_new-dimensional embedding, channel i -> map[i].
AttentionHead remap_head(const AttentionHead& h, const std::vector<int>& map, int d_new);
AttentionBlock remap_attention(const AttentionBlock& b, const std::vector<int>& map, int d_new);
MlpBlock remap_mlp(const MlpBlock& b, const std::vector<int>& map, int d_new);
NetLayer remap_layer(const NetLayer& l, const std::vector<int>& map, int d_new);

// Attention with no heads + full residual, MLP empty + full residual.
NetLayer identity_layer(int d);

// Channels the block's final layer writes (nonzero row or bias).
std::vector<int> mlp_written_channels(const MlpBlock& b);

// Block-diagonal union of MLP blocks acting on disjoint channels of a shared
// embedding. All non-empty blocks must have the same layer count. Residual
// masks are unioned and then cleared on every written channel.
MlpBlock merge_mlp_parallel(const std::vector<const MlpBlock*>& blocks, int d);

// Places a raw gadget (dense input dims = in_channels.size(), final output
// dims = out_channels.size()) onto embedding channels.
MlpBlock embed_mlp(const MlpBlock& raw, int d, const std::vector<int>& in_channels,
                   const std::vector<int>& out_channels, std::vector<std::uint8_t> residual);

std::vector<std::uint8_t> mask_all(int d);
std::vector<std::uint8_t> mask_of(int d, const std::vector<int>& on);
std::vector<std::uint8_t> mask_except(int d, const std::vector<int>& off);

} // namespace shortcut
