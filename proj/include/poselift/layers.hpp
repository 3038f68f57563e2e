// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "poselift/graph.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

using PairList = std::vector<std::pair<int, int>>;

// How parallel feature streams are merged: stacked along the channel axis,
// or added (which requires matching widths).
enum class FuseMode { concat, sum };

FuseMode fuse_mode_from_string(const std::string& s);
std::string to_string(FuseMode m);

// Output widths for the distance rings k = s+1 .. l when the per-ring channel
// budget shrinks geometrically with hop distance: width(k) = round(d^(k-s) * c_in),
// floored at one channel. `tail_anchored` switches the exponent to k-l, which
// anchors full width at the farthest ring instead (and grows toward the near
// rings when d < 1). Requires c_in >= 1, s >= 1, l >= s and d in (0, 1].
std::vector<int> squeeze_schedule(int c_in, int s, int l, double d,
                                  bool tail_anchored = false);

// Ordered pair lists defining each aggregation branch. The near branch covers
// every ordered pair within `s` hops plus all self pairs; a ring branch covers
// the ordered pairs at exactly hop k. Order is row-major (by target, then
// source), which fixes the layout of the matching weight banks.
PairList near_pairs(const HopPartition& part, int s);
PairList ring_pair_list(const HopPartition& part, int k);

// 0/1 support mask for a pair list, as a constant [N,N] tensor.
Tensor pair_mask(int num_nodes, const PairList& pairs);

// Row-normalized constant graph over a pair list. Rows with no pairs stay
// zero, which ring branches on small graphs rely on.
Tensor masked_row_graph(int num_nodes, const PairList& pairs);

// Weights for one aggregation branch: w is [P, C_in, C_branch], one slice per
// pair, in pair-list order.
struct BranchWeights {
    PairList pairs;
    Tensor w;
};

struct HcsfSpec {
    int num_nodes = 0;
    int c_in = 0;
    int c_out = 0;
    int near_hops = 1;        // s: radius of the full-width branch
    int max_hops = 3;         // l: farthest ring aggregated
    double squeeze = 0.5;     // d: per-hop channel decay for the rings
    bool tail_anchored = false;
    FuseMode ring_fuse = FuseMode::concat;   // merges ring outputs
    FuseMode final_fuse = FuseMode::concat;  // merges near output with rings
    bool bias = true;

    void validate() const;
    std::vector<int> ring_widths() const;
    // Channel count entering the per-node output projection.
    int fused_width() const;
};

// All learned tensors of one layer. merge_w is [N, fused_width, c_out];
// merge_b is [c_out] (undefined handle when bias is off).
struct HcsfWeights {
    BranchWeights near;
    std::vector<BranchWeights> rings;  // k = s+1 .. l, possibly empty pair lists
    Tensor merge_w;
    Tensor merge_b;

    std::vector<Tensor> parameters() const;
    long parameter_count() const;
};

// Aggregation graphs for one layer, matching the branch pair lists. In the
// static regime these are constants; a dynamic regime feeds learned graphs.
struct BranchGraphs {
    Tensor near;                // [N,N] or [B,N,N]
    std::vector<Tensor> rings;  // same shapes, k = s+1 .. l
};

// Constant graphs from the skeleton: strict row normalization for the near
// branch (its rows always have the self pair) and lenient row normalization
// for each ring.
BranchGraphs static_branch_graphs(const HopPartition& part, const HcsfSpec& spec);

// Merge feature streams along the last axis (concat) or by addition (sum).
Tensor fuse_features(const std::vector<Tensor>& parts, FuseMode mode);

// Split-distance aggregation: the near branch keeps full width, each farther
// ring gets a squeezed width, the streams are fused, and a per-node linear
// map produces c_out channels. x is [B, N, c_in]; the result is [B, N, c_out].
Tensor hcsf_forward(const Tensor& x, const BranchGraphs& graphs,
                    const HcsfWeights& weights, const HcsfSpec& spec);

// Plain graph convolution with one shared weight: y = a_hat @ x @ w.
Tensor gcn_forward(const Tensor& x, const Tensor& a_hat, const Tensor& w);

// Locally connected baseline: per-pair weights over one cumulative
// neighborhood, all at full output width.
Tensor lcn_forward(const Tensor& x, const Tensor& a, const BranchWeights& bw);

}  // namespace poselift
