// SPDX-License-Identifier: Apache-2.0
#include "poselift/layers.hpp"

#include <cmath>

namespace poselift {

FuseMode fuse_mode_from_string(const std::string& s) {
    if (s == "concat") return FuseMode::concat;
    if (s == "sum") return FuseMode::sum;
    fail(ErrorCode::config_invalid, "unknown fuse mode '" + s + "'");
}

std::string to_string(FuseMode m) {
    return m == FuseMode::concat ? "concat" : "sum";
}

std::vector<int> squeeze_schedule(int c_in, int s, int l, double d, bool tail_anchored) {
    require(c_in >= 1, ErrorCode::invalid_spec, "squeeze_schedule: c_in must be positive");
    require(s >= 1, ErrorCode::invalid_hop_range, "squeeze_schedule: s must be >= 1");
    require(l >= s, ErrorCode::invalid_hop_range, "squeeze_schedule: l must be >= s");
    require(d > 0.0 && d <= 1.0, ErrorCode::invalid_ratio,
            "squeeze_schedule: d must be in (0, 1]");
    std::vector<int> widths;
    widths.reserve(static_cast<size_t>(l - s));
    for (int k = s + 1; k <= l; ++k) {
        double factor = tail_anchored ? std::pow(d, k - l) : std::pow(d, k - s);
        long w = std::lround(factor * c_in);
        widths.push_back(static_cast<int>(std::max(1L, w)));
    }
    return widths;
}

PairList near_pairs(const HopPartition& part, int s) {
    require(s >= 1 && s <= part.max_hop, ErrorCode::invalid_hop_range,
            "near_pairs: s out of range");
    PairList pairs;
    for (int i = 0; i < part.num_nodes; ++i)
        for (int j = 0; j < part.num_nodes; ++j)
            if (i == j || part.dist(i, j) <= s) pairs.emplace_back(i, j);
    return pairs;
}

PairList ring_pair_list(const HopPartition& part, int k) {
    require(k >= 1 && k <= part.max_hop, ErrorCode::invalid_hop_range,
            "ring_pair_list: k out of range");
    PairList pairs;
    for (int i = 0; i < part.num_nodes; ++i)
        for (int j = 0; j < part.num_nodes; ++j)
            if (i != j && part.dist(i, j) == k) pairs.emplace_back(i, j);
    return pairs;
}

Tensor pair_mask(int num_nodes, const PairList& pairs) {
    Tensor m = Tensor::zeros({num_nodes, num_nodes});
    for (auto [i, j] : pairs) {
        require(i >= 0 && i < num_nodes && j >= 0 && j < num_nodes,
                ErrorCode::index_out_of_range, "pair_mask: pair outside the graph");
        m.value()[static_cast<size_t>(i) * num_nodes + j] = 1.0;
    }
    return m;
}

Tensor masked_row_graph(int num_nodes, const PairList& pairs) {
    Tensor m = pair_mask(num_nodes, pairs);
    SquareMatrix sm(num_nodes);
    sm.v = m.value();
    SquareMatrix norm = row_normalize_lenient(sm);
    return Tensor::from_data({num_nodes, num_nodes}, norm.v);
}

void HcsfSpec::validate() const {
    require(num_nodes >= 2, ErrorCode::invalid_spec, "layer needs at least two nodes");
    require(c_in >= 1 && c_out >= 1, ErrorCode::invalid_spec,
            "layer widths must be positive");
    // Width constraints are shared with squeeze_schedule; run it for its checks.
    std::vector<int> widths = squeeze_schedule(c_in, near_hops, max_hops, squeeze,
                                               tail_anchored);
    if (ring_fuse == FuseMode::sum)
        for (int w : widths)
            require(w == widths.front(), ErrorCode::invalid_spec,
                    "sum fusion of rings needs equal ring widths");
    if (final_fuse == FuseMode::sum && !widths.empty()) {
        int ring_total = ring_fuse == FuseMode::concat ? 0 : widths.front();
        if (ring_fuse == FuseMode::concat)
            for (int w : widths) ring_total += w;
        require(ring_total == c_in, ErrorCode::invalid_spec,
                "sum fusion with the near branch needs the fused ring width to equal c_in");
    }
}

std::vector<int> HcsfSpec::ring_widths() const {
    return squeeze_schedule(c_in, near_hops, max_hops, squeeze, tail_anchored);
}

int HcsfSpec::fused_width() const {
    std::vector<int> widths = ring_widths();
    int ring_total = 0;
    if (!widths.empty()) {
        if (ring_fuse == FuseMode::concat)
            for (int w : widths) ring_total += w;
        else
            ring_total = widths.front();
    }
    if (final_fuse == FuseMode::sum) return c_in;
    return c_in + ring_total;
}

std::vector<Tensor> HcsfWeights::parameters() const {
    std::vector<Tensor> out;
    if (near.w.defined()) out.push_back(near.w);
    for (const auto& r : rings)
        if (r.w.defined()) out.push_back(r.w);
    out.push_back(merge_w);
    if (merge_b.defined()) out.push_back(merge_b);
    return out;
}

long HcsfWeights::parameter_count() const {
    long total = 0;
    for (const Tensor& t : parameters()) total += t.numel();
    return total;
}

BranchGraphs static_branch_graphs(const HopPartition& part, const HcsfSpec& spec) {
    spec.validate();
    require(part.num_nodes == spec.num_nodes, ErrorCode::shape_mismatch,
            "static_branch_graphs: node count mismatch");
    BranchGraphs g;
    PairList np = near_pairs(part, spec.near_hops);
    Tensor near_mask = pair_mask(part.num_nodes, np);
    SquareMatrix sm(part.num_nodes);
    sm.v = near_mask.value();
    SquareMatrix norm = normalize_adjacency(sm, NormMode::row);
    g.near = Tensor::from_data({part.num_nodes, part.num_nodes}, norm.v);
    for (int k = spec.near_hops + 1; k <= spec.max_hops; ++k) {
        PairList rp = k <= part.max_hop ? ring_pair_list(part, k) : PairList{};
        g.rings.push_back(masked_row_graph(part.num_nodes, rp));
    }
    return g;
}

Tensor fuse_features(const std::vector<Tensor>& parts, FuseMode mode) {
    require(!parts.empty(), ErrorCode::invalid_spec, "fuse_features: nothing to fuse");
    if (parts.size() == 1) return parts.front();
    if (mode == FuseMode::concat) return concat(parts, parts.front().rank() - 1);
    Tensor acc = parts.front();
    for (size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return acc;
}

namespace {

// Shared shape checks for the aggregation entry points.
void check_layer_input(const Tensor& x, int num_nodes, int c_in, const char* who) {
    require(x.rank() == 3, ErrorCode::shape_mismatch,
            std::string(who) + ": x must be [B, N, C], got " + shape_to_string(x.shape()));
    require(x.shape()[1] == num_nodes && x.shape()[2] == c_in, ErrorCode::shape_mismatch,
            std::string(who) + ": x is " + shape_to_string(x.shape()) + ", expected [B, " +
                std::to_string(num_nodes) + ", " + std::to_string(c_in) + "]");
}

}  // namespace

Tensor hcsf_forward(const Tensor& x, const BranchGraphs& graphs,
                    const HcsfWeights& weights, const HcsfSpec& spec) {
    spec.validate();
    check_layer_input(x, spec.num_nodes, spec.c_in, "hcsf_forward");
    std::vector<int> widths = spec.ring_widths();
    require(graphs.rings.size() == widths.size() && weights.rings.size() == widths.size(),
            ErrorCode::invalid_spec, "hcsf_forward: ring count mismatch");

    int batch = x.shape()[0];
    Tensor near_out = pair_aggregate(graphs.near, x, weights.near.w, weights.near.pairs);

    std::vector<Tensor> ring_outs;
    for (size_t r = 0; r < widths.size(); ++r) {
        if (weights.rings[r].pairs.empty()) {
            // Ring beyond the graph's reach: contributes a zero stream.
            ring_outs.push_back(Tensor::zeros({batch, spec.num_nodes, widths[r]}));
            continue;
        }
        ring_outs.push_back(pair_aggregate(graphs.rings[r], x, weights.rings[r].w,
                                           weights.rings[r].pairs));
    }

    Tensor fused;
    if (ring_outs.empty()) {
        fused = near_out;
    } else {
        Tensor ring_fused = fuse_features(ring_outs, spec.ring_fuse);
        fused = fuse_features({near_out, ring_fused}, spec.final_fuse);
    }

    Tensor out = node_linear(fused, weights.merge_w);
    if (spec.bias) {
        require(weights.merge_b.defined(), ErrorCode::invalid_spec,
                "hcsf_forward: bias enabled but merge_b missing");
        out = add_broadcast(out, weights.merge_b);
    }
    return out;
}

Tensor gcn_forward(const Tensor& x, const Tensor& a_hat, const Tensor& w) {
    return matmul(matmul(a_hat, x), w);
}

Tensor lcn_forward(const Tensor& x, const Tensor& a, const BranchWeights& bw) {
    return pair_aggregate(a, x, bw.w, bw.pairs);
}

}  // namespace poselift
