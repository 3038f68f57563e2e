// SPDX-License-Identifier: Apache-2.0
#include "poselift/dynamic_graph.hpp"

#include <algorithm>

namespace poselift {

DynamicMode dynamic_mode_from_string(const std::string& s) {
    if (s == "m_plus_alpha_o") return DynamicMode::m_plus_alpha_o;
    if (s == "only_m") return DynamicMode::only_m;
    if (s == "only_o") return DynamicMode::only_o;
    if (s == "m_plus_o") return DynamicMode::m_plus_o;
    fail(ErrorCode::config_invalid, "unknown dynamic mode '" + s + "'");
}

std::string to_string(DynamicMode m) {
    switch (m) {
        case DynamicMode::m_plus_alpha_o: return "m_plus_alpha_o";
        case DynamicMode::only_m: return "only_m";
        case DynamicMode::only_o: return "only_o";
        case DynamicMode::m_plus_o: return "m_plus_o";
    }
    fail(ErrorCode::config_invalid, "bad dynamic mode value");
}

GraphInit graph_init_from_string(const std::string& s) {
    if (s == "physical") return GraphInit::physical;
    if (s == "dense") return GraphInit::dense;
    if (s == "random") return GraphInit::random;
    fail(ErrorCode::config_invalid, "unknown graph init '" + s + "'");
}

std::string to_string(GraphInit m) {
    switch (m) {
        case GraphInit::physical: return "physical";
        case GraphInit::dense: return "dense";
        case GraphInit::random: return "random";
    }
    fail(ErrorCode::config_invalid, "bad graph init value");
}

int embed_width(int c_in) {
    require(c_in >= 1, ErrorCode::invalid_spec, "embed_width: c_in must be positive");
    return std::max(4, c_in / 4);
}

Tensor feature_offsets(const Tensor& x, const Tensor& w_theta, const Tensor& w_phi) {
    require(x.rank() == 3, ErrorCode::shape_mismatch,
            "feature_offsets: x must be [B,N,C], got " + shape_to_string(x.shape()));
    require(w_theta.rank() == 2 && w_phi.rank() == 2 &&
                w_theta.shape() == w_phi.shape() && w_theta.shape()[0] == x.shape()[2],
            ErrorCode::shape_mismatch, "feature_offsets: embedding weights must be [C,E]");
    Tensor e1 = matmul(x, w_theta);                    // [B,N,E]
    Tensor e2 = matmul(x, w_phi);                      // [B,N,E]
    return tanh_op(matmul(e1, transpose(e2, 1, 2)));   // [B,N,N]
}

Tensor temporal_feature_offsets(const Tensor& x, const Tensor& k_theta,
                                const Tensor& k_phi, int stride, int dilation) {
    require(x.rank() == 4, ErrorCode::shape_mismatch,
            "temporal_feature_offsets: x must be [B,C,T,N], got " +
                shape_to_string(x.shape()));
    require(k_theta.rank() == 3 && k_phi.rank() == 3 && k_theta.shape() == k_phi.shape(),
            ErrorCode::shape_mismatch,
            "temporal_feature_offsets: kernels must be [E,C,F] with matching shapes");
    Tensor e1 = conv1d_temporal(x, k_theta, stride, dilation);  // [B,E,T',N]
    Tensor e2 = conv1d_temporal(x, k_phi, stride, dilation);
    const int b = e1.shape()[0], e = e1.shape()[1], t = e1.shape()[2], n = e1.shape()[3];

    std::vector<Tensor> frames;
    frames.reserve(static_cast<size_t>(t));
    for (int f = 0; f < t; ++f) {
        Tensor s1 = reshape(slice(e1, 2, f, 1), {b, e, n});  // [B,E,N]
        Tensor s2 = reshape(slice(e2, 2, f, 1), {b, e, n});
        Tensor o = tanh_op(matmul(transpose(s1, 1, 2), s2));  // [B,N,N]
        frames.push_back(reshape(o, {b, 1, n, n}));
    }
    return concat(frames, 1);  // [B,T',N,N]
}

Tensor base_graph_init(int num_nodes, const PairList& pairs, GraphInit mode, Rng& rng) {
    if (mode == GraphInit::physical) return masked_row_graph(num_nodes, pairs);
    Tensor m = Tensor::zeros({num_nodes, num_nodes});
    for (auto [i, j] : pairs) {
        require(i >= 0 && i < num_nodes && j >= 0 && j < num_nodes,
                ErrorCode::index_out_of_range, "base_graph_init: pair outside the graph");
        m.value()[static_cast<size_t>(i) * num_nodes + j] =
            mode == GraphInit::dense ? 1.0 : rng.uniform();
    }
    return m;
}

Tensor combine_graph(const Tensor& m, const Tensor& alpha, const Tensor& offsets,
                     DynamicMode mode) {
    if (mode == DynamicMode::only_m) return m;
    require(offsets.defined(), ErrorCode::invalid_spec,
            "combine_graph: this mode needs offset matrices");
    if (mode == DynamicMode::only_o) return offsets;
    require(m.defined(), ErrorCode::invalid_spec, "combine_graph: base graph missing");
    require(offsets.rank() == m.rank() + 1, ErrorCode::shape_mismatch,
            "combine_graph: offsets must add one batch axis over the base graph");
    if (mode == DynamicMode::m_plus_o) return add_broadcast(offsets, m);
    require(alpha.defined() && alpha.numel() == 1, ErrorCode::invalid_spec,
            "combine_graph: m_plus_alpha_o needs a scalar alpha");
    return add_broadcast(scalar_mul(offsets, alpha), m);
}

}  // namespace poselift
