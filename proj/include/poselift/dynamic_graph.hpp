// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "poselift/layers.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// How a branch's aggregation graph is assembled from the trainable base
// matrix M and the per-sample offset matrix O:
//   m_plus_alpha_o : A = M + alpha * O   (alpha is a trainable scalar)
//   only_m         : A = M
//   only_o         : A = O
//   m_plus_o       : A = M + O
enum class DynamicMode { m_plus_alpha_o, only_m, only_o, m_plus_o };

DynamicMode dynamic_mode_from_string(const std::string& s);
std::string to_string(DynamicMode m);

// Initial values for the trainable base graph M:
//   physical : row-normalized branch support (matches the static graphs)
//   dense    : 1 on every supported entry
//   random   : uniform [0,1) on every supported entry
enum class GraphInit { physical, dense, random };

GraphInit graph_init_from_string(const std::string& s);
std::string to_string(GraphInit m);

// Width of the pairwise embedding used to score node pairs.
int embed_width(int c_in);

// Per-sample pairwise scores from node features:
//   O[b,i,j] = tanh( (x[b,i] @ w_theta) . (x[b,j] @ w_phi) )
// x is [B,N,C]; w_theta and w_phi are [C,E]. Result is [B,N,N] in (-1,1).
Tensor feature_offsets(const Tensor& x, const Tensor& w_theta, const Tensor& w_phi);

// Frame-wise pairwise scores where each embedding also sees neighboring
// frames through a temporal convolution. x is [B,C,T,N]; the kernels are
// [E,C,F] with F odd. Result is [B,T,N,N]: one offset matrix per frame.
Tensor temporal_feature_offsets(const Tensor& x, const Tensor& k_theta,
                                const Tensor& k_phi, int stride = 1, int dilation = 1);

// Initial value matrix for M, zero outside the branch support.
Tensor base_graph_init(int num_nodes, const PairList& pairs, GraphInit mode, Rng& rng);

// Assemble the aggregation graph for one branch. m is [N,N]; offsets is
// [B,N,N] (may be an empty handle for only_m); alpha is a rank-0 scalar
// (used only by m_plus_alpha_o). No renormalization is applied: training is
// free to move row sums away from one.
Tensor combine_graph(const Tensor& m, const Tensor& alpha, const Tensor& offsets,
                     DynamicMode mode);

}  // namespace poselift
