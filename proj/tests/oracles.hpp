// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations used only by tests. Each one is an
// independent re-derivation of a library result, written the dumbest way
// possible so disagreements point at the library.
#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "poselift/rng.hpp"

namespace oracles {

// All-pairs shortest paths, O(n^3), no BFS shared with the library.
inline std::vector<int> floyd_warshall(int n, const std::vector<std::pair<int, int>>& edges) {
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<int> d(static_cast<size_t>(n) * n, inf);
    for (int i = 0; i < n; ++i) d[static_cast<size_t>(i) * n + i] = 0;
    for (auto [a, b] : edges) {
        d[static_cast<size_t>(a) * n + b] = 1;
        d[static_cast<size_t>(b) * n + a] = 1;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (d[static_cast<size_t>(i) * n + k] + d[static_cast<size_t>(k) * n + j] <
                    d[static_cast<size_t>(i) * n + j])
                    d[static_cast<size_t>(i) * n + j] =
                        d[static_cast<size_t>(i) * n + k] + d[static_cast<size_t>(k) * n + j];
    return d;
}

// Random connected undirected graph: a random spanning tree plus a few
// extra edges, no duplicates or self loops.
inline std::vector<std::pair<int, int>> random_connected_edges(int n, poselift::Rng& rng) {
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<char>> have(n, std::vector<char>(n, 0));
    for (int v = 1; v < n; ++v) {
        int u = static_cast<int>(rng.below(static_cast<uint64_t>(v)));
        edges.emplace_back(u, v);
        have[u][v] = have[v][u] = 1;
    }
    int extras = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    for (int e = 0; e < extras; ++e) {
        int a = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        int b = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        if (a == b || have[a][b]) continue;
        edges.emplace_back(a, b);
        have[a][b] = have[b][a] = 1;
    }
    return edges;
}

// c = a @ b for row-major (m,k) x (k,n).
inline std::vector<double> naive_matmul(const std::vector<double>& a,
                                        const std::vector<double>& b, int m, int k, int n) {
    std::vector<double> c(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p)
                acc += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * n + j];
            c[static_cast<size_t>(i) * n + j] = acc;
        }
    return c;
}

// Reference 1D conv along the frame axis of an explicit zero-padded copy.
// x is [C, T, N] flattened, kernel [C_out, C, F]; output [C_out, T', N] with
// T' = ceil(T / stride).
inline std::vector<double> naive_conv1d(const std::vector<double>& x, int c, int t, int n,
                                        const std::vector<double>& kernel, int c_out, int f,
                                        int stride, int dilation) {
    const int span = (f - 1) * dilation + 1;
    const int t_out = (t + stride - 1) / stride;
    const int total_pad = std::max(0, (t_out - 1) * stride + span - t);
    const int pad_left = total_pad / 2;
    const int t_padded = t + total_pad;

    std::vector<double> padded(static_cast<size_t>(c) * t_padded * n, 0.0);
    for (int ci = 0; ci < c; ++ci)
        for (int ti = 0; ti < t; ++ti)
            for (int ni = 0; ni < n; ++ni)
                padded[(static_cast<size_t>(ci) * t_padded + ti + pad_left) * n + ni] =
                    x[(static_cast<size_t>(ci) * t + ti) * n + ni];

    std::vector<double> y(static_cast<size_t>(c_out) * t_out * n, 0.0);
    for (int co = 0; co < c_out; ++co)
        for (int o = 0; o < t_out; ++o)
            for (int ni = 0; ni < n; ++ni) {
                double acc = 0.0;
                for (int ci = 0; ci < c; ++ci)
                    for (int ff = 0; ff < f; ++ff)
                        acc += kernel[(static_cast<size_t>(co) * c + ci) * f + ff] *
                               padded[(static_cast<size_t>(ci) * t_padded + o * stride +
                                       ff * dilation) *
                                          n +
                                      ni];
                y[(static_cast<size_t>(co) * t_out + o) * n + ni] = acc;
            }
    return y;
}

// Rotation matrix about a given axis (Rodrigues formula), row-major 3x3.
inline std::vector<double> rotation_about_axis(double ax, double ay, double az, double angle) {
    double norm = std::sqrt(ax * ax + ay * ay + az * az);
    ax /= norm; ay /= norm; az /= norm;
    double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
    return {c + ax * ax * v,      ax * ay * v - az * s, ax * az * v + ay * s,
            ay * ax * v + az * s, c + ay * ay * v,      ay * az * v - ax * s,
            az * ax * v - ay * s, az * ay * v + ax * s, c + az * az * v};
}

}  // namespace oracles
