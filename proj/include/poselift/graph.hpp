// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "poselift/common.hpp"

namespace poselift {

// Dense square matrix of doubles, row-major. Graph-side code keeps its own
// tiny matrix type so it stays independent of the autodiff tensors.
struct SquareMatrix {
    int n = 0;
    std::vector<double> v;

    SquareMatrix() = default;
    explicit SquareMatrix(int size) : n(size), v(static_cast<size_t>(size) * size, 0.0) {}

    double& at(int i, int j) { return v[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * n + j]; }
};

struct SkeletonTopology {
    int num_nodes = 0;
    std::vector<std::pair<int, int>> edges;
    // (left, right) joint index pairs, used by horizontal flips.
    std::vector<std::pair<int, int>> left_right_pairs;
    int root = 0;
    std::vector<std::string> joint_names;  // optional; empty or size num_nodes
};

// Validates and returns the topology: indices in range, no self loops or
// duplicate edges, connected when viewed as an undirected graph.
SkeletonTopology build_topology(int num_nodes,
                                std::vector<std::pair<int, int>> edges,
                                std::vector<std::pair<int, int>> left_right_pairs,
                                int root,
                                std::vector<std::string> joint_names = {});

// 17-joint human skeleton preset ("human17"): pelvis-rooted kinematic tree
// with legs, spine/neck/head chain and both arms hanging off the neck.
SkeletonTopology human17_topology();

// Look up a named preset. Currently only "human17".
SkeletonTopology topology_preset(const std::string& name);

SkeletonTopology load_topology_json(const std::string& path);
void save_topology_json(const SkeletonTopology& topo, const std::string& path);
std::string topology_to_json(const SkeletonTopology& topo);
SkeletonTopology topology_from_json(const std::string& text);

// Shortest-path distances and per-distance node rings. hop_dist is the full
// N x N distance table; ring(k) is the binary adjacency of pairs at exact
// distance k; short_range(S) covers distance <= S including the diagonal.
struct HopPartition {
    int num_nodes = 0;
    int max_hop = 0;  // largest distance represented (graph diameter by default)
    std::vector<int> hop_dist;  // row-major N x N

    int dist(int i, int j) const { return hop_dist[static_cast<size_t>(i) * num_nodes + j]; }

    SquareMatrix ring(int k) const;
    SquareMatrix short_range(int s) const;
    int ring_pair_count(int k) const;
    int diameter() const;
    // Largest distance from one node to any other.
    int eccentricity(int node) const;
};

// BFS from every node. max_hop <= 0 means "up to the graph diameter".
HopPartition compute_hop_partition(const SkeletonTopology& topo, int max_hop = 0);

enum class NormMode { row, symmetric };

// row: divide each row by its sum. symmetric: D^-1/2 A D^-1/2 with D the
// row-sum degree matrix. Any zero row is an error in both modes.
SquareMatrix normalize_adjacency(const SquareMatrix& a, NormMode mode);

// Same as row normalization except rows that are entirely zero stay zero.
// Hop rings can be empty for peripheral nodes; aggregation over an empty
// ring is an empty sum, so those rows must stay zero rather than fail.
SquareMatrix row_normalize_lenient(const SquareMatrix& a);

}  // namespace poselift
