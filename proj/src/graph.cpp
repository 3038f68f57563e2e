// SPDX-License-Identifier: Apache-2.0
#include "poselift/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace poselift {

using nlohmann::json;

SkeletonTopology build_topology(int num_nodes,
                                std::vector<std::pair<int, int>> edges,
                                std::vector<std::pair<int, int>> left_right_pairs,
                                int root,
                                std::vector<std::string> joint_names) {
    require(num_nodes > 0, ErrorCode::invalid_spec, "topology needs at least one node");
    require(!edges.empty(), ErrorCode::invalid_spec, "topology needs a nonempty edge list");
    require(root >= 0 && root < num_nodes, ErrorCode::index_out_of_range,
            "root " + std::to_string(root) + " outside [0, " + std::to_string(num_nodes) + ")");

    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : edges) {
        require(a >= 0 && a < num_nodes && b >= 0 && b < num_nodes,
                ErrorCode::index_out_of_range,
                "edge (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
        require(a != b, ErrorCode::self_loop, "self loop at node " + std::to_string(a));
        auto key = std::minmax(a, b);
        require(seen.insert(key).second, ErrorCode::duplicate_edge,
                "duplicate edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }

    std::set<int> flip_seen;
    for (auto [l, r] : left_right_pairs) {
        require(l >= 0 && l < num_nodes && r >= 0 && r < num_nodes,
                ErrorCode::index_out_of_range, "left/right pair out of range");
        require(l != r, ErrorCode::invalid_spec, "left/right pair maps a joint to itself");
        require(flip_seen.insert(l).second && flip_seen.insert(r).second,
                ErrorCode::invalid_spec, "joint appears in more than one left/right pair");
    }

    if (!joint_names.empty()) {
        require(static_cast<int>(joint_names.size()) == num_nodes, ErrorCode::invalid_spec,
                "joint_names size does not match num_nodes");
    }

    // Connectivity check via BFS from the root.
    std::vector<std::vector<int>> adj(num_nodes);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> visited(num_nodes, 0);
    std::queue<int> q;
    q.push(root);
    visited[root] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int w : adj[u]) {
            if (!visited[w]) {
                visited[w] = 1;
                ++reached;
                q.push(w);
            }
        }
    }
    require(reached == num_nodes, ErrorCode::disconnected_graph,
            "only " + std::to_string(reached) + " of " + std::to_string(num_nodes) +
                " nodes reachable from root");

    SkeletonTopology topo;
    topo.num_nodes = num_nodes;
    topo.edges = std::move(edges);
    topo.left_right_pairs = std::move(left_right_pairs);
    topo.root = root;
    topo.joint_names = std::move(joint_names);
    return topo;
}

SkeletonTopology human17_topology() {
    // Pelvis-rooted tree. Shoulders hang off the neck (joint 8), so from the
    // right shoulder the hop-1 ring is {right elbow, neck} and hop-2 is
    // {right wrist, head, left shoulder, spine}; the furthest node from a
    // shoulder sits 6 hops away (the opposite ankle).
    std::vector<std::string> names = {
        "pelvis",     "hip_r",   "knee_r",     "ankle_r", "hip_l",      "knee_l",
        "ankle_l",    "spine",   "neck",       "head",    "head_top",   "shoulder_l",
        "elbow_l",    "wrist_l", "shoulder_r", "elbow_r", "wrist_r"};
    std::vector<std::pair<int, int>> edges = {
        {0, 1},  {1, 2},  {2, 3},    // right leg
        {0, 4},  {4, 5},  {5, 6},    // left leg
        {0, 7},  {7, 8},             // spine chain
        {8, 9},  {9, 10},            // head chain
        {8, 11}, {11, 12}, {12, 13}, // left arm
        {8, 14}, {14, 15}, {15, 16}, // right arm
    };
    std::vector<std::pair<int, int>> lr = {
        {4, 1}, {5, 2}, {6, 3}, {11, 14}, {12, 15}, {13, 16}};
    return build_topology(17, std::move(edges), std::move(lr), 0, std::move(names));
}

SkeletonTopology topology_preset(const std::string& name) {
    if (name == "human17") return human17_topology();
    fail(ErrorCode::invalid_spec, "unknown topology preset '" + name + "'");
}

std::string topology_to_json(const SkeletonTopology& topo) {
    json j;
    j["num_nodes"] = topo.num_nodes;
    j["edges"] = json::array();
    for (auto [a, b] : topo.edges) j["edges"].push_back({a, b});
    j["left_right_pairs"] = json::array();
    for (auto [l, r] : topo.left_right_pairs) j["left_right_pairs"].push_back({l, r});
    j["root"] = topo.root;
    if (!topo.joint_names.empty()) j["joint_names"] = topo.joint_names;
    return j.dump(2);
}

SkeletonTopology topology_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, std::string("topology JSON: ") + e.what());
    }
    try {
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        std::vector<std::pair<int, int>> lr;
        if (j.contains("left_right_pairs"))
            for (const auto& p : j["left_right_pairs"]) lr.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        std::vector<std::string> names;
        if (j.contains("joint_names")) names = j["joint_names"].get<std::vector<std::string>>();
        return build_topology(j.at("num_nodes").get<int>(), std::move(edges), std::move(lr),
                              j.value("root", 0), std::move(names));
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, std::string("topology JSON fields: ") + e.what());
    }
}

SkeletonTopology load_topology_json(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_failure, "cannot open topology file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return topology_from_json(ss.str());
}

void save_topology_json(const SkeletonTopology& topo, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io_failure, "cannot write topology file '" + path + "'");
    out << topology_to_json(topo) << "\n";
    require(out.good(), ErrorCode::io_failure, "write failed for '" + path + "'");
}

HopPartition compute_hop_partition(const SkeletonTopology& topo, int max_hop) {
    const int n = topo.num_nodes;
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : topo.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }

    HopPartition part;
    part.num_nodes = n;
    part.hop_dist.assign(static_cast<size_t>(n) * n, -1);

    int diameter = 0;
    for (int s = 0; s < n; ++s) {
        std::queue<int> q;
        q.push(s);
        part.hop_dist[static_cast<size_t>(s) * n + s] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            int du = part.hop_dist[static_cast<size_t>(s) * n + u];
            diameter = std::max(diameter, du);
            for (int w : adj[u]) {
                int& dw = part.hop_dist[static_cast<size_t>(s) * n + w];
                if (dw < 0) {
                    dw = du + 1;
                    q.push(w);
                }
            }
        }
    }
    // Topology is validated connected, so every distance is filled in.
    part.max_hop = max_hop > 0 ? max_hop : diameter;
    require(part.max_hop >= 1, ErrorCode::invalid_hop_range, "max_hop must be >= 1");
    return part;
}

SquareMatrix HopPartition::ring(int k) const {
    require(k >= 1 && k <= max_hop, ErrorCode::invalid_hop_range,
            "ring index " + std::to_string(k) + " outside [1, " + std::to_string(max_hop) + "]");
    SquareMatrix m(num_nodes);
    for (int i = 0; i < num_nodes; ++i)
        for (int j = 0; j < num_nodes; ++j)
            if (dist(i, j) == k) m.at(i, j) = 1.0;
    return m;
}

SquareMatrix HopPartition::short_range(int s) const {
    require(s >= 1 && s <= max_hop, ErrorCode::invalid_hop_range,
            "short range " + std::to_string(s) + " outside [1, " + std::to_string(max_hop) + "]");
    SquareMatrix m(num_nodes);
    for (int i = 0; i < num_nodes; ++i)
        for (int j = 0; j < num_nodes; ++j)
            if (dist(i, j) <= s) m.at(i, j) = 1.0;
    return m;
}

int HopPartition::ring_pair_count(int k) const {
    int count = 0;
    for (int i = 0; i < num_nodes; ++i)
        for (int j = 0; j < num_nodes; ++j)
            if (dist(i, j) == k) ++count;
    return count;
}

int HopPartition::diameter() const {
    int d = 0;
    for (int v : hop_dist) d = std::max(d, v);
    return d;
}

int HopPartition::eccentricity(int node) const {
    require(node >= 0 && node < num_nodes, ErrorCode::index_out_of_range, "node out of range");
    int d = 0;
    for (int j = 0; j < num_nodes; ++j) d = std::max(d, dist(node, j));
    return d;
}

SquareMatrix normalize_adjacency(const SquareMatrix& a, NormMode mode) {
    const int n = a.n;
    std::vector<double> degree(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += a.at(i, j);
        require(sum != 0.0, ErrorCode::zero_row,
                "row " + std::to_string(i) + " has no nonzero entries");
        degree[i] = sum;
    }
    SquareMatrix out(n);
    if (mode == NormMode::row) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) / degree[i];
    } else {
        for (int i = 0; i < n; ++i) {
            double di = 1.0 / std::sqrt(degree[i]);
            for (int j = 0; j < n; ++j)
                out.at(i, j) = a.at(i, j) * di / std::sqrt(degree[j]);
        }
    }
    return out;
}

SquareMatrix row_normalize_lenient(const SquareMatrix& a) {
    const int n = a.n;
    SquareMatrix out(n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += a.at(i, j);
        if (sum == 0.0) continue;
        for (int j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) / sum;
    }
    return out;
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::shape_mismatch: return "ShapeMismatch";
        case ErrorCode::axis_out_of_range: return "AxisOutOfRange";
        case ErrorCode::not_scalar: return "NotScalar";
        case ErrorCode::detached_from_tape: return "DetachedFromTape";
        case ErrorCode::batch_too_small: return "BatchTooSmall";
        case ErrorCode::invalid_probability: return "InvalidProbability";
        case ErrorCode::kernel_too_large: return "KernelTooLarge";
        case ErrorCode::missing_pair_weight: return "MissingPairWeight";
        case ErrorCode::index_out_of_range: return "IndexOutOfRange";
        case ErrorCode::duplicate_edge: return "DuplicateEdge";
        case ErrorCode::self_loop: return "SelfLoop";
        case ErrorCode::disconnected_graph: return "DisconnectedGraph";
        case ErrorCode::zero_row: return "ZeroRow";
        case ErrorCode::invalid_hop_range: return "InvalidHopRange";
        case ErrorCode::invalid_ratio: return "InvalidRatio";
        case ErrorCode::invalid_spec: return "InvalidSpec";
        case ErrorCode::degenerate_configuration: return "DegenerateConfiguration";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::joint_count_mismatch: return "JointCountMismatch";
        case ErrorCode::invalid_image_size: return "InvalidImageSize";
        case ErrorCode::empty_dataset: return "EmptyDataset";
        case ErrorCode::config_invalid: return "ConfigInvalid";
        case ErrorCode::io_failure: return "IoFailure";
        case ErrorCode::shape_conflict: return "ShapeConflict";
        case ErrorCode::version_mismatch: return "VersionMismatch";
    }
    return "UnknownError";
}

}  // namespace poselift
