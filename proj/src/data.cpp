// SPDX-License-Identifier: Apache-2.0
#include "poselift/data.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "poselift/rng.hpp"

namespace poselift {

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return c;
}

Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
    return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
            a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

Mat3 axis_angle(Vec3 axis, double angle) {
    double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (n == 0.0) return {1, 0, 0, 0, 1, 0, 0, 0, 1};
    double x = axis[0] / n, y = axis[1] / n, z = axis[2] / n;
    double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
    return {c + x * x * v,     x * y * v - z * s, x * z * v + y * s,
            y * x * v + z * s, c + y * y * v,     y * z * v - x * s,
            z * x * v - y * s, z * y * v + x * s, c + z * z * v};
}

// T-pose offsets of each joint in its parent's frame (y up, meters). The
// parent order mirrors human17_topology(); lengths are the edge bone lengths.
const std::array<Vec3, 17> kOffsets = {{
    {0, 0, 0},         // 0 pelvis (root)
    {-0.13, 0, 0},     // 1 right hip
    {0, -0.45, 0},     // 2 right knee
    {0, -0.42, 0},     // 3 right ankle
    {0.13, 0, 0},      // 4 left hip
    {0, -0.45, 0},     // 5 left knee
    {0, -0.42, 0},     // 6 left ankle
    {0, 0.23, 0},      // 7 spine
    {0, 0.25, 0},      // 8 neck
    {0, 0.12, 0},      // 9 head
    {0, 0.12, 0},      // 10 head top
    {0.18, 0, 0},      // 11 left shoulder
    {0.28, 0, 0},      // 12 left elbow
    {0.25, 0, 0},      // 13 left wrist
    {-0.18, 0, 0},     // 14 right shoulder
    {-0.28, 0, 0},     // 15 right elbow
    {-0.25, 0, 0},     // 16 right wrist
}};

// Largest local joint angle by joint, radians.
const std::array<double, 17> kAngleRange = {
    0.0,            // pelvis: covered by the global rotation
    0.9, 1.1, 0.5,  // right leg
    0.9, 1.1, 0.5,  // left leg
    0.25, 0.25, 0.2, 0.1,  // spine, neck, head, head top
    0.9, 1.1, 0.5,  // left arm
    0.9, 1.1, 0.5,  // right arm
};

std::vector<int> topology_parents(const SkeletonTopology& topo) {
    std::vector<std::vector<int>> adj(topo.num_nodes);
    for (auto [a, b] : topo.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> parent(topo.num_nodes, -1);
    std::vector<int> order;
    order.push_back(topo.root);
    std::vector<bool> seen(topo.num_nodes, false);
    seen[topo.root] = true;
    for (size_t head = 0; head < order.size(); ++head) {
        int u = order[head];
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                parent[v] = u;
                order.push_back(v);
            }
    }
    return parent;
}

}  // namespace

const std::vector<double>& human17_bone_lengths() {
    static const std::vector<double> lengths = [] {
        SkeletonTopology topo = human17_topology();
        std::vector<int> parent = topology_parents(topo);
        std::vector<double> out;
        for (auto [a, b] : topo.edges) {
            int child = parent[b] == a ? b : a;
            const Vec3& o = kOffsets[static_cast<size_t>(child)];
            out.push_back(std::sqrt(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]));
        }
        return out;
    }();
    return lengths;
}

double human17_mean_bone_length() {
    const auto& l = human17_bone_lengths();
    return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
}

void normalize_2d(std::vector<double>& joints2d, int image_width, int image_height) {
    require(image_width >= 1 && image_height >= 1, ErrorCode::invalid_image_size,
            "normalize_2d: image size must be positive");
    require(joints2d.size() % 2 == 0, ErrorCode::shape_mismatch,
            "normalize_2d: coordinate buffer must hold (x, y) pairs");
    for (size_t i = 0; i < joints2d.size(); i += 2) {
        joints2d[i] = 2.0 * joints2d[i] / image_width - 1.0;
        joints2d[i + 1] = 2.0 * joints2d[i + 1] / image_height - 1.0;
    }
}

PoseDataset synth_dataset(const SynthConfig& cfg) {
    require(cfg.num_samples >= 1, ErrorCode::invalid_spec, "synth: need at least one sample");
    require(cfg.frames >= 1, ErrorCode::invalid_spec, "synth: frames must be positive");
    require(cfg.image_width >= 2 && cfg.image_height >= 2, ErrorCode::invalid_image_size,
            "synth: image too small");
    require(cfg.focal_px > 0.0, ErrorCode::invalid_spec, "synth: focal must be positive");
    require(cfg.noise_std_2d >= 0.0, ErrorCode::invalid_spec,
            "synth: noise level must be non-negative");

    SkeletonTopology topo = human17_topology();
    const int n = topo.num_nodes;
    std::vector<int> parent = topology_parents(topo);
    // Children appear after their parent in this order.
    std::vector<int> order;
    order.push_back(topo.root);
    for (size_t head = 0; head < order.size(); ++head)
        for (int j = 0; j < n; ++j)
            if (parent[j] == order[head]) order.push_back(j);

    PoseDataset ds;
    ds.num_joints = n;
    ds.image_width = cfg.image_width;
    ds.image_height = cfg.image_height;
    const double cx = cfg.image_width / 2.0, cy = cfg.image_height / 2.0;

    for (int s = 0; s < cfg.num_samples; ++s) {
        Rng rng(derive_seed(cfg.seed, "sample:" + std::to_string(s)));

        // Static articulation plus, for sequences, a smooth oscillation.
        std::array<Vec3, 17> axis;
        std::array<double, 17> theta0, amp, freq, phase;
        for (int j = 0; j < n; ++j) {
            axis[j] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            theta0[j] = rng.uniform(-kAngleRange[j], kAngleRange[j]);
            amp[j] = cfg.frames > 1 ? rng.uniform(0.0, 0.35) : 0.0;
            freq[j] = 1.0 + static_cast<double>(rng.below(2));
            phase[j] = rng.uniform(0.0, 2.0 * M_PI);
        }
        double yaw = rng.uniform(-M_PI, M_PI);
        double pitch = rng.uniform(-0.35, 0.35);
        double roll = rng.uniform(-0.25, 0.25);
        double yaw_rate = cfg.frames > 1 ? rng.uniform(-0.4, 0.4) : 0.0;
        Vec3 root = {rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), rng.uniform(3.2, 4.8)};
        Vec3 drift = {0, 0, 0};
        if (cfg.frames > 1)
            drift = {rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.1), rng.uniform(-0.2, 0.2)};

        const int center = cfg.frames / 2;
        PoseSample sample;
        sample.frames = cfg.frames;
        sample.joints2d.resize(static_cast<size_t>(cfg.frames) * n * 2);

        for (int t = 0; t < cfg.frames; ++t) {
            double rel = cfg.frames > 1
                             ? (t - center) / static_cast<double>(cfg.frames)
                             : 0.0;
            Mat3 rg = mat3_mul(axis_angle({0, 1, 0}, yaw + yaw_rate * rel),
                               mat3_mul(axis_angle({1, 0, 0}, pitch),
                                        axis_angle({0, 0, 1}, roll)));
            std::array<Vec3, 17> pos;
            std::array<Mat3, 17> rot;
            pos[static_cast<size_t>(topo.root)] = {root[0] + drift[0] * rel,
                                                   root[1] + drift[1] * rel,
                                                   root[2] + drift[2] * rel};
            rot[static_cast<size_t>(topo.root)] = rg;
            for (int j : order) {
                if (j == topo.root) continue;
                int p = parent[j];
                double theta = theta0[j] +
                               amp[j] * std::sin(2.0 * M_PI * freq[j] * t / cfg.frames +
                                                 phase[j]);
                rot[j] = mat3_mul(rot[p], axis_angle(axis[j], theta));
                Vec3 off = mat3_apply(rot[p], kOffsets[static_cast<size_t>(j)]);
                pos[j] = {pos[p][0] + off[0], pos[p][1] + off[1], pos[p][2] + off[2]};
            }
            for (int j = 0; j < n; ++j) {
                // Pinhole projection; the image y axis points down.
                double u = cx + cfg.focal_px * pos[j][0] / pos[j][2];
                double v = cy - cfg.focal_px * pos[j][1] / pos[j][2];
                if (cfg.noise_std_2d > 0.0) {
                    u += rng.normal(0.0, cfg.noise_std_2d);
                    v += rng.normal(0.0, cfg.noise_std_2d);
                }
                sample.joints2d[(static_cast<size_t>(t) * n + j) * 2 + 0] = u;
                sample.joints2d[(static_cast<size_t>(t) * n + j) * 2 + 1] = v;
            }
            if (t == center) {
                sample.joints3d.resize(static_cast<size_t>(n) * 3);
                for (int j = 0; j < n; ++j)
                    for (int d = 0; d < 3; ++d)
                        sample.joints3d[j * 3 + d] = pos[j][d] - pos[topo.root][d];
            }
        }
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

void save_dataset_jsonl(const PoseDataset& ds, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io_failure, "cannot open '" + path + "' for writing");
    nlohmann::json header = {{"schema", kDatasetSchema},
                             {"num_joints", ds.num_joints},
                             {"image_width", ds.image_width},
                             {"image_height", ds.image_height}};
    out << header.dump() << "\n";
    for (const PoseSample& s : ds.samples) {
        nlohmann::json line = {{"frames", s.frames},
                               {"joints2d", s.joints2d},
                               {"joints3d", s.joints3d}};
        out << line.dump() << "\n";
    }
    require(out.good(), ErrorCode::io_failure, "write to '" + path + "' failed");
}

PoseDataset load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_failure, "cannot open '" + path + "'");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error,
            "dataset '" + path + "' is empty");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, "dataset header: " + std::string(e.what()));
    }
    require(header.contains("schema"), ErrorCode::parse_error,
            "dataset header has no schema tag");
    require(header["schema"] == kDatasetSchema, ErrorCode::version_mismatch,
            "dataset schema is '" + header["schema"].get<std::string>() + "', expected '" +
                kDatasetSchema + "'");

    PoseDataset ds;
    try {
        ds.num_joints = header.at("num_joints").get<int>();
        ds.image_width = header.at("image_width").get<int>();
        ds.image_height = header.at("image_height").get<int>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, "dataset header: " + std::string(e.what()));
    }
    require(ds.num_joints >= 1, ErrorCode::parse_error, "dataset header: bad joint count");
    require(ds.image_width >= 1 && ds.image_height >= 1, ErrorCode::invalid_image_size,
            "dataset header: bad image size");

    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        PoseSample s;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            s.frames = j.value("frames", 1);
            s.joints2d = j.at("joints2d").get<std::vector<double>>();
            s.joints3d = j.at("joints3d").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse_error,
                 "dataset line " + std::to_string(lineno) + ": " + std::string(e.what()));
        }
        require(s.frames >= 1, ErrorCode::parse_error,
                "dataset line " + std::to_string(lineno) + ": bad frame count");
        require(s.joints2d.size() ==
                    static_cast<size_t>(s.frames) * ds.num_joints * 2,
                ErrorCode::joint_count_mismatch,
                "dataset line " + std::to_string(lineno) + ": joints2d has " +
                    std::to_string(s.joints2d.size()) + " values");
        require(s.joints3d.size() == static_cast<size_t>(ds.num_joints) * 3,
                ErrorCode::joint_count_mismatch,
                "dataset line " + std::to_string(lineno) + ": joints3d has " +
                    std::to_string(s.joints3d.size()) + " values");
        ds.samples.push_back(std::move(s));
    }
    require(!ds.samples.empty(), ErrorCode::empty_dataset,
            "dataset '" + path + "' has a header but no samples");
    return ds;
}

}  // namespace poselift
