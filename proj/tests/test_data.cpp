// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "poselift/data.hpp"
#include "poselift/rng.hpp"

using namespace poselift;

namespace {

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

// Independent parent table for the 17-joint skeleton, pelvis-rooted.
const std::array<int, 17> kParents = {-1, 0, 1, 2, 0, 4, 5, 0, 7,
                                      8, 9, 8, 11, 12, 8, 14, 15};

struct TmpDir {
    std::filesystem::path path;
    TmpDir() : path("data_test_tmp") { std::filesystem::create_directories(path); }
    ~TmpDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Recover the camera-frame root position from one frame of pixels plus the
// root-relative 3D pose by solving the pinhole equations in least squares,
// then return the worst reprojection error in pixels.
double reprojection_residual(const std::vector<double>& px, const std::vector<double>& rel,
                             double f, double cx, double cy, std::array<double, 3>* root_out) {
    double ata[9] = {0}, atb[3] = {0};
    auto add_row = [&](const std::array<double, 3>& a, double b) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) ata[i * 3 + j] += a[i] * a[j];
            atb[i] += a[i] * b;
        }
    };
    const int n = static_cast<int>(rel.size() / 3);
    for (int j = 0; j < n; ++j) {
        double du = px[j * 2] - cx, dv = px[j * 2 + 1] - cy;
        add_row({-f, 0.0, du}, f * rel[j * 3] - du * rel[j * 3 + 2]);
        add_row({0.0, f, dv}, -f * rel[j * 3 + 1] - dv * rel[j * 3 + 2]);
    }
    auto det3 = [](const double m[9]) {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    };
    double d = det3(ata);
    REQUIRE(std::abs(d) > 1e-9);
    std::array<double, 3> root;
    for (int col = 0; col < 3; ++col) {
        double m[9];
        std::copy(ata, ata + 9, m);
        for (int r = 0; r < 3; ++r) m[r * 3 + col] = atb[r];
        root[col] = det3(m) / d;
    }
    if (root_out) *root_out = root;
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        double x = root[0] + rel[j * 3], y = root[1] + rel[j * 3 + 1],
               z = root[2] + rel[j * 3 + 2];
        double u = cx + f * x / z, v = cy - f * y / z;
        worst = std::max({worst, std::abs(u - px[j * 2]), std::abs(v - px[j * 2 + 1])});
    }
    return worst;
}

}  // namespace

TEST_CASE("normalize_2d maps pixel space onto [-1, 1]") {
    std::vector<double> pts = {0, 0, 500, 250, 1000, 500};
    normalize_2d(pts, 1000, 500);
    CHECK(pts == std::vector<double>{-1, -1, 0, 0, 1, 1});

    std::vector<double> bad = {1, 2, 3};
    CHECK(throws_code(ErrorCode::shape_mismatch, [&] { normalize_2d(bad, 10, 10); }));
    std::vector<double> ok = {1, 2};
    CHECK(throws_code(ErrorCode::invalid_image_size, [&] { normalize_2d(ok, 0, 10); }));
    CHECK(throws_code(ErrorCode::invalid_image_size, [&] { normalize_2d(ok, 10, -5); }));
}

TEST_CASE("horizontal pixel mirror becomes negation after normalizing") {
    const int w = 640, h = 480;
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        double x = rng.uniform(0, w), y = rng.uniform(0, h);
        std::vector<double> a = {x, y};
        std::vector<double> b = {w - x, y};
        normalize_2d(a, w, h);
        normalize_2d(b, w, h);
        CHECK(b[0] == doctest::Approx(-a[0]).epsilon(1e-12).scale(1.0));
        CHECK(b[1] == a[1]);
    }
}

TEST_CASE("bone length table") {
    const auto& lengths = human17_bone_lengths();
    CHECK(lengths.size() == 16);
    for (double l : lengths) {
        CHECK(l > 0.05);
        CHECK(l < 0.6);
    }
    CHECK(human17_mean_bone_length() ==
          doctest::Approx((2 * (0.13 + 0.45 + 0.42) + 0.23 + 0.25 + 0.12 + 0.12 +
                           2 * (0.18 + 0.28 + 0.25)) /
                          16.0)
              .epsilon(1e-12));
}

TEST_CASE("generated poses keep exact bone lengths") {
    SynthConfig cfg;
    cfg.num_samples = 24;
    cfg.seed = 7;
    PoseDataset ds = synth_dataset(cfg);
    REQUIRE(ds.num_joints == 17);
    REQUIRE(ds.samples.size() == 24);

    SkeletonTopology topo = human17_topology();
    const auto& lengths = human17_bone_lengths();
    for (const PoseSample& s : ds.samples) {
        REQUIRE(s.joints3d.size() == 17 * 3);
        REQUIRE(s.joints2d.size() == 17 * 2);
        // Root-relative: the pelvis sits at the origin.
        CHECK(s.joints3d[0] == 0.0);
        CHECK(s.joints3d[1] == 0.0);
        CHECK(s.joints3d[2] == 0.0);
        for (size_t e = 0; e < topo.edges.size(); ++e) {
            auto [a, b] = topo.edges[e];
            int child = kParents[static_cast<size_t>(b)] == a ? b : a;
            int par = kParents[static_cast<size_t>(child)];
            double dx = s.joints3d[child * 3] - s.joints3d[par * 3];
            double dy = s.joints3d[child * 3 + 1] - s.joints3d[par * 3 + 1];
            double dz = s.joints3d[child * 3 + 2] - s.joints3d[par * 3 + 2];
            CHECK(std::sqrt(dx * dx + dy * dy + dz * dz) ==
                  doctest::Approx(lengths[e]).epsilon(1e-9));
        }
    }
}

TEST_CASE("generated 2D and 3D agree under the pinhole model") {
    SynthConfig cfg;
    cfg.num_samples = 16;
    cfg.seed = 11;
    PoseDataset ds = synth_dataset(cfg);
    const double cx = cfg.image_width / 2.0, cy = cfg.image_height / 2.0;
    for (const PoseSample& s : ds.samples) {
        std::array<double, 3> root;
        double worst = reprojection_residual(s.joints2d, s.joints3d, cfg.focal_px, cx, cy,
                                             &root);
        CHECK(worst < 1e-6);
        // The recovered camera-frame root must sit in front of the camera at
        // the staged distance, with every joint at positive depth.
        CHECK(root[2] > 2.0);
        CHECK(root[2] < 6.0);
        for (int j = 0; j < 17; ++j) CHECK(root[2] + s.joints3d[j * 3 + 2] > 0.5);
    }
}

TEST_CASE("generator is deterministic in the seed") {
    SynthConfig cfg;
    cfg.num_samples = 6;
    cfg.seed = 99;
    PoseDataset a = synth_dataset(cfg);
    PoseDataset b = synth_dataset(cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].joints2d == b.samples[i].joints2d);
        CHECK(a.samples[i].joints3d == b.samples[i].joints3d);
    }
    cfg.seed = 100;
    PoseDataset c = synth_dataset(cfg);
    CHECK(a.samples[0].joints3d != c.samples[0].joints3d);
}

TEST_CASE("poses vary across samples") {
    SynthConfig cfg;
    cfg.num_samples = 32;
    cfg.seed = 3;
    PoseDataset ds = synth_dataset(cfg);
    // Spread of the right wrist across samples should be well away from zero.
    double mean[3] = {0, 0, 0}, var[3] = {0, 0, 0};
    for (const auto& s : ds.samples)
        for (int d = 0; d < 3; ++d) mean[d] += s.joints3d[16 * 3 + d] / 32.0;
    for (const auto& s : ds.samples)
        for (int d = 0; d < 3; ++d) {
            double diff = s.joints3d[16 * 3 + d] - mean[d];
            var[d] += diff * diff / 32.0;
        }
    CHECK(std::sqrt(var[0] + var[1] + var[2]) > 0.1);
}

TEST_CASE("sequences are smooth and centered") {
    SynthConfig cfg;
    cfg.num_samples = 4;
    cfg.frames = 9;
    cfg.seed = 21;
    PoseDataset ds = synth_dataset(cfg);
    const double cx = cfg.image_width / 2.0, cy = cfg.image_height / 2.0;
    for (const PoseSample& s : ds.samples) {
        REQUIRE(s.frames == 9);
        REQUIRE(s.joints2d.size() == 9 * 17 * 2);
        REQUIRE(s.joints3d.size() == 17 * 3);
        double total_motion = 0.0;
        for (int t = 1; t < 9; ++t)
            for (int j = 0; j < 17; ++j) {
                double du = s.joints2d[(t * 17 + j) * 2] - s.joints2d[((t - 1) * 17 + j) * 2];
                double dv = s.joints2d[(t * 17 + j) * 2 + 1] -
                            s.joints2d[((t - 1) * 17 + j) * 2 + 1];
                double step = std::sqrt(du * du + dv * dv);
                CHECK(step < 220.0);  // no teleporting between frames
                total_motion += step;
            }
        CHECK(total_motion > 1.0);  // but the pose does move

        // The 3D target matches the center frame's pixels, not frame zero's.
        std::vector<double> center_px(s.joints2d.begin() + 4 * 17 * 2,
                                      s.joints2d.begin() + 5 * 17 * 2);
        CHECK(reprojection_residual(center_px, s.joints3d, cfg.focal_px, cx, cy, nullptr) <
              1e-6);
        std::vector<double> first_px(s.joints2d.begin(), s.joints2d.begin() + 17 * 2);
        CHECK(reprojection_residual(first_px, s.joints3d, cfg.focal_px, cx, cy, nullptr) >
              1e-3);
    }
}

TEST_CASE("dataset JSONL round trip preserves every double") {
    TmpDir tmp;
    SynthConfig cfg;
    cfg.num_samples = 5;
    cfg.frames = 3;
    cfg.seed = 31;
    PoseDataset ds = synth_dataset(cfg);
    std::string path = tmp.file("round.jsonl");
    save_dataset_jsonl(ds, path);
    PoseDataset back = load_dataset_jsonl(path);
    CHECK(back.num_joints == ds.num_joints);
    CHECK(back.image_width == ds.image_width);
    CHECK(back.image_height == ds.image_height);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].frames == ds.samples[i].frames);
        CHECK(back.samples[i].joints2d == ds.samples[i].joints2d);
        CHECK(back.samples[i].joints3d == ds.samples[i].joints3d);
    }
}

TEST_CASE("dataset loader rejects malformed input") {
    TmpDir tmp;
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(tmp.file(name));
        out << text;
        return tmp.file(name);
    };

    CHECK(throws_code(ErrorCode::io_failure,
                      [&] { load_dataset_jsonl(tmp.file("missing.jsonl")); }));
    CHECK(throws_code(ErrorCode::parse_error,
                      [&] { load_dataset_jsonl(write("empty.jsonl", "")); }));
    CHECK(throws_code(ErrorCode::parse_error,
                      [&] { load_dataset_jsonl(write("garbage.jsonl", "not json\n")); }));
    CHECK(throws_code(ErrorCode::parse_error, [&] {
        load_dataset_jsonl(write("noschema.jsonl", R"({"num_joints":17})" "\n"));
    }));
    CHECK(throws_code(ErrorCode::version_mismatch, [&] {
        load_dataset_jsonl(write(
            "badschema.jsonl",
            R"({"schema":"poselift.dataset.v0","num_joints":17,"image_width":10,"image_height":10})" "\n"));
    }));
    std::string good_header =
        R"({"schema":"poselift.dataset.v1","num_joints":2,"image_width":10,"image_height":10})";
    CHECK(throws_code(ErrorCode::empty_dataset, [&] {
        load_dataset_jsonl(write("nosamples.jsonl", good_header + "\n"));
    }));
    CHECK(throws_code(ErrorCode::joint_count_mismatch, [&] {
        load_dataset_jsonl(write("badcount.jsonl",
                                 good_header + "\n" +
                                     R"({"joints2d":[1,2],"joints3d":[1,2,3,4,5,6]})" "\n"));
    }));
    CHECK(throws_code(ErrorCode::joint_count_mismatch, [&] {
        load_dataset_jsonl(
            write("bad3d.jsonl", good_header + "\n" +
                                     R"({"joints2d":[1,2,3,4],"joints3d":[1,2,3]})" "\n"));
    }));
    // A correct two-joint file loads.
    PoseDataset ok = load_dataset_jsonl(
        write("ok.jsonl", good_header + "\n" +
                              R"({"joints2d":[1,2,3,4],"joints3d":[1,2,3,4,5,6]})" "\n"));
    CHECK(ok.samples.size() == 1);
    CHECK(ok.samples[0].frames == 1);
}

TEST_CASE("generator validation") {
    SynthConfig cfg;
    cfg.num_samples = 0;
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { synth_dataset(cfg); }));
    cfg.num_samples = 1;
    cfg.frames = 0;
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { synth_dataset(cfg); }));
    cfg.frames = 1;
    cfg.image_width = 1;
    CHECK(throws_code(ErrorCode::invalid_image_size, [&] { synth_dataset(cfg); }));
    cfg.image_width = 100;
    cfg.focal_px = 0.0;
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { synth_dataset(cfg); }));
    cfg.focal_px = 1100.0;
    cfg.noise_std_2d = -1.0;
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { synth_dataset(cfg); }));
}

TEST_CASE("detection noise perturbs pixels but not the 3D truth") {
    SynthConfig clean;
    clean.num_samples = 64;
    clean.seed = 33;
    SynthConfig noisy = clean;
    noisy.noise_std_2d = 2.0;

    PoseDataset a = synth_dataset(clean);
    PoseDataset b = synth_dataset(noisy);
    REQUIRE(a.samples.size() == b.samples.size());

    double sum = 0.0, sq = 0.0;
    long count = 0;
    for (size_t s = 0; s < a.samples.size(); ++s) {
        CHECK(a.samples[s].joints3d == b.samples[s].joints3d);
        for (size_t i = 0; i < a.samples[s].joints2d.size(); ++i) {
            double d = b.samples[s].joints2d[i] - a.samples[s].joints2d[i];
            sum += d;
            sq += d * d;
            ++count;
        }
    }
    double mean = sum / count;
    double std = std::sqrt(sq / count - mean * mean);
    CHECK(std::abs(mean) < 0.15);       // 64 * 17 * 2 draws of std 2
    CHECK(std == doctest::Approx(2.0).epsilon(0.05));
}
