// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "poselift/metrics.hpp"
#include "poselift/rng.hpp"
#include "oracles.hpp"

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

std::vector<double> random_pose(int joints, Rng& rng, double scale = 1.0) {
    std::vector<double> p(static_cast<size_t>(joints) * 3);
    for (double& v : p) v = rng.uniform(-scale, scale);
    return p;
}

std::vector<double> apply_similarity(const std::vector<double>& pose,
                                     const std::vector<double>& rot, double scale,
                                     double tx, double ty, double tz) {
    std::vector<double> out(pose.size());
    for (size_t j = 0; j + 2 < pose.size(); j += 3) {
        for (int r = 0; r < 3; ++r)
            out[j + r] = scale * (rot[r * 3 + 0] * pose[j] + rot[r * 3 + 1] * pose[j + 1] +
                                  rot[r * 3 + 2] * pose[j + 2]);
        out[j + 0] += tx;
        out[j + 1] += ty;
        out[j + 2] += tz;
    }
    return out;
}

double det3_of(const std::array<double, 9>& a) {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
}

}  // namespace

TEST_CASE("symmetric 3x3 eigensystems reconstruct the input") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 9> a{};
        // Random symmetric matrix, occasionally with repeated-ish eigenvalues.
        double m[6];
        for (double& v : m) v = rng.uniform(-2.0, 2.0);
        a = {m[0], m[1], m[2], m[1], m[3], m[4], m[2], m[4], m[5]};
        if (trial % 7 == 0) a = {2, 0, 0, 0, 2, 0, 0, 0, rng.uniform(-1.0, 1.0)};

        EigenSym3 e = eigen_sym3(a);
        CHECK(e.values[0] >= e.values[1]);
        CHECK(e.values[1] >= e.values[2]);
        // Columns orthonormal.
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double dot = 0.0;
                for (int r = 0; r < 3; ++r)
                    dot += e.vectors[r * 3 + i] * e.vectors[r * 3 + j];
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
            }
        // V diag(values) V^T == a.
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k)
                    acc += e.vectors[r * 3 + k] * e.values[k] * e.vectors[c * 3 + k];
                CHECK(acc == doctest::Approx(a[r * 3 + c]).epsilon(1e-8).scale(1.0));
            }
    }
}

TEST_CASE("mpjpe hand cases") {
    std::vector<double> gt = {0, 0, 0, 1, 1, 1};
    std::vector<double> pred = {3, 4, 0, 1, 1, 1};  // joint errors 5 and 0
    CHECK(mpjpe(pred, gt, 2) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(mpjpe(gt, gt, 2) == 0.0);
    CHECK(throws_code(ErrorCode::shape_mismatch, [&] { mpjpe(pred, gt, 3); }));
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { mpjpe({}, {}, 0); }));
}

TEST_CASE("procrustes recovers a known similarity transform") {
    std::vector<double> pose = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0.3, 0.4, 0.5};
    auto rot = oracles::rotation_about_axis(0, 0, 1, M_PI / 2);
    auto moved = apply_similarity(pose, rot, 2.0, 1.0, 2.0, 3.0);

    ProcrustesResult res = procrustes_align(moved, pose, 5);
    CHECK(res.scale == doctest::Approx(0.5).epsilon(1e-9));  // inverse of the 2x
    CHECK(det3_of(res.rotation) == doctest::Approx(1.0).epsilon(1e-9));
    for (size_t i = 0; i < pose.size(); ++i)
        CHECK(res.aligned[i] == doctest::Approx(pose[i]).epsilon(1e-9).scale(1.0));
    CHECK(pa_mpjpe(moved, pose, 5) < 1e-9);
    CHECK(mpjpe(moved, pose, 5) > 1.0);  // without alignment the poses differ a lot
}

TEST_CASE("procrustes properties over random transforms") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        int joints = 5 + static_cast<int>(rng.below(12));
        std::vector<double> pose = random_pose(joints, rng);
        auto rot = oracles::rotation_about_axis(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                                rng.uniform(0.1, 1), rng.uniform(0, 6.28));
        double s = rng.uniform(0.2, 4.0);
        auto moved = apply_similarity(pose, rot, s, rng.uniform(-3, 3), rng.uniform(-3, 3),
                                      rng.uniform(-3, 3));
        CHECK(pa_mpjpe(moved, pose, joints) < 1e-8);
        CHECK(pa_mpjpe(pose, moved, joints) < 1e-8 * s);

        ProcrustesResult res = procrustes_align(moved, pose, joints);
        CHECK(det3_of(res.rotation) == doctest::Approx(1.0).epsilon(1e-8));
        // R^T R = I.
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double dot = 0.0;
                for (int r = 0; r < 3; ++r)
                    dot += res.rotation[r * 3 + i] * res.rotation[r * 3 + j];
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
            }
    }
}

TEST_CASE("procrustes never mirrors") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pose = random_pose(8, rng);
        std::vector<double> mirrored = pose;
        for (size_t j = 0; j < mirrored.size(); j += 3) mirrored[j] = -mirrored[j];
        ProcrustesResult res = procrustes_align(mirrored, pose, 8);
        CHECK(det3_of(res.rotation) == doctest::Approx(1.0).epsilon(1e-8));
    }
    // A generic chiral cloud cannot be rotated onto its mirror image.
    std::vector<double> pose = random_pose(8, rng);
    std::vector<double> mirrored = pose;
    for (size_t j = 0; j < mirrored.size(); j += 3) mirrored[j] = -mirrored[j];
    CHECK(pa_mpjpe(mirrored, pose, 8) > 1e-3);
}

TEST_CASE("alignment is optimal against random rival transforms") {
    // The Procrustes residual must not beat any other similarity transform.
    Rng rng(29);
    std::vector<double> pred = random_pose(10, rng);
    std::vector<double> gt = random_pose(10, rng);
    ProcrustesResult res = procrustes_align(pred, gt, 10);
    double best = 0.0;
    for (int j = 0; j < 10; ++j)
        for (int d = 0; d < 3; ++d) {
            double diff = res.aligned[j * 3 + d] - gt[j * 3 + d];
            best += diff * diff;
        }
    for (int trial = 0; trial < 300; ++trial) {
        auto rot = oracles::rotation_about_axis(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                                rng.uniform(0.1, 1), rng.uniform(0, 6.28));
        auto rival = apply_similarity(pred, rot, rng.uniform(0.1, 3.0), rng.uniform(-1, 1),
                                      rng.uniform(-1, 1), rng.uniform(-1, 1));
        double cost = 0.0;
        for (int j = 0; j < 10; ++j)
            for (int d = 0; d < 3; ++d) {
                double diff = rival[j * 3 + d] - gt[j * 3 + d];
                cost += diff * diff;
            }
        CHECK(cost >= best - 1e-9);
    }
}

TEST_CASE("degenerate point sets are rejected") {
    // Collinear points: rotation about the line is unconstrained.
    std::vector<double> line = {0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0};
    std::vector<double> target = {0, 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0};
    CHECK(throws_code(ErrorCode::degenerate_configuration,
                      [&] { procrustes_align(line, target, 4); }));
    // All points coincide.
    std::vector<double> point(12, 0.5);
    CHECK(throws_code(ErrorCode::degenerate_configuration,
                      [&] { procrustes_align(point, target, 4); }));
}

TEST_CASE("pck uses a strict inequality") {
    std::vector<double> gt = {0, 0, 0, 0, 0, 0};
    std::vector<double> pred = {0.3, 0.4, 0.0, 0.0, 0.0, 0.0};  // errors 0.5 and 0
    CHECK(pck(pred, gt, 2, 0.5) == doctest::Approx(0.5));   // only the exact zero passes
    CHECK(pck(pred, gt, 2, 0.5000001) == doctest::Approx(1.0));
    CHECK(pck(pred, gt, 2, 1e-12) == doctest::Approx(0.5));  // zero error passes any t > 0
    CHECK(pck(pred, gt, 2, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("auc is the mean pck over the sweep") {
    std::vector<double> gt = {0, 0, 0, 0, 0, 0};
    std::vector<double> pred = {0.1, 0, 0, 0, 0, 0};  // errors 0.1 and 0
    std::vector<double> sweep = {0.05, 0.15};
    // t=0.05: 1/2 joints; t=0.15: 2/2 joints; mean = 0.75.
    CHECK(auc(pred, gt, 2, sweep) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(default_pck_thresholds().size() == 30);
    CHECK(default_pck_thresholds().front() == doctest::Approx(0.005));
    CHECK(default_pck_thresholds().back() == doctest::Approx(0.150));
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { auc(pred, gt, 2, {}); }));
}

TEST_CASE("hardest slice selection") {
    std::vector<double> errors = {1.0, 5.0, 3.0, 2.0};
    SUBCASE("half keeps the two worst in order") {
        auto idx = hardest_indices(errors, 0.5);
        CHECK(idx == std::vector<int>{1, 2});
    }
    SUBCASE("tiny fractions floor to a single sample") {
        auto idx = hardest_indices(errors, 0.05);
        CHECK(idx == std::vector<int>{1});
    }
    SUBCASE("full fraction returns a descending permutation") {
        auto idx = hardest_indices(errors, 1.0);
        CHECK(idx == std::vector<int>{1, 2, 3, 0});
    }
    SUBCASE("ties resolve to the earliest sample") {
        std::vector<double> tied = {5.0, 5.0, 1.0};
        CHECK(hardest_indices(tied, 1.0 / 3) == std::vector<int>{0});
    }
    SUBCASE("validation") {
        CHECK(throws_code(ErrorCode::invalid_ratio, [&] { hardest_indices(errors, 0.0); }));
        CHECK(throws_code(ErrorCode::invalid_ratio, [&] { hardest_indices(errors, 1.5); }));
        CHECK(throws_code(ErrorCode::empty_dataset, [] { hardest_indices({}, 0.5); }));
    }
}

TEST_CASE("summary over a small dataset") {
    Rng rng(31);
    std::vector<std::vector<double>> gt, pred;
    const int joints = 6;
    // Three samples with per-sample mpjpe 0.1, 0.2, 0.4: shift every joint by
    // a fixed offset along x.
    for (double off : {0.1, 0.2, 0.4}) {
        std::vector<double> g = random_pose(joints, rng);
        std::vector<double> p = g;
        for (int j = 0; j < joints; ++j) p[j * 3] += off;
        gt.push_back(g);
        pred.push_back(p);
    }
    EvalSummary s = summarize_poses(pred, gt, joints, 0.25, 1.0 / 3);
    CHECK(s.samples == 3);
    CHECK(s.mpjpe == doctest::Approx((0.1 + 0.2 + 0.4) / 3).epsilon(1e-12));
    // A constant shift is removed exactly by alignment.
    CHECK(s.pa_mpjpe < 1e-9);
    // Sample errors are uniform per sample: pck = (1 + 1 + 0) / 3.
    CHECK(s.pck == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(s.hard_indices == std::vector<int>{2});
    CHECK(s.hard_mpjpe == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(s.auc > 0.0);
    CHECK(s.auc < 1.0);

    CHECK(throws_code(ErrorCode::empty_dataset,
                      [&] { summarize_poses({}, {}, joints, 0.25, 0.5); }));
    CHECK(throws_code(ErrorCode::shape_mismatch,
                      [&] { summarize_poses(pred, {gt[0]}, joints, 0.25, 0.5); }));
}

TEST_CASE("histogram bins errors and conserves the count") {
    std::vector<double> vals = {0.0, 0.05, 0.149, 0.15, 0.25, 0.31, 0.9, -0.2};
    std::vector<long> h = error_histogram(vals, 4, 0.0, 0.4);
    // Bins of width 0.1: [0,0.1) [0.1,0.2) [0.2,0.3) [0.3,0.4); outliers clamp.
    CHECK(h == std::vector<long>{3, 2, 1, 2});

    Rng rng(55);
    std::vector<double> many;
    for (int i = 0; i < 1000; ++i) many.push_back(rng.uniform(-1.0, 3.0));
    std::vector<long> wide = error_histogram(many, 13, 0.0, 1.0);
    long total = 0;
    for (long c : wide) total += c;
    CHECK(total == 1000);

    CHECK(error_histogram({}, 3, 0.0, 1.0) == std::vector<long>{0, 0, 0});
    CHECK(throws_code(ErrorCode::invalid_spec, [] { error_histogram({1.0}, 0, 0.0, 1.0); }));
    CHECK(throws_code(ErrorCode::invalid_spec, [] { error_histogram({1.0}, 3, 1.0, 1.0); }));
}
