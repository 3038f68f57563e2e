// SPDX-License-Identifier: Apache-2.0
#include "poselift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace poselift {

namespace {

using Mat3 = std::array<double, 9>;
using Vec3 = std::array<double, 3>;

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return c;
}

Mat3 mat3_transpose(const Mat3& a) {
    return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

double det3(const Mat3& a) {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
    return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
            a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

void check_pose_args(const std::vector<double>& pred, const std::vector<double>& gt,
                     int num_joints, const char* who) {
    require(num_joints >= 1, ErrorCode::invalid_spec,
            std::string(who) + ": need at least one joint");
    require(pred.size() == static_cast<size_t>(num_joints) * 3 && pred.size() == gt.size(),
            ErrorCode::shape_mismatch,
            std::string(who) + ": poses must both hold num_joints*3 values");
}

std::vector<double> joint_errors(const std::vector<double>& pred,
                                 const std::vector<double>& gt, int num_joints) {
    std::vector<double> errs(static_cast<size_t>(num_joints));
    for (int j = 0; j < num_joints; ++j) {
        double dx = pred[j * 3 + 0] - gt[j * 3 + 0];
        double dy = pred[j * 3 + 1] - gt[j * 3 + 1];
        double dz = pred[j * 3 + 2] - gt[j * 3 + 2];
        errs[j] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return errs;
}

}  // namespace

EigenSym3 eigen_sym3(const std::array<double, 9>& input) {
    Mat3 a = input;
    Mat3 v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    const int pq[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = std::abs(a[1]) + std::abs(a[2]) + std::abs(a[5]);
        double diag = std::abs(a[0]) + std::abs(a[4]) + std::abs(a[8]);
        if (off <= 1e-15 * (diag + 1e-300)) break;
        for (auto [p, q] : pq) {
            double apq = a[p * 3 + q];
            if (apq == 0.0) continue;
            double app = a[p * 3 + p], aqq = a[q * 3 + q];
            double theta = (aqq - app) / (2.0 * apq);
            double t = (theta >= 0 ? 1.0 : -1.0) /
                       (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            double c = 1.0 / std::sqrt(t * t + 1.0);
            double s = t * c;
            Mat3 g = {1, 0, 0, 0, 1, 0, 0, 0, 1};
            g[p * 3 + p] = c;
            g[q * 3 + q] = c;
            g[p * 3 + q] = s;
            g[q * 3 + p] = -s;
            a = mat3_mul(mat3_transpose(g), mat3_mul(a, g));
            v = mat3_mul(v, g);
        }
    }
    // Sort eigenpairs descending; v columns follow their values.
    std::array<int, 3> idx = {0, 1, 2};
    std::array<double, 3> vals = {a[0], a[4], a[8]};
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return vals[x] > vals[y]; });
    EigenSym3 out;
    for (int k = 0; k < 3; ++k) {
        out.values[k] = vals[idx[k]];
        for (int r = 0; r < 3; ++r) out.vectors[r * 3 + k] = v[r * 3 + idx[k]];
    }
    return out;
}

ProcrustesResult procrustes_align(const std::vector<double>& source,
                                  const std::vector<double>& target, int num_joints) {
    check_pose_args(source, target, num_joints, "procrustes_align");
    const int n = num_joints;

    Vec3 mu_s{}, mu_t{};
    for (int j = 0; j < n; ++j)
        for (int d = 0; d < 3; ++d) {
            mu_s[d] += source[j * 3 + d] / n;
            mu_t[d] += target[j * 3 + d] / n;
        }

    // Covariance between centered target rows and centered source columns,
    // plus the source spread for the scale.
    Mat3 cov{};
    double spread_s = 0.0;
    for (int j = 0; j < n; ++j) {
        Vec3 cs, ct;
        for (int d = 0; d < 3; ++d) {
            cs[d] = source[j * 3 + d] - mu_s[d];
            ct[d] = target[j * 3 + d] - mu_t[d];
            spread_s += cs[d] * cs[d] / n;
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cov[r * 3 + c] += ct[r] * cs[c] / n;
    }
    require(spread_s > 0.0, ErrorCode::degenerate_configuration,
            "procrustes_align: source points all coincide");

    // SVD of cov via the eigensystem of cov^T cov.
    EigenSym3 eig = eigen_sym3(mat3_mul(mat3_transpose(cov), cov));
    std::array<double, 3> sigma;
    for (int k = 0; k < 3; ++k) sigma[k] = std::sqrt(std::max(0.0, eig.values[k]));
    require(sigma[2] > 1e-12 * sigma[0] && sigma[0] > 0.0,
            ErrorCode::degenerate_configuration,
            "procrustes_align: covariance is rank-deficient; rotation undetermined");

    Mat3 vmat = eig.vectors;  // columns are right singular vectors
    Mat3 umat{};
    for (int k = 0; k < 3; ++k) {
        Vec3 vk = {vmat[0 * 3 + k], vmat[1 * 3 + k], vmat[2 * 3 + k]};
        Vec3 uk = mat3_apply(cov, vk);
        for (int r = 0; r < 3; ++r) umat[r * 3 + k] = uk[r] / sigma[k];
    }

    // Reflections are not valid poses: flip the weakest direction instead.
    double sign = det3(umat) * det3(vmat) < 0.0 ? -1.0 : 1.0;
    Mat3 d_sign = {1, 0, 0, 0, 1, 0, 0, 0, sign};
    Mat3 rot = mat3_mul(umat, mat3_mul(d_sign, mat3_transpose(vmat)));

    double scale = (sigma[0] + sigma[1] + sign * sigma[2]) / spread_s;

    ProcrustesResult res;
    res.scale = scale;
    res.rotation = rot;
    Vec3 r_mu = mat3_apply(rot, mu_s);
    for (int d = 0; d < 3; ++d) res.translation[d] = mu_t[d] - scale * r_mu[d];
    res.aligned.resize(static_cast<size_t>(n) * 3);
    for (int j = 0; j < n; ++j) {
        Vec3 p = {source[j * 3 + 0], source[j * 3 + 1], source[j * 3 + 2]};
        Vec3 rp = mat3_apply(rot, p);
        for (int d = 0; d < 3; ++d) res.aligned[j * 3 + d] = scale * rp[d] + res.translation[d];
    }
    return res;
}

double mpjpe(const std::vector<double>& pred, const std::vector<double>& gt,
             int num_joints) {
    check_pose_args(pred, gt, num_joints, "mpjpe");
    auto errs = joint_errors(pred, gt, num_joints);
    return std::accumulate(errs.begin(), errs.end(), 0.0) / num_joints;
}

double pa_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt,
                int num_joints) {
    ProcrustesResult res = procrustes_align(pred, gt, num_joints);
    return mpjpe(res.aligned, gt, num_joints);
}

double pck(const std::vector<double>& pred, const std::vector<double>& gt,
           int num_joints, double threshold) {
    check_pose_args(pred, gt, num_joints, "pck");
    auto errs = joint_errors(pred, gt, num_joints);
    int hits = 0;
    for (double e : errs)
        if (e < threshold) ++hits;
    return static_cast<double>(hits) / num_joints;
}

std::vector<double> default_pck_thresholds() {
    std::vector<double> t;
    for (int i = 1; i <= 30; ++i) t.push_back(0.005 * i);
    return t;
}

double auc(const std::vector<double>& pred, const std::vector<double>& gt,
           int num_joints, const std::vector<double>& thresholds) {
    require(!thresholds.empty(), ErrorCode::invalid_spec, "auc: no thresholds");
    double acc = 0.0;
    for (double t : thresholds) acc += pck(pred, gt, num_joints, t);
    return acc / static_cast<double>(thresholds.size());
}

std::vector<int> hardest_indices(const std::vector<double>& errors, double fraction) {
    require(fraction > 0.0 && fraction <= 1.0, ErrorCode::invalid_ratio,
            "hardest_indices: fraction must be in (0, 1]");
    require(!errors.empty(), ErrorCode::empty_dataset, "hardest_indices: no errors given");
    const int n = static_cast<int>(errors.size());
    int k = std::max(1, static_cast<int>(std::floor(fraction * n)));
    std::vector<int> idx(errors.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return errors[a] > errors[b]; });
    idx.resize(static_cast<size_t>(k));
    return idx;
}

std::vector<long> error_histogram(const std::vector<double>& values, int bins,
                                  double lo, double hi) {
    require(bins >= 1, ErrorCode::invalid_spec, "error_histogram: need at least one bin");
    require(hi > lo, ErrorCode::invalid_spec, "error_histogram: empty range");
    std::vector<long> counts(static_cast<size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : values) {
        int b = static_cast<int>(std::floor((v - lo) / width));
        b = std::max(0, std::min(bins - 1, b));
        ++counts[static_cast<size_t>(b)];
    }
    return counts;
}

EvalSummary summarize_poses(const std::vector<std::vector<double>>& pred,
                            const std::vector<std::vector<double>>& gt, int num_joints,
                            double pck_threshold, double hard_fraction,
                            const std::vector<double>& auc_thresholds) {
    require(pred.size() == gt.size(), ErrorCode::shape_mismatch,
            "summarize_poses: prediction and target counts differ");
    require(!pred.empty(), ErrorCode::empty_dataset, "summarize_poses: no samples");
    std::vector<double> sweep =
        auc_thresholds.empty() ? default_pck_thresholds() : auc_thresholds;

    EvalSummary s;
    s.samples = static_cast<int>(pred.size());
    s.joints = num_joints;
    s.pck_threshold = pck_threshold;
    s.hard_fraction = hard_fraction;

    std::vector<double> per_sample_mpjpe(pred.size());
    std::vector<double> per_sample_pa(pred.size());
    double pck_sum = 0.0, auc_sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        per_sample_mpjpe[i] = mpjpe(pred[i], gt[i], num_joints);
        per_sample_pa[i] = pa_mpjpe(pred[i], gt[i], num_joints);
        pck_sum += pck(pred[i], gt[i], num_joints, pck_threshold);
        auc_sum += auc(pred[i], gt[i], num_joints, sweep);
    }
    s.mpjpe = std::accumulate(per_sample_mpjpe.begin(), per_sample_mpjpe.end(), 0.0) /
              s.samples;
    s.pa_mpjpe =
        std::accumulate(per_sample_pa.begin(), per_sample_pa.end(), 0.0) / s.samples;
    s.pck = pck_sum / s.samples;
    s.auc = auc_sum / s.samples;

    s.hard_indices = hardest_indices(per_sample_mpjpe, hard_fraction);
    double hard_m = 0.0, hard_pa = 0.0;
    for (int i : s.hard_indices) {
        hard_m += per_sample_mpjpe[i];
        hard_pa += per_sample_pa[i];
    }
    s.hard_mpjpe = hard_m / static_cast<double>(s.hard_indices.size());
    s.hard_pa_mpjpe = hard_pa / static_cast<double>(s.hard_indices.size());
    s.sample_mpjpe = std::move(per_sample_mpjpe);
    s.sample_pa_mpjpe = std::move(per_sample_pa);
    return s;
}

}  // namespace poselift
