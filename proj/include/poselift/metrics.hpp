// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "poselift/common.hpp"

namespace poselift {

// Eigendecomposition of a symmetric 3x3 matrix (row-major) by cyclic Jacobi
// rotations. values are descending; vectors stores the matching eigenvectors
// as columns of a row-major 3x3 matrix.
struct EigenSym3 {
    std::array<double, 3> values;
    std::array<double, 9> vectors;
};

EigenSym3 eigen_sym3(const std::array<double, 9>& a);

// Best similarity transform (scale * rotation + translation, det(R) = +1)
// mapping the source point set onto the target in the least-squares sense.
// Points are [N*3] row-major. Fails with DegenerateConfiguration when the
// covariance between the sets is rank-deficient (e.g. collinear points),
// where the rotation is not determined.
struct ProcrustesResult {
    double scale = 1.0;
    std::array<double, 9> rotation{};     // row-major
    std::array<double, 3> translation{};
    std::vector<double> aligned;          // scale * R * source + t
};

ProcrustesResult procrustes_align(const std::vector<double>& source,
                                  const std::vector<double>& target, int num_joints);

// Mean Euclidean distance over joints between two [N*3] poses.
double mpjpe(const std::vector<double>& pred, const std::vector<double>& gt,
             int num_joints);

// mpjpe after Procrustes-aligning the prediction onto the ground truth.
double pa_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt,
                int num_joints);

// Fraction of joints whose error is strictly below the threshold.
double pck(const std::vector<double>& pred, const std::vector<double>& gt,
           int num_joints, double threshold);

// 30 thresholds, 0.005 to 0.150 in steps of 0.005 (world units).
std::vector<double> default_pck_thresholds();

// Mean pck over a threshold sweep.
double auc(const std::vector<double>& pred, const std::vector<double>& gt,
           int num_joints, const std::vector<double>& thresholds);

// Indices of the ceil-free top slice of errors: k = max(1, floor(fraction*n)),
// picked by stable descending sort so ties keep their original order.
// fraction must lie in (0, 1].
std::vector<int> hardest_indices(const std::vector<double>& errors, double fraction);

// Equal-width histogram of `values` over [lo, hi]. Values below lo fall into
// the first bin and values at or above hi into the last, so the counts always
// sum to values.size(). Interior bin b covers [lo + b*w, lo + (b+1)*w).
std::vector<long> error_histogram(const std::vector<double>& values, int bins,
                                  double lo, double hi);

struct EvalSummary {
    int samples = 0;
    int joints = 0;
    double mpjpe = 0.0;
    double pa_mpjpe = 0.0;
    double pck = 0.0;            // at pck_threshold
    double pck_threshold = 0.0;
    double auc = 0.0;            // over default_pck_thresholds unless overridden
    double hard_fraction = 0.0;
    double hard_mpjpe = 0.0;     // mean mpjpe over the hardest samples
    double hard_pa_mpjpe = 0.0;
    std::vector<int> hard_indices;
    std::vector<double> sample_mpjpe;     // per-sample errors, dataset order
    std::vector<double> sample_pa_mpjpe;
};

// Dataset-level metrics: mpjpe / pa_mpjpe are means of the per-sample values,
// pck and auc pool all joints of all samples, and the hard slice ranks
// samples by their mpjpe.
EvalSummary summarize_poses(const std::vector<std::vector<double>>& pred,
                            const std::vector<std::vector<double>>& gt, int num_joints,
                            double pck_threshold, double hard_fraction,
                            const std::vector<double>& auc_thresholds = {});

}  // namespace poselift
