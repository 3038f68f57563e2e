// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "poselift/data.hpp"
#include "poselift/metrics.hpp"
#include "poselift/model.hpp"

namespace poselift {

// Adam with bias correction. Holds handles to the parameters it updates;
// gradients are read from each tensor's grad buffer.
class Adam {
  public:
    Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8);

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    long steps() const { return step_; }

    void zero_grad();
    void step();

  private:
    std::vector<Tensor> params_;
    double lr_, beta1_, beta2_, eps_;
    long step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Exponential schedule: base * decay^epoch.
double lr_at(double base, int epoch, double decay = 0.95);

// Horizontal mirror of a row-major [frames, N, channels] pose in place:
// channel 0 negates, left/right joint pairs swap. Valid for normalized 2D
// inputs (pixel mirrors become negation after normalize_2d) and for
// root-relative 3D poses alike. Applying it twice restores the input.
void mirror_pose(std::vector<double>& pose, int frames, int num_joints, int channels,
                 const std::vector<std::pair<int, int>>& lr_pairs);

// Same mirror as a tensor op over a whole batch: the node axis is the
// second-to-last, channel 0 of the last axis negates. Used to fold a
// mirrored forward pass back at evaluation time.
Tensor flip_pose(const Tensor& t, const std::vector<std::pair<int, int>>& lr_pairs);

// Assemble [B,N,2] (frames == 1) or [B,T,N,2] normalized inputs for the
// given sample indices. flip_mask, when nonempty, mirrors the marked
// samples and must match idx in length.
Tensor batch_inputs(const PoseDataset& ds, const std::vector<int>& idx, int frames,
                    const std::vector<std::pair<int, int>>& lr_pairs = {},
                    const std::vector<char>& flip_mask = {});

// Center-frame 3D targets [B,N,3], mirrored under the same mask.
Tensor batch_targets(const PoseDataset& ds, const std::vector<int>& idx,
                     const std::vector<std::pair<int, int>>& lr_pairs = {},
                     const std::vector<char>& flip_mask = {});

struct TrainOptions {
    int epochs = 24;
    int batch_size = 16;
    double lr = 1e-3;
    double lr_decay = 0.95;
    bool augment_flip = true;  // per-sample coin toss each epoch
    bool shuffle = true;
    std::uint64_t seed = 123;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;  // mean L1 over the samples actually trained on
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Minimize mean absolute error over the dataset. Deterministic in
// (opts.seed, initial model state). Needs at least two samples because
// normalization layers use batch statistics; a leftover batch of one
// sample is skipped for the same reason.
std::vector<EpochStats> fit(LiftModel& model, const PoseDataset& data,
                            const TrainOptions& opts, const EpochCallback& cb = {});

// Eval-mode metrics over a dataset. flip_average also runs the mirrored
// input, mirrors the prediction back, and averages the two passes.
EvalSummary evaluate_model(LiftModel& model, const PoseDataset& data,
                           bool flip_average, double pck_threshold = 0.05,
                           double hard_fraction = 0.25);

}  // namespace poselift
