// SPDX-License-Identifier: Apache-2.0
#include "poselift/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace poselift {

// ---- optimizer ----------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    require(lr_ > 0.0, ErrorCode::config_invalid, "learning rate must be positive");
    require(beta1_ >= 0.0 && beta1_ < 1.0 && beta2_ >= 0.0 && beta2_ < 1.0,
            ErrorCode::config_invalid, "betas must lie in [0, 1)");
    require(eps_ > 0.0, ErrorCode::config_invalid, "eps must be positive");
    for (const Tensor& p : params_) {
        require(p.defined() && p.requires_grad(), ErrorCode::invalid_spec,
                "optimizer parameters must require gradients");
        m_.emplace_back(p.value().size(), 0.0);
        v_.emplace_back(p.value().size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

void Adam::step() {
    ++step_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& value = params_[i].value();
        const auto& grad = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            value[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

double lr_at(double base, int epoch, double decay) {
    require(base > 0.0, ErrorCode::config_invalid, "learning rate must be positive");
    require(epoch >= 0, ErrorCode::config_invalid, "epoch must be non-negative");
    require(decay > 0.0 && decay <= 1.0, ErrorCode::config_invalid,
            "decay must lie in (0, 1]");
    return base * std::pow(decay, epoch);
}

// ---- mirroring ----------------------------------------------------------------

void mirror_pose(std::vector<double>& pose, int frames, int num_joints, int channels,
                 const std::vector<std::pair<int, int>>& lr_pairs) {
    require(frames >= 1 && num_joints >= 1 && channels >= 1, ErrorCode::invalid_spec,
            "mirror_pose: bad dimensions");
    require(pose.size() ==
                static_cast<size_t>(frames) * num_joints * channels,
            ErrorCode::shape_mismatch, "mirror_pose: size does not match dimensions");
    for (auto [a, b] : lr_pairs)
        require(a >= 0 && a < num_joints && b >= 0 && b < num_joints && a != b,
                ErrorCode::invalid_spec, "mirror_pose: bad left/right pair");
    for (int t = 0; t < frames; ++t) {
        double* frame = pose.data() + static_cast<size_t>(t) * num_joints * channels;
        for (int j = 0; j < num_joints; ++j) frame[j * channels] = -frame[j * channels];
        for (auto [a, b] : lr_pairs)
            for (int c = 0; c < channels; ++c)
                std::swap(frame[a * channels + c], frame[b * channels + c]);
    }
}

Tensor flip_pose(const Tensor& t, const std::vector<std::pair<int, int>>& lr_pairs) {
    require(t.defined() && t.rank() >= 2, ErrorCode::shape_mismatch,
            "flip_pose: need at least [N, channels]");
    const int channels = t.shape()[t.rank() - 1];
    const int n = t.shape()[t.rank() - 2];
    long lead = 1;
    for (int i = 0; i < t.rank() - 2; ++i) lead *= t.shape()[i];

    // Row swap as a per-node permutation, sign flip as a channel mask; both
    // expressed through existing ops so gradients flow through the mirror.
    std::vector<double> perm(static_cast<size_t>(n) * n, 0.0);
    std::vector<int> dest(n);
    std::iota(dest.begin(), dest.end(), 0);
    for (auto [a, b] : lr_pairs) {
        require(a >= 0 && a < n && b >= 0 && b < n && a != b, ErrorCode::invalid_spec,
                "flip_pose: bad left/right pair");
        std::swap(dest[a], dest[b]);
    }
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i) * n + dest[i]] = 1.0;

    Tensor p = Tensor::from_data({n, n}, std::move(perm), false);
    Shape folded{static_cast<int>(lead), n, channels};
    Tensor swapped = matmul(p, reshape(t, folded));
    // mul takes equal shapes, so expand the channel sign mask by hand.
    std::vector<double> mask(static_cast<size_t>(lead) * n * channels, 1.0);
    for (size_t i = 0; i < mask.size(); i += channels) mask[i] = -1.0;
    Tensor m = Tensor::from_data(folded, std::move(mask), false);
    return reshape(mul(swapped, m), t.shape());
}

// ---- batches ------------------------------------------------------------------

namespace {

void check_batch_args(const PoseDataset& ds, const std::vector<int>& idx,
                      const std::vector<char>& flip_mask) {
    require(!idx.empty(), ErrorCode::invalid_spec, "empty batch");
    require(flip_mask.empty() || flip_mask.size() == idx.size(), ErrorCode::invalid_spec,
            "flip mask length does not match the batch");
    for (int i : idx)
        require(i >= 0 && i < static_cast<int>(ds.samples.size()),
                ErrorCode::invalid_spec, "sample index out of range");
}

}  // namespace

Tensor batch_inputs(const PoseDataset& ds, const std::vector<int>& idx, int frames,
                    const std::vector<std::pair<int, int>>& lr_pairs,
                    const std::vector<char>& flip_mask) {
    check_batch_args(ds, idx, flip_mask);
    require(frames >= 1, ErrorCode::invalid_spec, "frames must be positive");
    const int n = ds.num_joints;
    const size_t per = static_cast<size_t>(frames) * n * 2;
    std::vector<double> out;
    out.reserve(idx.size() * per);
    for (size_t s = 0; s < idx.size(); ++s) {
        const PoseSample& sample = ds.samples[idx[s]];
        require(sample.frames == frames, ErrorCode::shape_mismatch,
                "sample has " + std::to_string(sample.frames) + " frames, expected " +
                    std::to_string(frames));
        std::vector<double> px = sample.joints2d;
        normalize_2d(px, ds.image_width, ds.image_height);
        if (!flip_mask.empty() && flip_mask[s]) mirror_pose(px, frames, n, 2, lr_pairs);
        out.insert(out.end(), px.begin(), px.end());
    }
    const int b = static_cast<int>(idx.size());
    Shape shape = frames == 1 ? Shape{b, n, 2} : Shape{b, frames, n, 2};
    return Tensor::from_data(std::move(shape), std::move(out), false);
}

Tensor batch_targets(const PoseDataset& ds, const std::vector<int>& idx,
                     const std::vector<std::pair<int, int>>& lr_pairs,
                     const std::vector<char>& flip_mask) {
    check_batch_args(ds, idx, flip_mask);
    const int n = ds.num_joints;
    std::vector<double> out;
    out.reserve(idx.size() * n * 3);
    for (size_t s = 0; s < idx.size(); ++s) {
        std::vector<double> pose = ds.samples[idx[s]].joints3d;
        if (!flip_mask.empty() && flip_mask[s]) mirror_pose(pose, 1, n, 3, lr_pairs);
        out.insert(out.end(), pose.begin(), pose.end());
    }
    return Tensor::from_data({static_cast<int>(idx.size()), n, 3}, std::move(out), false);
}

// ---- training loop ------------------------------------------------------------

std::vector<EpochStats> fit(LiftModel& model, const PoseDataset& data,
                            const TrainOptions& opts, const EpochCallback& cb) {
    require(opts.epochs >= 0, ErrorCode::config_invalid, "epochs must be non-negative");
    require(opts.batch_size >= 2, ErrorCode::config_invalid,
            "batch_size must be at least 2 (batch statistics)");
    require(data.num_joints == model.topology().num_nodes, ErrorCode::shape_mismatch,
            "dataset joint count does not match the model topology");
    require(data.samples.size() >= 2, ErrorCode::invalid_spec,
            "training needs at least two samples");
    lr_at(opts.lr, 0, opts.lr_decay);  // validates lr and decay up front

    const auto& lr_pairs = model.topology().left_right_pairs;
    const int frames = model.config().frames;
    const int n = static_cast<int>(data.samples.size());

    Adam adam(model.registry().params(), opts.lr);
    std::vector<EpochStats> history;
    history.reserve(opts.epochs);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        Rng rng(derive_seed(opts.seed, "epoch:" + std::to_string(epoch)));
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        if (opts.shuffle)
            for (int i = n - 1; i > 0; --i)
                std::swap(order[i], order[static_cast<int>(rng.uniform() * (i + 1))]);

        adam.set_lr(lr_at(opts.lr, epoch, opts.lr_decay));
        double loss_sum = 0.0;
        long seen = 0;
        for (int start = 0; start < n; start += opts.batch_size) {
            const int count = std::min(opts.batch_size, n - start);
            if (count < 2) continue;  // a single sample has no batch statistics
            std::vector<int> idx(order.begin() + start, order.begin() + start + count);
            std::vector<char> flips(idx.size(), 0);
            if (opts.augment_flip)
                for (char& f : flips) f = rng.uniform() < 0.5 ? 1 : 0;

            Tensor x = batch_inputs(data, idx, frames, lr_pairs, flips);
            Tensor y = batch_targets(data, idx, lr_pairs, flips);
            adam.zero_grad();
            Tensor loss = l1_loss(model.forward(x, true, rng), y);
            loss.backward();
            adam.step();
            loss_sum += loss.value()[0] * count;
            seen += count;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = adam.lr();
        stats.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
        history.push_back(stats);
        if (cb) cb(stats);
    }
    return history;
}

// ---- evaluation ---------------------------------------------------------------

EvalSummary evaluate_model(LiftModel& model, const PoseDataset& data, bool flip_average,
                           double pck_threshold, double hard_fraction) {
    require(!data.samples.empty(), ErrorCode::invalid_spec, "empty dataset");
    require(data.num_joints == model.topology().num_nodes, ErrorCode::shape_mismatch,
            "dataset joint count does not match the model topology");
    const auto& lr_pairs = model.topology().left_right_pairs;
    const int frames = model.config().frames;
    const int n = static_cast<int>(data.samples.size());
    const int nj = data.num_joints;

    std::vector<std::vector<double>> preds, gts;
    preds.reserve(n);
    gts.reserve(n);
    Rng unused(0);
    const int chunk = 64;
    for (int start = 0; start < n; start += chunk) {
        const int count = std::min(chunk, n - start);
        std::vector<int> idx(count);
        std::iota(idx.begin(), idx.end(), start);
        Tensor x = batch_inputs(data, idx, frames);
        Tensor pred = model.forward(x, false, unused);
        if (flip_average) {
            Tensor mirrored = model.forward(flip_pose(x, lr_pairs), false, unused);
            pred = scale(add(pred, flip_pose(mirrored, lr_pairs)), 0.5);
        }
        const auto& v = pred.value();
        for (int s = 0; s < count; ++s) {
            preds.emplace_back(v.begin() + static_cast<size_t>(s) * nj * 3,
                               v.begin() + static_cast<size_t>(s + 1) * nj * 3);
            gts.push_back(data.samples[start + s].joints3d);
        }
    }
    return summarize_poses(preds, gts, nj, pck_threshold, hard_fraction);
}

}  // namespace poselift
