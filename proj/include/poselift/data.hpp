// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/common.hpp"
#include "poselift/graph.hpp"

namespace poselift {

// One training sample: 2D detections in pixels for `frames` consecutive
// frames (row-major [T, N, 2]) and the root-relative 3D pose in world units
// for the center frame ([N, 3]).
struct PoseSample {
    int frames = 1;
    std::vector<double> joints2d;
    std::vector<double> joints3d;
};

struct PoseDataset {
    int num_joints = 0;
    int image_width = 0;
    int image_height = 0;
    std::vector<PoseSample> samples;
};

// JSONL storage: one header object carrying the schema tag and geometry,
// then one object per sample. Loading checks the schema tag and per-sample
// sizes and refuses empty files.
PoseDataset load_dataset_jsonl(const std::string& path);
void save_dataset_jsonl(const PoseDataset& ds, const std::string& path);

inline constexpr const char* kDatasetSchema = "poselift.dataset.v1";

// Pixel coordinates to [-1, 1] per axis: x' = 2x/w - 1, y' = 2y/h - 1.
// A horizontal pixel mirror (x -> w - x) becomes plain negation afterwards,
// which is what the flip augmentation relies on.
void normalize_2d(std::vector<double>& joints2d, int image_width, int image_height);

// Bone lengths in world units, aligned with human17_topology().edges order.
const std::vector<double>& human17_bone_lengths();
double human17_mean_bone_length();

struct SynthConfig {
    int num_samples = 128;
    int frames = 1;  // > 1 produces smooth sequences
    std::uint64_t seed = 1;
    int image_width = 1000;
    int image_height = 1000;
    double focal_px = 1100.0;
    double noise_std_2d = 0.0;  // Gaussian pixel noise on the detections
};

// Random articulated human17 poses from a forward-kinematics rig with fixed
// bone lengths, viewed by a pinhole camera. joints2d is the perspective
// projection in pixels; joints3d is the root-relative camera-frame pose of
// the center frame. Deterministic in the seed, sample by sample.
PoseDataset synth_dataset(const SynthConfig& cfg);

}  // namespace poselift
