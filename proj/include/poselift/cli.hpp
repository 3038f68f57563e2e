// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/model.hpp"
#include "poselift/training.hpp"

namespace poselift {

// Evaluation knobs shared by the train and eval commands.
struct MetricsConfig {
    double pck_threshold = 0.05;  // world units
    std::vector<double> hard_fractions = {0.05, 0.10, 0.25};
    bool flip_average = true;
    int histogram_bins = 20;
    double histogram_max = 0.5;  // histogram spans [0, histogram_max]

    void validate() const;
};

// One self-describing training run: everything an experiment needs lives in
// a single JSON document, so committing that file pins the run.
struct RunConfig {
    std::string topology = "human17";  // preset name or topology file path
    ModelConfig model;
    TrainOptions training;
    std::string train_data;
    std::string test_data;  // optional
    MetricsConfig metrics;
    std::string output_dir;  // empty: $POSELIFT_OUT or "runs"

    // Directory artifacts are written to, after the env fallback.
    std::string resolved_output_dir() const;
};

std::string run_config_to_json(const RunConfig& cfg);
// Strict: unknown keys anywhere are config_invalid.
RunConfig run_config_from_json(const std::string& text);

// Preset name, or a path to a topology JSON file when one exists there.
SkeletonTopology resolve_topology(const std::string& spec);

// Commands. Each validates everything before touching the filesystem and
// returns a process exit code: 0 success, 1 usage or config error, 2 failure
// during the run itself.
int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides);
int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& report_path, const MetricsConfig& metrics);
int cmd_gradcheck(std::uint64_t seed);
int cmd_graph(const std::string& topology_spec, int max_hop);
int cmd_synth(const SynthConfig& cfg, const std::string& out_path);

// Argument parsing plus dispatch; the poselift binary is a thin wrapper.
int run_cli(int argc, const char* const* argv);

inline constexpr const char* kReportSchema = "poselift.report.v1";
inline constexpr const char* kOutputRootEnv = "POSELIFT_OUT";

}  // namespace poselift
