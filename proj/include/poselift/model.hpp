// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "poselift/dynamic_graph.hpp"
#include "poselift/graph.hpp"
#include "poselift/layers.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// Owns every learned tensor and non-learned buffer of a model. Each tensor
// initializes from an RNG stream derived from (seed, name), so values depend
// only on the name, never on creation order. Two models that create a tensor
// under the same name therefore start from identical values even when one of
// them has extra parameters.
class ParamRegistry {
  public:
    explicit ParamRegistry(std::uint64_t seed) : seed_(seed) {}

    // Uniform in +-1/sqrt(fan_in), requires_grad.
    Tensor create(const std::string& name, Shape shape, int fan_in);
    // Constant fill, requires_grad (biases, gains, gate scalars).
    Tensor create_const(const std::string& name, Shape shape, double fill);
    // Explicit initial values, requires_grad (learned graphs).
    Tensor create_values(const std::string& name, Shape shape, std::vector<double> values);
    // Constant fill, no grad, checkpointed (running statistics).
    Tensor create_buffer(const std::string& name, Shape shape, double fill);

    Rng name_stream(const std::string& name) const {
        return Rng(derive_seed(seed_, name));
    }

    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<Tensor>& buffers() const { return buffers_; }
    Tensor find(const std::string& name) const;  // params and buffers
    long param_count() const;
    std::uint64_t seed() const { return seed_; }

  private:
    void register_name(const std::string& name);

    std::uint64_t seed_;
    std::vector<Tensor> params_;
    std::vector<Tensor> buffers_;
    std::unordered_map<std::string, Tensor> by_name_;
};

enum class LayerKind { hcsf, lcn, gcn };
LayerKind layer_kind_from_string(const std::string& s);
std::string to_string(LayerKind k);

struct ModelConfig {
    LayerKind layer_kind = LayerKind::hcsf;
    int hidden = 64;
    int blocks = 2;
    int near_hops = 1;
    int max_hops = 3;
    double squeeze = 0.5;
    bool tail_anchored = false;
    FuseMode ring_fuse = FuseMode::concat;
    FuseMode final_fuse = FuseMode::concat;
    double dropout = 0.25;
    double leaky_slope = 0.2;
    bool dynamic = false;  // learn the aggregation graphs
    DynamicMode dynamic_mode = DynamicMode::m_plus_alpha_o;
    GraphInit graph_init = GraphInit::physical;
    bool share_offsets = true;  // one offset head per layer instead of per branch
    int frames = 1;             // > 1 runs the temporal variant on [B,T,N,2]
    int temporal_kernel = 3;
    bool ablate_blocks = false;  // debug: residual blocks become the identity
    std::uint64_t seed = 42;

    void validate() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
// Strict: unknown keys are config_invalid; missing keys keep their defaults.
ModelConfig model_config_from_json(const std::string& text);

// 2D-to-3D pose lifting network. The static form maps [B,N,2] normalized
// detections to [B,N,3] root-relative coordinates through an input graph
// layer, residual blocks of two graph layers each, and a per-node linear
// head. The temporal form takes [B,T,N,2], runs graph layers frame-wise,
// mixes frames with temporal convolutions inside each block, and predicts
// the center frame.
class LiftModel {
  public:
    LiftModel(SkeletonTopology topo, ModelConfig cfg);

    Tensor forward(const Tensor& x, bool training, Rng& dropout_rng);

    const ModelConfig& config() const { return cfg_; }
    const SkeletonTopology& topology() const { return topo_; }
    const HopPartition& partition() const { return part_; }
    ParamRegistry& registry() { return reg_; }
    const ParamRegistry& registry() const { return reg_; }

  private:
    struct LayerState {
        HcsfSpec spec;  // num_nodes / c_in / c_out are meaningful for every kind
        HcsfWeights weights;      // hcsf
        BranchWeights lcn;        // lcn
        Tensor flat_bias;         // lcn / gcn bias
        Tensor gcn_w;
        Tensor shared_graph;      // constant graph for lcn / gcn
        BranchGraphs const_graphs;  // hcsf, static regime
        std::vector<PairList> branch_pairs;  // near + rings, for dynamic bases
        std::vector<Tensor> base;            // learned M per branch
        Tensor alpha;
        std::vector<Tensor> theta, phi;  // offset heads ([C,E] or [E,C,F])
        BatchNormState bn;
    };

    LayerState make_layer(const std::string& prefix, int c_in, int c_out);
    // x is [B',N,c_in]; frames_ctx is the [B,C,T,N] view of the layer input
    // when running temporally with learned graphs (empty handle otherwise).
    Tensor layer_forward(LayerState& layer, const Tensor& x, const Tensor& frames_ctx);
    Tensor post(const Tensor& x, BatchNormState& bn, bool training, Rng& rng,
                bool skip_act_drop = false);

    SkeletonTopology topo_;
    ModelConfig cfg_;
    HopPartition part_;
    ParamRegistry reg_;
    LayerState input_;
    struct Block {
        LayerState first;
        LayerState second;
        Tensor tcn_kernel;          // temporal blocks only
        BatchNormState tcn_bn;
    };
    std::vector<Block> blocks_;
    Tensor head_w_, head_b_;
};

// Bit-exact serialization: doubles are written as hexadecimal float strings.
void save_checkpoint(const LiftModel& model, const std::string& path);
LiftModel load_checkpoint(const std::string& path);

std::string double_to_hex(double v);
double hex_to_double(const std::string& s);

inline constexpr const char* kCheckpointSchema = "poselift.checkpoint.v1";

}  // namespace poselift
