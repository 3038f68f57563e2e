// SPDX-License-Identifier: Apache-2.0
#include "poselift/model.hpp"

#include <cinttypes>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace poselift {

// ---- registry ---------------------------------------------------------------

void ParamRegistry::register_name(const std::string& name) {
    require(!name.empty(), ErrorCode::invalid_spec, "registry: empty tensor name");
    require(!by_name_.count(name), ErrorCode::invalid_spec,
            "registry: duplicate tensor name '" + name + "'");
}

Tensor ParamRegistry::create(const std::string& name, Shape shape, int fan_in) {
    register_name(name);
    Rng rng = name_stream(name);
    Tensor t = Tensor::scaled_uniform(std::move(shape), fan_in, rng, true);
    t.set_name(name);
    params_.push_back(t);
    by_name_.emplace(name, t);
    return t;
}

Tensor ParamRegistry::create_const(const std::string& name, Shape shape, double fill) {
    register_name(name);
    Tensor t = Tensor::full(std::move(shape), fill, true);
    t.set_name(name);
    params_.push_back(t);
    by_name_.emplace(name, t);
    return t;
}

Tensor ParamRegistry::create_values(const std::string& name, Shape shape,
                                    std::vector<double> values) {
    register_name(name);
    Tensor t = Tensor::from_data(std::move(shape), std::move(values), true);
    t.set_name(name);
    params_.push_back(t);
    by_name_.emplace(name, t);
    return t;
}

Tensor ParamRegistry::create_buffer(const std::string& name, Shape shape, double fill) {
    register_name(name);
    Tensor t = Tensor::full(std::move(shape), fill, false);
    t.set_name(name);
    buffers_.push_back(t);
    by_name_.emplace(name, t);
    return t;
}

Tensor ParamRegistry::find(const std::string& name) const {
    auto it = by_name_.find(name);
    require(it != by_name_.end(), ErrorCode::invalid_spec,
            "registry: no tensor named '" + name + "'");
    return it->second;
}

long ParamRegistry::param_count() const {
    long total = 0;
    for (const Tensor& t : params_) total += t.numel();
    return total;
}

// ---- config -----------------------------------------------------------------

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "hcsf") return LayerKind::hcsf;
    if (s == "lcn") return LayerKind::lcn;
    if (s == "gcn") return LayerKind::gcn;
    fail(ErrorCode::config_invalid, "unknown layer kind '" + s + "'");
}

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::hcsf: return "hcsf";
        case LayerKind::lcn: return "lcn";
        case LayerKind::gcn: return "gcn";
    }
    fail(ErrorCode::config_invalid, "bad layer kind value");
}

void ModelConfig::validate() const {
    require(hidden >= 1, ErrorCode::config_invalid, "hidden must be positive");
    require(blocks >= 0, ErrorCode::config_invalid, "blocks must be non-negative");
    require(frames >= 1, ErrorCode::config_invalid, "frames must be positive");
    require(temporal_kernel >= 1 && temporal_kernel % 2 == 1, ErrorCode::config_invalid,
            "temporal_kernel must be odd and positive");
    require(dropout >= 0.0 && dropout < 1.0, ErrorCode::config_invalid,
            "dropout must be in [0, 1)");
    require(!dynamic || layer_kind == LayerKind::hcsf, ErrorCode::config_invalid,
            "learned graphs are only supported for hcsf layers");
    if (layer_kind == LayerKind::hcsf)
        // Shares the width constraints with the layers; c_in is irrelevant here.
        squeeze_schedule(hidden, near_hops, max_hops, squeeze, tail_anchored);
}

std::string model_config_to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["layer_kind"] = to_string(cfg.layer_kind);
    j["hidden"] = cfg.hidden;
    j["blocks"] = cfg.blocks;
    j["near_hops"] = cfg.near_hops;
    j["max_hops"] = cfg.max_hops;
    j["squeeze"] = cfg.squeeze;
    j["tail_anchored"] = cfg.tail_anchored;
    j["ring_fuse"] = to_string(cfg.ring_fuse);
    j["final_fuse"] = to_string(cfg.final_fuse);
    j["dropout"] = cfg.dropout;
    j["leaky_slope"] = cfg.leaky_slope;
    j["dynamic"] = cfg.dynamic;
    j["dynamic_mode"] = to_string(cfg.dynamic_mode);
    j["graph_init"] = to_string(cfg.graph_init);
    j["share_offsets"] = cfg.share_offsets;
    j["frames"] = cfg.frames;
    j["temporal_kernel"] = cfg.temporal_kernel;
    j["ablate_blocks"] = cfg.ablate_blocks;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, "model config: " + std::string(e.what()));
    }
    require(j.is_object(), ErrorCode::config_invalid, "model config must be an object");
    ModelConfig cfg;
    try {
        for (auto& [key, value] : j.items()) {
            if (key == "layer_kind") cfg.layer_kind = layer_kind_from_string(value);
            else if (key == "hidden") cfg.hidden = value.get<int>();
            else if (key == "blocks") cfg.blocks = value.get<int>();
            else if (key == "near_hops") cfg.near_hops = value.get<int>();
            else if (key == "max_hops") cfg.max_hops = value.get<int>();
            else if (key == "squeeze") cfg.squeeze = value.get<double>();
            else if (key == "tail_anchored") cfg.tail_anchored = value.get<bool>();
            else if (key == "ring_fuse") cfg.ring_fuse = fuse_mode_from_string(value);
            else if (key == "final_fuse") cfg.final_fuse = fuse_mode_from_string(value);
            else if (key == "dropout") cfg.dropout = value.get<double>();
            else if (key == "leaky_slope") cfg.leaky_slope = value.get<double>();
            else if (key == "dynamic") cfg.dynamic = value.get<bool>();
            else if (key == "dynamic_mode") cfg.dynamic_mode = dynamic_mode_from_string(value);
            else if (key == "graph_init") cfg.graph_init = graph_init_from_string(value);
            else if (key == "share_offsets") cfg.share_offsets = value.get<bool>();
            else if (key == "frames") cfg.frames = value.get<int>();
            else if (key == "temporal_kernel") cfg.temporal_kernel = value.get<int>();
            else if (key == "ablate_blocks") cfg.ablate_blocks = value.get<bool>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else fail(ErrorCode::config_invalid, "model config: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_invalid, "model config: " + std::string(e.what()));
    }
    cfg.validate();
    return cfg;
}

// ---- model ------------------------------------------------------------------

namespace {

std::string ring_name(int k) { return "ring" + std::to_string(k); }

// [B*T,N,C] -> [B,C,T,N]
Tensor fold_to_frames(const Tensor& flat, int batch, int frames) {
    const int n = flat.shape()[1], c = flat.shape()[2];
    Tensor x = reshape(flat, {batch, frames, n, c});
    return transpose(transpose(x, 1, 3), 2, 3);
}

// [B,C,T,N] -> [B*T,N,C]
Tensor unfold_frames(const Tensor& bctn) {
    const int b = bctn.shape()[0], c = bctn.shape()[1], t = bctn.shape()[2],
              n = bctn.shape()[3];
    Tensor x = transpose(transpose(bctn, 2, 3), 1, 3);
    return reshape(x, {b * t, n, c});
}

}  // namespace

LiftModel::LiftModel(SkeletonTopology topo, ModelConfig cfg)
    : topo_(std::move(topo)),
      cfg_(cfg),
      part_(compute_hop_partition(topo_)),
      reg_(cfg.seed) {
    cfg_.validate();
    require(cfg_.near_hops >= 1 && cfg_.near_hops <= part_.max_hop,
            ErrorCode::invalid_hop_range, "near_hops exceeds the graph diameter");

    input_ = make_layer("input", 2, cfg_.hidden);
    for (int b = 0; b < cfg_.blocks; ++b) {
        std::string prefix = "block" + std::to_string(b);
        Block blk;
        blk.first = make_layer(prefix + ".a", cfg_.hidden, cfg_.hidden);
        if (cfg_.frames > 1) {
            // Temporal blocks mix frames with a convolution instead of a
            // second graph layer.
            blk.tcn_kernel = reg_.create(prefix + ".tcn.w",
                                         {cfg_.hidden, cfg_.hidden, cfg_.temporal_kernel},
                                         cfg_.hidden * cfg_.temporal_kernel);
            const int f = topo_.num_nodes * cfg_.hidden;
            blk.tcn_bn.gamma = reg_.create_const(prefix + ".tcn.bn.gamma", {f}, 1.0);
            blk.tcn_bn.beta = reg_.create_const(prefix + ".tcn.bn.beta", {f}, 0.0);
            blk.tcn_bn.running_mean =
                reg_.create_buffer(prefix + ".tcn.bn.running_mean", {f}, 0.0);
            blk.tcn_bn.running_var =
                reg_.create_buffer(prefix + ".tcn.bn.running_var", {f}, 1.0);
        } else {
            blk.second = make_layer(prefix + ".b", cfg_.hidden, cfg_.hidden);
        }
        blocks_.push_back(std::move(blk));
    }
    head_w_ = reg_.create("head.w", {topo_.num_nodes, cfg_.hidden, 3}, cfg_.hidden);
    head_b_ = reg_.create_const("head.b", {3}, 0.0);
}

LiftModel::LayerState LiftModel::make_layer(const std::string& prefix, int c_in, int c_out) {
    LayerState layer;
    layer.spec.num_nodes = topo_.num_nodes;
    layer.spec.c_in = c_in;
    layer.spec.c_out = c_out;
    layer.spec.near_hops = cfg_.near_hops;
    layer.spec.max_hops = cfg_.max_hops;
    layer.spec.squeeze = cfg_.squeeze;
    layer.spec.tail_anchored = cfg_.tail_anchored;
    layer.spec.ring_fuse = cfg_.ring_fuse;
    layer.spec.final_fuse = cfg_.final_fuse;

    const int n = topo_.num_nodes;
    if (cfg_.layer_kind == LayerKind::gcn) {
        layer.gcn_w = reg_.create(prefix + ".w", {c_in, c_out}, c_in);
        layer.flat_bias = reg_.create_const(prefix + ".bias", {c_out}, 0.0);
        layer.shared_graph = masked_row_graph(n, near_pairs(part_, 1));
    } else if (cfg_.layer_kind == LayerKind::lcn) {
        PairList pairs = near_pairs(part_, cfg_.max_hops);
        layer.lcn.pairs = pairs;
        layer.lcn.w = reg_.create(prefix + ".pairs.w",
                                  {static_cast<int>(pairs.size()), c_in, c_out}, c_in);
        layer.flat_bias = reg_.create_const(prefix + ".bias", {c_out}, 0.0);
        layer.shared_graph = masked_row_graph(n, pairs);
    } else {
        layer.spec.validate();
        PairList np = near_pairs(part_, cfg_.near_hops);
        layer.weights.near.pairs = np;
        layer.weights.near.w = reg_.create(prefix + ".near.w",
                                           {static_cast<int>(np.size()), c_in, c_in}, c_in);
        layer.branch_pairs.push_back(np);
        std::vector<int> widths = layer.spec.ring_widths();
        for (int k = cfg_.near_hops + 1; k <= cfg_.max_hops; ++k) {
            PairList rp = k <= part_.max_hop ? ring_pair_list(part_, k) : PairList{};
            BranchWeights bw;
            bw.pairs = rp;
            if (!rp.empty())
                bw.w = reg_.create(prefix + "." + ring_name(k) + ".w",
                                   {static_cast<int>(rp.size()), c_in,
                                    widths[k - cfg_.near_hops - 1]},
                                   c_in);
            layer.weights.rings.push_back(std::move(bw));
            layer.branch_pairs.push_back(rp);
        }
        layer.weights.merge_w = reg_.create(prefix + ".merge.w",
                                            {n, layer.spec.fused_width(), c_out},
                                            layer.spec.fused_width());
        layer.weights.merge_b = reg_.create_const(prefix + ".merge.b", {c_out}, 0.0);

        if (!cfg_.dynamic) {
            layer.const_graphs = static_branch_graphs(part_, layer.spec);
        } else {
            static const char* kBranchTag[1] = {"near"};
            if (cfg_.dynamic_mode != DynamicMode::only_o) {
                for (size_t b = 0; b < layer.branch_pairs.size(); ++b) {
                    if (layer.branch_pairs[b].empty()) {
                        layer.base.emplace_back();
                        continue;
                    }
                    std::string bname = b == 0 ? kBranchTag[0]
                                               : ring_name(cfg_.near_hops + static_cast<int>(b));
                    std::string name = prefix + ".base." + bname;
                    Rng stream = reg_.name_stream(name);
                    Tensor init =
                        base_graph_init(n, layer.branch_pairs[b], cfg_.graph_init, stream);
                    layer.base.push_back(reg_.create_values(name, {n, n}, init.value()));
                }
            }
            if (cfg_.dynamic_mode == DynamicMode::m_plus_alpha_o)
                layer.alpha = reg_.create_const(prefix + ".alpha", {}, 0.0);
            if (cfg_.dynamic_mode != DynamicMode::only_m) {
                const int e = embed_width(c_in);
                Shape wshape = cfg_.frames > 1 ? Shape{e, c_in, cfg_.temporal_kernel}
                                               : Shape{c_in, e};
                int fan = cfg_.frames > 1 ? c_in * cfg_.temporal_kernel : c_in;
                int heads = cfg_.share_offsets
                                ? 1
                                : static_cast<int>(layer.branch_pairs.size());
                for (int h = 0; h < heads; ++h) {
                    std::string hname =
                        cfg_.share_offsets
                            ? prefix
                            : prefix + "." +
                                  (h == 0 ? kBranchTag[0]
                                          : ring_name(cfg_.near_hops + h));
                    layer.theta.push_back(reg_.create(hname + ".theta", wshape, fan));
                    layer.phi.push_back(reg_.create(hname + ".phi", wshape, fan));
                }
            }
        }
    }

    const int f = n * c_out;
    layer.bn.gamma = reg_.create_const(prefix + ".bn.gamma", {f}, 1.0);
    layer.bn.beta = reg_.create_const(prefix + ".bn.beta", {f}, 0.0);
    layer.bn.running_mean = reg_.create_buffer(prefix + ".bn.running_mean", {f}, 0.0);
    layer.bn.running_var = reg_.create_buffer(prefix + ".bn.running_var", {f}, 1.0);
    return layer;
}

Tensor LiftModel::layer_forward(LayerState& layer, const Tensor& x,
                                const Tensor& frames_ctx) {
    if (cfg_.layer_kind == LayerKind::gcn)
        return add_broadcast(gcn_forward(x, layer.shared_graph, layer.gcn_w),
                             layer.flat_bias);
    if (cfg_.layer_kind == LayerKind::lcn)
        return add_broadcast(lcn_forward(x, layer.shared_graph, layer.lcn),
                             layer.flat_bias);

    if (!cfg_.dynamic)
        return hcsf_forward(x, layer.const_graphs, layer.weights, layer.spec);

    const int n = topo_.num_nodes;
    auto offsets_for = [&](size_t head) {
        if (cfg_.frames > 1) {
            Tensor ot = temporal_feature_offsets(frames_ctx, layer.theta[head],
                                                 layer.phi[head]);
            return reshape(ot, {ot.shape()[0] * ot.shape()[1], n, n});
        }
        return feature_offsets(x, layer.theta[head], layer.phi[head]);
    };
    Tensor shared_offsets;
    if (cfg_.dynamic_mode != DynamicMode::only_m && cfg_.share_offsets)
        shared_offsets = offsets_for(0);

    BranchGraphs graphs;
    for (size_t b = 0; b < layer.branch_pairs.size(); ++b) {
        Tensor g;
        if (!layer.branch_pairs[b].empty()) {
            Tensor off = shared_offsets;
            if (cfg_.dynamic_mode != DynamicMode::only_m && !cfg_.share_offsets)
                off = offsets_for(b);
            Tensor base = cfg_.dynamic_mode == DynamicMode::only_o ? Tensor{}
                                                                   : layer.base[b];
            g = combine_graph(base, layer.alpha, off, cfg_.dynamic_mode);
        }
        if (b == 0)
            graphs.near = g;
        else
            graphs.rings.push_back(g);
    }
    return hcsf_forward(x, graphs, layer.weights, layer.spec);
}

Tensor LiftModel::post(const Tensor& x, BatchNormState& bn, bool training, Rng& rng,
                       bool skip_act_drop) {
    const int b = x.shape()[0], n = x.shape()[1], c = x.shape()[2];
    Tensor flat = reshape(x, {b, n * c});
    Tensor y = reshape(batch_norm(flat, bn, training), {b, n, c});
    if (skip_act_drop) return y;
    y = leaky_relu(y, cfg_.leaky_slope);
    return dropout(y, cfg_.dropout, training, rng);
}

Tensor LiftModel::forward(const Tensor& x, bool training, Rng& dropout_rng) {
    const int n = topo_.num_nodes;
    if (cfg_.frames == 1) {
        require(x.rank() == 3 && x.shape()[1] == n && x.shape()[2] == 2,
                ErrorCode::shape_mismatch,
                "forward: expected [B," + std::to_string(n) + ",2], got " +
                    shape_to_string(x.shape()));
        Tensor h = post(layer_forward(input_, x, {}), input_.bn, training, dropout_rng);
        for (Block& blk : blocks_) {
            if (cfg_.ablate_blocks) break;
            Tensor a =
                post(layer_forward(blk.first, h, {}), blk.first.bn, training, dropout_rng);
            Tensor b2 = post(layer_forward(blk.second, a, {}), blk.second.bn, training,
                             dropout_rng, true);
            h = dropout(leaky_relu(add(b2, h), cfg_.leaky_slope), cfg_.dropout, training,
                        dropout_rng);
        }
        return add_broadcast(node_linear(h, head_w_), head_b_);
    }

    require(x.rank() == 4 && x.shape()[1] == cfg_.frames && x.shape()[2] == n &&
                x.shape()[3] == 2,
            ErrorCode::shape_mismatch,
            "forward: expected [B," + std::to_string(cfg_.frames) + "," +
                std::to_string(n) + ",2], got " + shape_to_string(x.shape()));
    const int batch = x.shape()[0], t = cfg_.frames;
    const bool needs_ctx = cfg_.dynamic && cfg_.dynamic_mode != DynamicMode::only_m;

    Tensor xf = reshape(x, {batch * t, n, 2});
    Tensor ctx = needs_ctx ? fold_to_frames(xf, batch, t) : Tensor{};
    Tensor h = post(layer_forward(input_, xf, ctx), input_.bn, training, dropout_rng);
    for (Block& blk : blocks_) {
        if (cfg_.ablate_blocks) break;
        Tensor ctx1 = needs_ctx ? fold_to_frames(h, batch, t) : Tensor{};
        Tensor a =
            post(layer_forward(blk.first, h, ctx1), blk.first.bn, training, dropout_rng);
        Tensor mixed = conv1d_temporal(fold_to_frames(a, batch, t), blk.tcn_kernel);
        Tensor c2 = post(unfold_frames(mixed), blk.tcn_bn, training, dropout_rng, true);
        h = dropout(leaky_relu(add(c2, h), cfg_.leaky_slope), cfg_.dropout, training,
                    dropout_rng);
    }
    Tensor center = reshape(
        slice(reshape(h, {batch, t, n, cfg_.hidden}), 1, t / 2, 1), {batch, n, cfg_.hidden});
    return add_broadcast(node_linear(center, head_w_), head_b_);
}

// ---- checkpoints ------------------------------------------------------------

std::string double_to_hex(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double hex_to_double(const std::string& s) {
    const char* p = s.c_str();
    const char* end = p + s.size();
    bool neg = false;
    if (p < end && (*p == '-' || *p == '+')) {
        neg = *p == '-';
        ++p;
    }
    require(end - p > 2 && p[0] == '0' && (p[1] == 'x' || p[1] == 'X'),
            ErrorCode::parse_error, "bad hex float '" + s + "'");
    p += 2;
    double out = 0.0;
    auto res = std::from_chars(p, end, out, std::chars_format::hex);
    require(res.ec == std::errc() && res.ptr == end, ErrorCode::parse_error,
            "bad hex float '" + s + "'");
    return neg ? -out : out;
}

namespace {

nlohmann::json tensor_entry(const Tensor& t) {
    nlohmann::json e;
    e["name"] = t.name();
    e["shape"] = t.shape();
    std::vector<std::string> hex;
    hex.reserve(t.value().size());
    for (double v : t.value()) hex.push_back(double_to_hex(v));
    e["hex"] = std::move(hex);
    return e;
}

void restore_tensor(const ParamRegistry& reg, const nlohmann::json& e) {
    std::string name;
    Shape shape;
    std::vector<std::string> hex;
    try {
        name = e.at("name").get<std::string>();
        shape = e.at("shape").get<Shape>();
        hex = e.at("hex").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::parse_error, "checkpoint entry: " + std::string(ex.what()));
    }
    Tensor t;
    try {
        t = reg.find(name);
    } catch (const Error&) {
        fail(ErrorCode::shape_conflict,
             "checkpoint tensor '" + name + "' does not exist in the model");
    }
    require(t.shape() == shape, ErrorCode::shape_conflict,
            "checkpoint tensor '" + name + "' has shape " + shape_to_string(shape) +
                ", model expects " + shape_to_string(t.shape()));
    require(hex.size() == t.value().size(), ErrorCode::shape_conflict,
            "checkpoint tensor '" + name + "' has wrong element count");
    for (size_t i = 0; i < hex.size(); ++i) t.value()[i] = hex_to_double(hex[i]);
}

}  // namespace

void save_checkpoint(const LiftModel& model, const std::string& path) {
    nlohmann::json j;
    j["schema"] = kCheckpointSchema;
    j["config"] = nlohmann::json::parse(model_config_to_json(model.config()));
    j["topology"] = nlohmann::json::parse(topology_to_json(model.topology()));
    nlohmann::json params = nlohmann::json::array();
    for (const Tensor& t : model.registry().params()) params.push_back(tensor_entry(t));
    nlohmann::json buffers = nlohmann::json::array();
    for (const Tensor& t : model.registry().buffers()) buffers.push_back(tensor_entry(t));
    j["params"] = std::move(params);
    j["buffers"] = std::move(buffers);

    std::ofstream out(path);
    require(out.good(), ErrorCode::io_failure, "cannot open '" + path + "' for writing");
    out << j.dump(1) << "\n";
    require(out.good(), ErrorCode::io_failure, "write to '" + path + "' failed");
}

LiftModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_failure, "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, "checkpoint: " + std::string(e.what()));
    }
    require(j.contains("schema"), ErrorCode::parse_error, "checkpoint has no schema tag");
    require(j["schema"] == kCheckpointSchema, ErrorCode::version_mismatch,
            "checkpoint schema is '" + j["schema"].get<std::string>() + "', expected '" +
                kCheckpointSchema + "'");

    ModelConfig cfg = model_config_from_json(j.at("config").dump());
    SkeletonTopology topo = topology_from_json(j.at("topology").dump());
    LiftModel model(std::move(topo), cfg);

    size_t restored = 0;
    for (const auto& e : j.at("params")) {
        restore_tensor(model.registry(), e);
        ++restored;
    }
    for (const auto& e : j.at("buffers")) {
        restore_tensor(model.registry(), e);
        ++restored;
    }
    require(restored == model.registry().params().size() +
                            model.registry().buffers().size(),
            ErrorCode::shape_conflict,
            "checkpoint does not cover every model tensor");
    return model;
}

}  // namespace poselift
