// SPDX-License-Identifier: Apache-2.0
#include "poselift/gradcheck.hpp"

#include <functional>

#include "poselift/dynamic_graph.hpp"
#include "poselift/layers.hpp"
#include "poselift/model.hpp"

namespace poselift {

namespace {

Tensor rand_grad(Shape shape, Rng& rng) {
    std::vector<double> v(numel_of(shape));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::from_data(std::move(shape), std::move(v), true);
}

SkeletonTopology chain4() {
    SkeletonTopology topo;
    topo.num_nodes = 4;
    topo.edges = {{0, 1}, {1, 2}, {2, 3}};
    topo.joint_names = {"r0", "r1", "r2", "r3"};
    return topo;
}

// The difference quotient on these O(1)-output graphs carries about one ulp
// of evaluation noise per call; gradients below this floor are unresolvable.
constexpr double kFloor = 1e-6;

double check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
             std::vector<Tensor>& inputs) {
    // Mean readout keeps the probed scalar O(0.1): the difference quotient's
    // noise is ulp(f)/(2 eps), so a small f keeps it safely under kFloor.
    auto scaled = [&](const std::vector<Tensor>& v) { return mean_all(f(v)); };
    return finite_diff_check(scaled, inputs, 1e-5, kFloor);
}

}  // namespace

std::vector<std::pair<std::string, double>> gradient_check_suite(std::uint64_t seed) {
    std::vector<std::pair<std::string, double>> report;
    SkeletonTopology topo = chain4();
    HopPartition part = compute_hop_partition(topo);

    {
        Rng rng(derive_seed(seed, "gcn"));
        Tensor a_hat = masked_row_graph(4, near_pairs(part, 1));
        std::vector<Tensor> in = {rand_grad({2, 4, 3}, rng), rand_grad({3, 2}, rng)};
        report.emplace_back("gcn", check([&](const std::vector<Tensor>& v) {
                                return gcn_forward(v[0], a_hat, v[1]);
                            }, in));
    }
    {
        Rng rng(derive_seed(seed, "lcn"));
        BranchWeights bw;
        bw.pairs = near_pairs(part, 2);
        Tensor a = masked_row_graph(4, bw.pairs);
        std::vector<Tensor> in = {
            rand_grad({2, 4, 3}, rng),
            rand_grad({static_cast<int>(bw.pairs.size()), 3, 2}, rng)};
        report.emplace_back("lcn", check([&](const std::vector<Tensor>& v) {
                                BranchWeights w = bw;
                                w.w = v[1];
                                return lcn_forward(v[0], a, w);
                            }, in));
    }

    HcsfSpec spec;
    spec.num_nodes = 4;
    spec.c_in = 3;
    spec.c_out = 2;
    spec.near_hops = 1;
    spec.max_hops = 2;
    spec.squeeze = 0.5;
    spec.validate();
    PairList np = near_pairs(part, 1);
    PairList rp = ring_pair_list(part, 2);
    const int ring_w = spec.ring_widths()[0];

    auto hcsf_of = [&](const std::vector<Tensor>& v, const BranchGraphs& g) {
        HcsfWeights w;
        w.near = {np, v[1]};
        w.rings.push_back({rp, v[2]});
        w.merge_w = v[3];
        w.merge_b = v[4];
        return hcsf_forward(v[0], g, w, spec);
    };
    auto hcsf_inputs = [&](Rng& rng) {
        return std::vector<Tensor>{
            rand_grad({2, 4, 3}, rng),
            rand_grad({static_cast<int>(np.size()), 3, 3}, rng),
            rand_grad({static_cast<int>(rp.size()), 3, ring_w}, rng),
            rand_grad({4, spec.fused_width(), 2}, rng),
            rand_grad({2}, rng)};
    };

    {
        Rng rng(derive_seed(seed, "hcsf_static"));
        BranchGraphs g = static_branch_graphs(part, spec);
        std::vector<Tensor> in = hcsf_inputs(rng);
        report.emplace_back("hcsf_static", check([&](const std::vector<Tensor>& v) {
                                return hcsf_of(v, g);
                            }, in));
    }
    {
        Rng rng(derive_seed(seed, "hcsf_dynamic"));
        std::vector<Tensor> in = hcsf_inputs(rng);
        Rng mrng(derive_seed(seed, "hcsf_dynamic_bases"));
        Tensor m_near = Tensor(base_graph_init(4, np, GraphInit::random, mrng).node());
        Tensor m_ring = Tensor(base_graph_init(4, rp, GraphInit::random, mrng).node());
        m_near.node()->requires_grad = true;
        m_ring.node()->requires_grad = true;
        in.push_back(m_near);                           // v[5]
        in.push_back(m_ring);                           // v[6]
        in.push_back(Tensor::from_data({}, {0.3}, true));  // v[7] blend
        const int e = embed_width(3);
        in.push_back(rand_grad({3, e}, rng));           // v[8] theta
        in.push_back(rand_grad({3, e}, rng));           // v[9] phi
        report.emplace_back(
            "hcsf_dynamic", check([&](const std::vector<Tensor>& v) {
                Tensor offsets = feature_offsets(v[0], v[8], v[9]);
                BranchGraphs g;
                g.near = combine_graph(v[5], v[7], offsets, DynamicMode::m_plus_alpha_o);
                g.rings.push_back(
                    combine_graph(v[6], v[7], offsets, DynamicMode::m_plus_alpha_o));
                return hcsf_of(v, g);
            }, in));
    }
    {
        Rng rng(derive_seed(seed, "temporal_offsets"));
        const int e = embed_width(3);
        std::vector<Tensor> in = {rand_grad({2, 3, 4, 4}, rng),
                                  rand_grad({e, 3, 3}, rng),
                                  rand_grad({e, 3, 3}, rng)};
        report.emplace_back("temporal_offsets",
                            check([](const std::vector<Tensor>& v) {
                                return temporal_feature_offsets(v[0], v[1], v[2]);
                            }, in));
    }
    {
        Rng rng(derive_seed(seed, "batch_norm"));
        BatchNormState state = BatchNormState::make(5);
        std::vector<Tensor> in = {rand_grad({4, 5}, rng), state.gamma, state.beta};
        report.emplace_back("batch_norm", check([&](const std::vector<Tensor>& v) {
                                BatchNormState s = state;
                                s.gamma = v[1];
                                s.beta = v[2];
                                return batch_norm(v[0], s, true);
                            }, in));
    }
    {
        Rng rng(derive_seed(seed, "temporal_conv"));
        std::vector<Tensor> in = {rand_grad({2, 3, 5, 4}, rng),
                                  rand_grad({2, 3, 3}, rng)};
        report.emplace_back("temporal_conv", check([](const std::vector<Tensor>& v) {
                                return conv1d_temporal(v[0], v[1], 2, 1);
                            }, in));
    }
    {
        Rng rng(derive_seed(seed, "full_model"));
        ModelConfig cfg;
        cfg.hidden = 4;
        cfg.blocks = 1;
        cfg.near_hops = 1;
        cfg.max_hops = 2;
        cfg.squeeze = 0.5;
        cfg.dropout = 0.0;
        cfg.seed = derive_seed(seed, "full_model_params");
        LiftModel model(topo, cfg);
        // Batch 4: with only two rows the batch statistics can turn nearly
        // singular, and the resulting stiffness shoves activations across
        // their kink under the probe step.
        Tensor x = rand_grad({4, 4, 2}, rng);
        std::vector<Tensor> in = model.registry().params();
        in.push_back(x);
        report.emplace_back("full_model", check([&](const std::vector<Tensor>&) {
                                Rng unused(0);
                                return model.forward(x, true, unused);
                            }, in));
    }
    return report;
}

}  // namespace poselift
