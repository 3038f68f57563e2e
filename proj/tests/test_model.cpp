// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "poselift/model.hpp"
#include "poselift/rng.hpp"

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

Tensor random_tensor(Shape shape, Rng& rng, bool rg = true) {
    std::vector<double> v(numel_of(shape));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::from_data(std::move(shape), std::move(v), rg);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return a.empty() ||
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

SkeletonTopology path4() {
    SkeletonTopology topo;
    topo.num_nodes = 4;
    topo.edges = {{0, 1}, {1, 2}, {2, 3}};
    topo.joint_names = {"a", "b", "c", "d"};
    topo.left_right_pairs = {};
    return topo;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.hidden = 4;
    cfg.blocks = 1;
    cfg.near_hops = 1;
    cfg.max_hops = 2;
    cfg.squeeze = 0.5;
    cfg.dropout = 0.0;
    cfg.seed = 7;
    return cfg;
}

struct TmpDir {
    std::filesystem::path dir;
    TmpDir() {
        dir = std::filesystem::temp_directory_path() / "model_test_tmp";
        std::filesystem::create_directories(dir);
    }
    ~TmpDir() { std::filesystem::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("config json round trips every field") {
    ModelConfig cfg;
    cfg.layer_kind = LayerKind::lcn;
    cfg.hidden = 48;
    cfg.blocks = 3;
    cfg.near_hops = 2;
    cfg.max_hops = 4;
    cfg.squeeze = 0.25;
    cfg.tail_anchored = true;
    cfg.ring_fuse = FuseMode::sum;
    cfg.final_fuse = FuseMode::concat;
    cfg.dropout = 0.1;
    cfg.leaky_slope = 0.05;
    cfg.dynamic = false;
    cfg.dynamic_mode = DynamicMode::m_plus_o;
    cfg.graph_init = GraphInit::random;
    cfg.share_offsets = false;
    cfg.frames = 9;
    cfg.temporal_kernel = 5;
    cfg.ablate_blocks = true;
    cfg.seed = 123456789ULL;

    ModelConfig back = model_config_from_json(model_config_to_json(cfg));
    CHECK(back.layer_kind == cfg.layer_kind);
    CHECK(back.hidden == cfg.hidden);
    CHECK(back.blocks == cfg.blocks);
    CHECK(back.near_hops == cfg.near_hops);
    CHECK(back.max_hops == cfg.max_hops);
    CHECK(back.squeeze == cfg.squeeze);
    CHECK(back.tail_anchored == cfg.tail_anchored);
    CHECK(back.ring_fuse == cfg.ring_fuse);
    CHECK(back.final_fuse == cfg.final_fuse);
    CHECK(back.dropout == cfg.dropout);
    CHECK(back.leaky_slope == cfg.leaky_slope);
    CHECK(back.dynamic == cfg.dynamic);
    CHECK(back.dynamic_mode == cfg.dynamic_mode);
    CHECK(back.graph_init == cfg.graph_init);
    CHECK(back.share_offsets == cfg.share_offsets);
    CHECK(back.frames == cfg.frames);
    CHECK(back.temporal_kernel == cfg.temporal_kernel);
    CHECK(back.ablate_blocks == cfg.ablate_blocks);
    CHECK(back.seed == cfg.seed);

    // Missing keys keep defaults.
    ModelConfig sparse = model_config_from_json(R"({"hidden": 12})");
    CHECK(sparse.hidden == 12);
    CHECK(sparse.blocks == ModelConfig{}.blocks);
    CHECK(sparse.seed == ModelConfig{}.seed);
}

TEST_CASE("config json rejects junk") {
    CHECK(throws_code(ErrorCode::config_invalid,
                      [] { model_config_from_json(R"({"hiden": 3})"); }));
    CHECK(throws_code(ErrorCode::config_invalid,
                      [] { model_config_from_json(R"({"hidden": 0})"); }));
    CHECK(throws_code(ErrorCode::config_invalid,
                      [] { model_config_from_json(R"({"dropout": 1.0})"); }));
    CHECK(throws_code(ErrorCode::config_invalid,
                      [] { model_config_from_json(R"({"temporal_kernel": 2})"); }));
    CHECK(throws_code(ErrorCode::config_invalid,
                      [] { model_config_from_json(R"({"hidden": "lots"})"); }));
    CHECK(throws_code(ErrorCode::config_invalid, [] {
        model_config_from_json(R"({"dynamic": true, "layer_kind": "gcn"})");
    }));
    CHECK(throws_code(ErrorCode::parse_error, [] { model_config_from_json("{nope"); }));
    CHECK(throws_code(ErrorCode::config_invalid, [] { model_config_from_json("[1,2]"); }));
    CHECK(throws_code(ErrorCode::config_invalid,
                      [] { layer_kind_from_string("transformer"); }));
    CHECK(layer_kind_from_string("hcsf") == LayerKind::hcsf);
    CHECK(layer_kind_from_string(to_string(LayerKind::gcn)) == LayerKind::gcn);
}

TEST_CASE("hex float strings round trip bit patterns") {
    Rng rng(99);
    std::vector<double> probes = {0.0,
                                  -0.0,
                                  1.0,
                                  -1.0,
                                  1e-308,
                                  -2.2250738585072014e-308,
                                  4.9e-324,
                                  1.7976931348623157e308,
                                  0.1,
                                  -1.0 / 3.0};
    for (int i = 0; i < 2000; ++i)
        probes.push_back(rng.uniform(-1e6, 1e6) *
                         std::pow(10.0, std::floor(rng.uniform(-20.0, 20.0))));
    for (double v : probes) {
        double back = hex_to_double(double_to_hex(v));
        CHECK(std::memcmp(&v, &back, sizeof v) == 0);
    }
    CHECK(throws_code(ErrorCode::parse_error, [] { hex_to_double("1.5"); }));
    CHECK(throws_code(ErrorCode::parse_error, [] { hex_to_double(""); }));
    CHECK(throws_code(ErrorCode::parse_error, [] { hex_to_double("0x1.8p1junk"); }));
}

TEST_CASE("registry streams depend on names only") {
    ParamRegistry a(11);
    ParamRegistry b(11);
    // Same names created in a different order, with an unrelated extra mixed in.
    Tensor a1 = a.create("w1", {3, 4}, 4);
    Tensor a2 = a.create("w2", {2, 2}, 2);
    Tensor b_extra = b.create("other", {5}, 5);
    Tensor b2 = b.create("w2", {2, 2}, 2);
    Tensor b1 = b.create("w1", {3, 4}, 4);
    CHECK(bitwise_equal(a1.value(), b1.value()));
    CHECK(bitwise_equal(a2.value(), b2.value()));

    ParamRegistry c(12);
    Tensor c1 = c.create("w1", {3, 4}, 4);
    CHECK(!bitwise_equal(a1.value(), c1.value()));

    CHECK(throws_code(ErrorCode::invalid_spec, [&] { a.create("w1", {1}, 1); }));
    CHECK(a.param_count() == 3 * 4 + 2 * 2);
    CHECK(a.find("w2").shape() == Shape{2, 2});
    CHECK(throws_code(ErrorCode::invalid_spec, [&] { a.find("nope"); }));

    Tensor buf = a.create_buffer("stat", {3}, 0.5);
    CHECK(a.param_count() == 3 * 4 + 2 * 2);  // buffers not counted
    CHECK(a.buffers().size() == 1);
    CHECK(a.find("stat").value() == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("static forward shapes and eval determinism for every layer kind") {
    SkeletonTopology topo = human17_topology();
    for (LayerKind kind : {LayerKind::hcsf, LayerKind::lcn, LayerKind::gcn}) {
        ModelConfig cfg;
        cfg.layer_kind = kind;
        cfg.hidden = 8;
        cfg.blocks = 2;
        cfg.dropout = 0.25;
        LiftModel model(topo, cfg);

        Rng data_rng(5);
        Tensor x = random_tensor({3, 17, 2}, data_rng, false);
        Rng r1(1), r2(1), r3(2);
        Tensor out = model.forward(x, false, r1);
        CHECK(out.shape() == Shape{3, 17, 3});
        Tensor again = model.forward(x, false, r2);
        CHECK(bitwise_equal(out.value(), again.value()));
        // Eval ignores the rng entirely.
        Tensor other = model.forward(x, false, r3);
        CHECK(bitwise_equal(out.value(), other.value()));
    }
}

TEST_CASE("training dropout draws from the passed stream") {
    LiftModel model(human17_topology(), []() {
        ModelConfig c;
        c.hidden = 8;
        c.blocks = 1;
        c.dropout = 0.5;
        return c;
    }());
    Rng data_rng(3);
    Tensor x = random_tensor({2, 17, 2}, data_rng, false);
    Rng r1(10), r2(10), r3(11);
    Tensor a = model.forward(x, true, r1);
    Tensor b = model.forward(x, true, r2);
    Tensor c = model.forward(x, true, r3);
    CHECK(bitwise_equal(a.value(), b.value()));
    CHECK(!bitwise_equal(a.value(), c.value()));
}

TEST_CASE("input shape is validated") {
    LiftModel model(human17_topology(), ModelConfig{});
    Rng rng(1);
    Tensor bad = random_tensor({2, 16, 2}, rng, false);
    CHECK(throws_code(ErrorCode::shape_mismatch,
                      [&] { Rng r(0); model.forward(bad, false, r); }));
    Tensor flat = random_tensor({17, 2}, rng, false);
    CHECK(throws_code(ErrorCode::shape_mismatch,
                      [&] { Rng r(0); model.forward(flat, false, r); }));

    ModelConfig deep;
    deep.near_hops = 9;  // human17 diameter is 8
    deep.max_hops = 10;
    CHECK(throws_code(ErrorCode::invalid_hop_range,
                      [&] { LiftModel m(human17_topology(), deep); }));
}

TEST_CASE("same-named parameters match between static and dynamic models") {
    ModelConfig stat;
    stat.hidden = 8;
    stat.blocks = 1;
    stat.seed = 21;
    ModelConfig dyn = stat;
    dyn.dynamic = true;
    dyn.dynamic_mode = DynamicMode::m_plus_alpha_o;
    dyn.graph_init = GraphInit::physical;

    LiftModel ms(human17_topology(), stat);
    LiftModel md(human17_topology(), dyn);
    CHECK(md.registry().param_count() > ms.registry().param_count());

    for (const Tensor& p : ms.registry().params()) {
        Tensor q = md.registry().find(p.name());
        REQUIRE(q.shape() == p.shape());
        CHECK(bitwise_equal(p.value(), q.value()));
    }
}

TEST_CASE("zero blend weight reproduces the static model bit for bit") {
    ModelConfig stat;
    stat.hidden = 8;
    stat.blocks = 2;
    stat.dropout = 0.25;
    stat.seed = 31;
    ModelConfig dyn = stat;
    dyn.dynamic = true;
    dyn.dynamic_mode = DynamicMode::m_plus_alpha_o;
    dyn.graph_init = GraphInit::physical;

    LiftModel ms(human17_topology(), stat);
    LiftModel md(human17_topology(), dyn);
    CHECK(md.registry().find("input.alpha").value()[0] == 0.0);

    Rng data_rng(8);
    Tensor x = random_tensor({3, 17, 2}, data_rng, false);
    Rng r1(4), r2(4);
    Tensor eval_s = ms.forward(x, false, r1);
    Tensor eval_d = md.forward(x, false, r2);
    CHECK(bitwise_equal(eval_s.value(), eval_d.value()));

    Rng t1(5), t2(5);
    Tensor train_s = ms.forward(x, true, t1);
    Tensor train_d = md.forward(x, true, t2);
    CHECK(bitwise_equal(train_s.value(), train_d.value()));

    // Nudging the blend weight breaks the tie, so the dynamic path is live.
    md.registry().find("input.alpha").value()[0] = 0.25;
    Rng r3(4);
    Tensor moved = md.forward(x, false, r3);
    CHECK(!bitwise_equal(eval_s.value(), moved.value()));
}

TEST_CASE("ablated blocks equal a model with no blocks") {
    ModelConfig none;
    none.hidden = 8;
    none.blocks = 0;
    none.seed = 17;
    ModelConfig ablated = none;
    ablated.blocks = 3;
    ablated.ablate_blocks = true;

    LiftModel m0(human17_topology(), none);
    LiftModel m3(human17_topology(), ablated);
    Rng data_rng(2);
    Tensor x = random_tensor({2, 17, 2}, data_rng, false);
    Rng r1(9), r2(9);
    Tensor y0 = m0.forward(x, true, r1);
    Tensor y3 = m3.forward(x, true, r2);
    CHECK(bitwise_equal(y0.value(), y3.value()));
}

TEST_CASE("whole static model passes a finite difference check") {
    LiftModel model(path4(), tiny_config());
    Rng data_rng(14);
    Tensor x = random_tensor({2, 4, 2}, data_rng, true);
    Tensor target = random_tensor({2, 4, 3}, data_rng, false);

    std::vector<Tensor> inputs = model.registry().params();
    inputs.push_back(x);
    auto f = [&](const std::vector<Tensor>&) {
        Rng unused(0);
        return l1_loss(model.forward(x, true, unused), target);
    };
    // The loss is O(1), so the difference quotient carries ~1 ulp / 2 eps of
    // noise; gradients below 1e-6 are unresolvable and excluded via floor.
    double err = finite_diff_check(f, inputs, 1e-5, 1e-6);
    CHECK(err < 5e-5);
}

TEST_CASE("whole dynamic temporal model passes a finite difference check") {
    ModelConfig cfg = tiny_config();
    cfg.frames = 3;
    cfg.temporal_kernel = 3;
    cfg.dynamic = true;
    cfg.dynamic_mode = DynamicMode::m_plus_alpha_o;
    cfg.graph_init = GraphInit::physical;
    cfg.seed = 15;
    LiftModel model(path4(), cfg);
    // Move the blend weights off zero so the offset heads get real gradients.
    model.registry().find("input.alpha").value()[0] = 0.3;
    model.registry().find("block0.a.alpha").value()[0] = -0.2;

    Rng data_rng(16);
    Tensor x = random_tensor({2, 3, 4, 2}, data_rng, true);
    Tensor target = random_tensor({2, 4, 3}, data_rng, false);

    std::vector<Tensor> inputs = model.registry().params();
    inputs.push_back(x);
    auto f = [&](const std::vector<Tensor>&) {
        Rng unused(0);
        return l1_loss(model.forward(x, false, unused), target);
    };
    double err = finite_diff_check(f, inputs, 1e-5, 1e-6);
    CHECK(err < 5e-5);
}

TEST_CASE("temporal model predicts from the center frame when static") {
    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.blocks = 2;
    cfg.frames = 5;
    cfg.dropout = 0.25;
    cfg.ablate_blocks = true;  // keep only frame-local compute
    LiftModel model(human17_topology(), cfg);

    Rng data_rng(6);
    Tensor x = random_tensor({2, 5, 17, 2}, data_rng, false);
    Rng r1(1);
    Tensor base = model.forward(x, false, r1);
    CHECK(base.shape() == Shape{2, 17, 3});

    // Eval mode plus ablated blocks: only frame 2 reaches the head.
    Tensor jiggled = random_tensor({2, 5, 17, 2}, data_rng, false);
    for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 17; ++j)
            for (int c = 0; c < 2; ++c)
                jiggled.set({b, 2, j, c}, x.get({b, 2, j, c}));
    Rng r2(1);
    Tensor same = model.forward(jiggled, false, r2);
    CHECK(bitwise_equal(base.value(), same.value()));

    // Change the center frame and the output must move.
    Tensor center_moved = random_tensor({2, 5, 17, 2}, data_rng, false);
    for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 5; ++t)
            for (int j = 0; j < 17; ++j)
                for (int c = 0; c < 2; ++c)
                    if (t != 2) center_moved.set({b, t, j, c}, x.get({b, t, j, c}));
    Rng r3(1);
    Tensor different = model.forward(center_moved, false, r3);
    CHECK(!bitwise_equal(base.value(), different.value()));
}

TEST_CASE("temporal blocks mix frames through the convolution") {
    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.blocks = 1;
    cfg.frames = 3;
    cfg.dropout = 0.0;
    LiftModel model(human17_topology(), cfg);

    Rng data_rng(7);
    Tensor x = random_tensor({2, 3, 17, 2}, data_rng, false);
    Rng r1(1);
    Tensor base = model.forward(x, false, r1);
    CHECK(base.shape() == Shape{2, 17, 3});

    Tensor moved = random_tensor({2, 3, 17, 2}, data_rng, false);
    for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 17; ++j)
            for (int c = 0; c < 2; ++c)
                moved.set({b, 1, j, c}, x.get({b, 1, j, c}));
    Rng r2(1);
    Tensor out = model.forward(moved, false, r2);
    CHECK(!bitwise_equal(base.value(), out.value()));

    Tensor bad = random_tensor({2, 4, 17, 2}, data_rng, false);
    CHECK(throws_code(ErrorCode::shape_mismatch,
                      [&] { Rng r(0); model.forward(bad, false, r); }));
}

TEST_CASE("dynamic graph variants build and run") {
    Rng data_rng(9);
    Tensor x = random_tensor({2, 17, 2}, data_rng, false);

    SUBCASE("base graphs only") {
        ModelConfig cfg;
        cfg.hidden = 8;
        cfg.blocks = 1;
        cfg.dynamic = true;
        cfg.dynamic_mode = DynamicMode::only_m;
        cfg.graph_init = GraphInit::random;
        LiftModel model(human17_topology(), cfg);
        CHECK(throws_code(ErrorCode::invalid_spec,
                          [&] { model.registry().find("input.theta"); }));
        CHECK(throws_code(ErrorCode::invalid_spec,
                          [&] { model.registry().find("input.alpha"); }));
        Rng r(1);
        CHECK(model.forward(x, false, r).shape() == Shape{2, 17, 3});
    }
    SUBCASE("offsets only") {
        ModelConfig cfg;
        cfg.hidden = 8;
        cfg.blocks = 1;
        cfg.dynamic = true;
        cfg.dynamic_mode = DynamicMode::only_o;
        LiftModel model(human17_topology(), cfg);
        CHECK(throws_code(ErrorCode::invalid_spec,
                          [&] { model.registry().find("input.base.near"); }));
        model.registry().find("input.theta");
        Rng r(1);
        CHECK(model.forward(x, false, r).shape() == Shape{2, 17, 3});
    }
    SUBCASE("per-branch offset heads") {
        ModelConfig cfg;
        cfg.hidden = 8;
        cfg.blocks = 1;
        cfg.dynamic = true;
        cfg.dynamic_mode = DynamicMode::m_plus_o;
        cfg.share_offsets = false;
        LiftModel model(human17_topology(), cfg);
        model.registry().find("input.near.theta");
        model.registry().find("input.ring2.phi");
        model.registry().find("input.ring3.theta");
        CHECK(throws_code(ErrorCode::invalid_spec,
                          [&] { model.registry().find("input.theta"); }));
        Rng r(1);
        CHECK(model.forward(x, false, r).shape() == Shape{2, 17, 3});
    }
    SUBCASE("temporal offsets share one head per layer") {
        ModelConfig cfg;
        cfg.hidden = 8;
        cfg.blocks = 1;
        cfg.frames = 3;
        cfg.dynamic = true;
        cfg.dynamic_mode = DynamicMode::m_plus_alpha_o;
        LiftModel model(human17_topology(), cfg);
        // Offset kernels are [E, C, F] in the temporal regime.
        CHECK(model.registry().find("input.theta").shape() == Shape{4, 2, 3});
        CHECK(model.registry().find("block0.a.phi").shape() == Shape{4, 8, 3});
        Rng data(10);
        Tensor xt = random_tensor({2, 3, 17, 2}, data, false);
        Rng r(1);
        CHECK(model.forward(xt, false, r).shape() == Shape{2, 17, 3});
    }
}

TEST_CASE("checkpoints restore every tensor bit for bit") {
    TmpDir tmp;
    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.blocks = 1;
    cfg.dynamic = true;
    cfg.dynamic_mode = DynamicMode::m_plus_alpha_o;
    cfg.dropout = 0.25;
    cfg.seed = 1234;
    LiftModel model(human17_topology(), cfg);

    // Make state unlike any fresh init: train-mode passes move the running
    // stats, and a few direct pokes give awkward values.
    Rng data_rng(3);
    Tensor x = random_tensor({4, 17, 2}, data_rng, false);
    Rng drop(77);
    model.forward(x, true, drop);
    model.forward(x, true, drop);
    model.registry().find("input.alpha").value()[0] = -0.375;
    model.registry().find("head.b").value()[1] = 1.0 / 3.0;

    std::string path = tmp.file("model.ckpt");
    save_checkpoint(model, path);
    LiftModel loaded = load_checkpoint(path);

    CHECK(loaded.config().hidden == cfg.hidden);
    CHECK(loaded.config().dynamic == cfg.dynamic);
    CHECK(loaded.topology().num_nodes == 17);
    REQUIRE(loaded.registry().params().size() == model.registry().params().size());
    REQUIRE(loaded.registry().buffers().size() == model.registry().buffers().size());
    for (const Tensor& p : model.registry().params())
        CHECK(bitwise_equal(p.value(), loaded.registry().find(p.name()).value()));
    for (const Tensor& b : model.registry().buffers())
        CHECK(bitwise_equal(b.value(), loaded.registry().find(b.name()).value()));

    Rng r1(5), r2(5);
    Tensor y1 = model.forward(x, false, r1);
    Tensor y2 = loaded.forward(x, false, r2);
    CHECK(bitwise_equal(y1.value(), y2.value()));
}

TEST_CASE("checkpoint loader rejects damaged files") {
    TmpDir tmp;
    ModelConfig cfg = tiny_config();
    LiftModel model(path4(), cfg);
    std::string good = tmp.file("good.ckpt");
    save_checkpoint(model, good);

    auto tamper = [&](const std::string& name,
                      const std::function<void(nlohmann::json&)>& fn) {
        std::ifstream in(good);
        nlohmann::json j = nlohmann::json::parse(in);
        fn(j);
        std::string path = tmp.file(name);
        std::ofstream out(path);
        out << j.dump();
        out.close();
        return path;
    };

    std::string bad_schema =
        tamper("schema.ckpt", [](nlohmann::json& j) { j["schema"] = "poselift.checkpoint.v9"; });
    CHECK(throws_code(ErrorCode::version_mismatch, [&] { load_checkpoint(bad_schema); }));

    std::string no_schema =
        tamper("noschema.ckpt", [](nlohmann::json& j) { j.erase("schema"); });
    CHECK(throws_code(ErrorCode::parse_error, [&] { load_checkpoint(no_schema); }));

    std::string dropped =
        tamper("dropped.ckpt", [](nlohmann::json& j) { j["params"].erase(0); });
    CHECK(throws_code(ErrorCode::shape_conflict, [&] { load_checkpoint(dropped); }));

    std::string renamed = tamper("renamed.ckpt", [](nlohmann::json& j) {
        j["params"][0]["name"] = "who.is.this";
    });
    CHECK(throws_code(ErrorCode::shape_conflict, [&] { load_checkpoint(renamed); }));

    std::string reshaped = tamper("reshaped.ckpt", [](nlohmann::json& j) {
        j["params"][0]["shape"] = std::vector<int>{1, 2};
    });
    CHECK(throws_code(ErrorCode::shape_conflict, [&] { load_checkpoint(reshaped); }));

    std::string corrupt = tamper("corrupt.ckpt", [](nlohmann::json& j) {
        j["params"][0]["hex"][0] = "0xnope";
    });
    CHECK(throws_code(ErrorCode::parse_error, [&] { load_checkpoint(corrupt); }));

    std::string garbled = tmp.file("garbled.ckpt");
    { std::ofstream out(garbled); out << "{{{{"; }
    CHECK(throws_code(ErrorCode::parse_error, [&] { load_checkpoint(garbled); }));

    CHECK(throws_code(ErrorCode::io_failure,
                      [&] { load_checkpoint(tmp.file("never_written.ckpt")); }));
    CHECK(throws_code(ErrorCode::io_failure, [&] {
        save_checkpoint(model, (tmp.dir / "no_dir" / "x.ckpt").string());
    }));
}

TEST_CASE("split-distance layers spend fewer parameters than full-width local ones") {
    ModelConfig narrow;
    narrow.layer_kind = LayerKind::hcsf;
    narrow.hidden = 64;
    narrow.blocks = 2;
    narrow.near_hops = 1;
    narrow.max_hops = 3;
    narrow.squeeze = 0.125;
    ModelConfig wide = narrow;
    wide.layer_kind = LayerKind::lcn;

    LiftModel a(human17_topology(), narrow);
    LiftModel b(human17_topology(), wide);
    CHECK(a.registry().param_count() < b.registry().param_count());
}
