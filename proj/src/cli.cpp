// SPDX-License-Identifier: Apache-2.0
#include "poselift/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "poselift/gradcheck.hpp"
#include "poselift/metrics.hpp"

namespace poselift {
namespace {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_failure, "cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    require(!in.bad(), ErrorCode::io_failure, "read from '" + path + "' failed");
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io_failure, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    require(out.good(), ErrorCode::io_failure, "write to '" + path + "' failed");
}

json train_options_to_json(const TrainOptions& o) {
    json j;
    j["epochs"] = o.epochs;
    j["batch_size"] = o.batch_size;
    j["lr"] = o.lr;
    j["lr_decay"] = o.lr_decay;
    j["augment_flip"] = o.augment_flip;
    j["shuffle"] = o.shuffle;
    j["seed"] = o.seed;
    return j;
}

TrainOptions train_options_from_json(const json& j) {
    require(j.is_object(), ErrorCode::config_invalid, "training section must be an object");
    TrainOptions o;
    for (auto& [key, value] : j.items()) {
        if (key == "epochs") o.epochs = value.get<int>();
        else if (key == "batch_size") o.batch_size = value.get<int>();
        else if (key == "lr") o.lr = value.get<double>();
        else if (key == "lr_decay") o.lr_decay = value.get<double>();
        else if (key == "augment_flip") o.augment_flip = value.get<bool>();
        else if (key == "shuffle") o.shuffle = value.get<bool>();
        else if (key == "seed") o.seed = value.get<std::uint64_t>();
        else fail(ErrorCode::config_invalid, "training section: unknown key '" + key + "'");
    }
    return o;
}

void validate_train_options(const TrainOptions& o) {
    require(o.epochs >= 0, ErrorCode::config_invalid, "training.epochs must be non-negative");
    require(o.batch_size >= 2, ErrorCode::config_invalid,
            "training.batch_size must be at least 2");
    require(o.lr > 0.0, ErrorCode::config_invalid, "training.lr must be positive");
    require(o.lr_decay > 0.0 && o.lr_decay <= 1.0, ErrorCode::config_invalid,
            "training.lr_decay must lie in (0, 1]");
}

json metrics_config_to_json(const MetricsConfig& m) {
    json j;
    j["pck_threshold"] = m.pck_threshold;
    j["hard_fractions"] = m.hard_fractions;
    j["flip_average"] = m.flip_average;
    j["histogram_bins"] = m.histogram_bins;
    j["histogram_max"] = m.histogram_max;
    return j;
}

MetricsConfig metrics_config_from_json(const json& j) {
    require(j.is_object(), ErrorCode::config_invalid, "metrics section must be an object");
    MetricsConfig m;
    for (auto& [key, value] : j.items()) {
        if (key == "pck_threshold") m.pck_threshold = value.get<double>();
        else if (key == "hard_fractions") m.hard_fractions = value.get<std::vector<double>>();
        else if (key == "flip_average") m.flip_average = value.get<bool>();
        else if (key == "histogram_bins") m.histogram_bins = value.get<int>();
        else if (key == "histogram_max") m.histogram_max = value.get<double>();
        else fail(ErrorCode::config_invalid, "metrics section: unknown key '" + key + "'");
    }
    return m;
}

RunConfig run_config_from_json_value(const json& j) {
    require(j.is_object(), ErrorCode::config_invalid, "run config must be an object");
    RunConfig cfg;
    try {
        for (auto& [key, value] : j.items()) {
            if (key == "topology") cfg.topology = value.get<std::string>();
            else if (key == "model") cfg.model = model_config_from_json(value.dump());
            else if (key == "training") cfg.training = train_options_from_json(value);
            else if (key == "data") {
                require(value.is_object(), ErrorCode::config_invalid,
                        "data section must be an object");
                for (auto& [dkey, dval] : value.items()) {
                    if (dkey == "train") cfg.train_data = dval.get<std::string>();
                    else if (dkey == "test") cfg.test_data = dval.get<std::string>();
                    else fail(ErrorCode::config_invalid,
                              "data section: unknown key '" + dkey + "'");
                }
            } else if (key == "metrics") cfg.metrics = metrics_config_from_json(value);
            else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
            else fail(ErrorCode::config_invalid, "run config: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::config_invalid, "run config: " + std::string(e.what()));
    }
    validate_train_options(cfg.training);
    cfg.metrics.validate();
    return cfg;
}

// "section.key=value" assignments edit the JSON document before the strict
// parse, so typos in the path surface as unknown-key errors. Values parse as
// JSON first; anything that does not is taken as a bare string.
void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCode::config_invalid,
            "override must look like section.key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    std::vector<std::string> keys;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot - start);
        require(!part.empty(), ErrorCode::config_invalid,
                "override path has an empty segment: '" + path + "'");
        keys.push_back(part);
        if (dot == std::string::npos) break;
        start = dot + 1;
    }

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }

    try {
        json* node = &doc;
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
        (*node)[keys.back()] = value;
    } catch (const json::exception&) {
        fail(ErrorCode::config_invalid,
             "override '" + path + "' does not address an object");
    }
}

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// Per-sample mpjpe / pa-mpjpe means over the hardest slice at `fraction`.
json hardest_entry(const EvalSummary& s, double fraction) {
    const std::vector<int> idx = hardest_indices(s.sample_mpjpe, fraction);
    double hm = 0.0, hp = 0.0;
    for (int i : idx) {
        hm += s.sample_mpjpe[static_cast<std::size_t>(i)];
        hp += s.sample_pa_mpjpe[static_cast<std::size_t>(i)];
    }
    const double k = static_cast<double>(idx.size());
    json e;
    e["fraction"] = fraction;
    e["samples"] = static_cast<int>(idx.size());
    e["mpjpe"] = hm / k;
    e["pa_mpjpe"] = hp / k;
    return e;
}

json summary_to_json(const EvalSummary& s, const MetricsConfig& m) {
    json j;
    j["samples"] = s.samples;
    j["joints"] = s.joints;
    j["mpjpe"] = s.mpjpe;
    j["pa_mpjpe"] = s.pa_mpjpe;
    j["pck"] = s.pck;
    j["pck_threshold"] = s.pck_threshold;
    j["auc"] = s.auc;
    j["flip_average"] = m.flip_average;
    json hardest = json::array();
    for (double f : m.hard_fractions) hardest.push_back(hardest_entry(s, f));
    j["hardest"] = std::move(hardest);
    j["histogram"] = {
        {"bins", m.histogram_bins},
        {"lo", 0.0},
        {"hi", m.histogram_max},
        {"counts", error_histogram(s.sample_mpjpe, m.histogram_bins, 0.0, m.histogram_max)},
    };
    return j;
}

EvalSummary run_eval(LiftModel& model, const PoseDataset& ds, const MetricsConfig& m) {
    const double fraction = m.hard_fractions.empty() ? 0.25 : m.hard_fractions.front();
    return evaluate_model(model, ds, m.flip_average, m.pck_threshold, fraction);
}

// Model / dataset agreement is checked before anything is written so a
// mismatch counts as a configuration error, not a mid-run failure.
void check_dataset_fits(const PoseDataset& ds, const ModelConfig& mc,
                        const SkeletonTopology& topo, const std::string& label) {
    require(ds.num_joints == topo.num_nodes, ErrorCode::joint_count_mismatch,
            label + ": dataset has " + std::to_string(ds.num_joints) +
                " joints, the topology has " + std::to_string(topo.num_nodes));
    for (const PoseSample& s : ds.samples)
        require(s.frames == mc.frames, ErrorCode::shape_mismatch,
                label + ": sample has " + std::to_string(s.frames) +
                    " frames, the model expects " + std::to_string(mc.frames));
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_parent_dir(const std::string& path) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

struct TrainSetup {
    RunConfig cfg;
    SkeletonTopology topo;
    PoseDataset train_data;
    PoseDataset test_data;
    bool has_test = false;
    std::optional<LiftModel> model;
    std::string out_dir;
};

void run_training(TrainSetup& s) {
    std::filesystem::create_directories(s.out_dir);
    LiftModel& model = *s.model;
    const MetricsConfig& metrics = s.cfg.metrics;

    std::ofstream log(join_path(s.out_dir, "train.log"));
    require(log.good(), ErrorCode::io_failure,
            "cannot open '" + join_path(s.out_dir, "train.log") + "' for writing");
    log << "# poselift training log\n";
    log << "# started: " << timestamp_utc() << "\n";
    log << "# parameters: " << model.registry().param_count() << "\n";

    double best_value = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    const std::string best_metric = s.has_test ? "test_mpjpe" : "train_loss";
    json epoch_records = json::array();

    const EpochCallback cb = [&](const EpochStats& st) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%04d.ckpt", st.epoch);
        save_checkpoint(model, join_path(s.out_dir, name));

        double value = st.train_loss;
        char line[256];
        if (s.has_test) {
            value = run_eval(model, s.test_data, metrics).mpjpe;
            std::snprintf(line, sizeof line,
                          "epoch %4d lr %.17g loss %.17g test_mpjpe %.17g", st.epoch,
                          st.lr, st.train_loss, value);
        } else {
            std::snprintf(line, sizeof line, "epoch %4d lr %.17g loss %.17g", st.epoch,
                          st.lr, st.train_loss);
        }
        log << line << "\n";
        log.flush();
        std::printf("%s\n", line);

        json rec;
        rec["epoch"] = st.epoch;
        rec["lr"] = st.lr;
        rec["train_loss"] = st.train_loss;
        if (s.has_test) rec["test_mpjpe"] = value;
        epoch_records.push_back(std::move(rec));

        if (value < best_value) {
            best_value = value;
            best_epoch = st.epoch;
            save_checkpoint(model, join_path(s.out_dir, "best.ckpt"));
        }
    };

    const std::vector<EpochStats> history = fit(model, s.train_data, s.cfg.training, cb);
    if (best_epoch < 0) save_checkpoint(model, join_path(s.out_dir, "best.ckpt"));
    require(log.good(), ErrorCode::io_failure, "writing train.log failed");

    json report;
    report["schema"] = kReportSchema;
    report["config"] = json::parse(run_config_to_json(s.cfg));
    report["param_count"] = model.registry().param_count();
    report["epochs"] = std::move(epoch_records);
    if (!history.empty()) report["final_train_loss"] = history.back().train_loss;
    report["best"] = {{"epoch", best_epoch},
                      {"metric", best_metric},
                      {"value", best_epoch < 0 ? json() : json(best_value)}};
    const EvalSummary train_summary = run_eval(model, s.train_data, metrics);
    report["train"] = summary_to_json(train_summary, metrics);
    std::printf("train: mpjpe %.6g pa_mpjpe %.6g pck %.4f auc %.4f\n", train_summary.mpjpe,
                train_summary.pa_mpjpe, train_summary.pck, train_summary.auc);
    if (s.has_test) {
        const EvalSummary test_summary = run_eval(model, s.test_data, metrics);
        report["test"] = summary_to_json(test_summary, metrics);
        std::printf("test:  mpjpe %.6g pa_mpjpe %.6g pck %.4f auc %.4f\n",
                    test_summary.mpjpe, test_summary.pa_mpjpe, test_summary.pck,
                    test_summary.auc);
    }
    write_text_file(join_path(s.out_dir, "report.json"), report.dump(2) + "\n");
    std::printf("artifacts written to %s\n", s.out_dir.c_str());
}

}  // namespace

void MetricsConfig::validate() const {
    require(pck_threshold > 0.0, ErrorCode::config_invalid,
            "metrics.pck_threshold must be positive");
    for (double f : hard_fractions)
        require(f > 0.0 && f <= 1.0, ErrorCode::config_invalid,
                "metrics.hard_fractions entries must lie in (0, 1]");
    require(histogram_bins >= 1, ErrorCode::config_invalid,
            "metrics.histogram_bins must be at least 1");
    require(histogram_max > 0.0, ErrorCode::config_invalid,
            "metrics.histogram_max must be positive");
}

std::string RunConfig::resolved_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
    return "runs";
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["topology"] = cfg.topology;
    j["model"] = json::parse(model_config_to_json(cfg.model));
    j["training"] = train_options_to_json(cfg.training);
    j["data"] = {{"train", cfg.train_data}, {"test", cfg.test_data}};
    j["metrics"] = metrics_config_to_json(cfg.metrics);
    j["output_dir"] = cfg.output_dir;
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, "run config: " + std::string(e.what()));
    }
    return run_config_from_json_value(j);
}

SkeletonTopology resolve_topology(const std::string& spec) {
    require(!spec.empty(), ErrorCode::config_invalid,
            "topology must name a preset or a JSON file");
    if (std::filesystem::exists(spec)) return load_topology_json(spec);
    try {
        return topology_preset(spec);
    } catch (const Error&) {
        fail(ErrorCode::config_invalid,
             "topology '" + spec + "' is neither a preset nor an existing file");
    }
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    TrainSetup s;
    try {
        json doc;
        try {
            doc = json::parse(read_text_file(config_path));
        } catch (const json::exception& e) {
            fail(ErrorCode::parse_error, "run config: " + std::string(e.what()));
        }
        for (const std::string& o : overrides) apply_override(doc, o);
        s.cfg = run_config_from_json_value(doc);
        s.topo = resolve_topology(s.cfg.topology);
        require(!s.cfg.train_data.empty(), ErrorCode::config_invalid,
                "data.train is required");
        s.train_data = load_dataset_jsonl(s.cfg.train_data);
        check_dataset_fits(s.train_data, s.cfg.model, s.topo, "train data");
        if (!s.cfg.test_data.empty()) {
            s.test_data = load_dataset_jsonl(s.cfg.test_data);
            check_dataset_fits(s.test_data, s.cfg.model, s.topo, "test data");
            s.has_test = true;
        }
        s.model.emplace(s.topo, s.cfg.model);
        s.out_dir = s.cfg.resolved_output_dir();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift train: %s\n", e.what());
        return 1;
    }
    try {
        run_training(s);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift train: %s\n", e.what());
        return 2;
    }
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& report_path, const MetricsConfig& metrics) {
    std::optional<LiftModel> model;
    PoseDataset ds;
    try {
        metrics.validate();
        model.emplace(load_checkpoint(checkpoint_path));
        ds = load_dataset_jsonl(data_path);
        check_dataset_fits(ds, model->config(), model->topology(), "data");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift eval: %s\n", e.what());
        return 1;
    }
    try {
        const EvalSummary s = run_eval(*model, ds, metrics);
        std::printf("samples %d joints %d\n", s.samples, s.joints);
        std::printf("mpjpe %.17g\n", s.mpjpe);
        std::printf("pa_mpjpe %.17g\n", s.pa_mpjpe);
        std::printf("pck(%.4g) %.17g\n", s.pck_threshold, s.pck);
        std::printf("auc %.17g\n", s.auc);
        for (double f : metrics.hard_fractions) {
            const json h = hardest_entry(s, f);
            std::printf("hardest %.4g%%: mpjpe %.17g pa_mpjpe %.17g over %d samples\n",
                        f * 100.0, h["mpjpe"].get<double>(), h["pa_mpjpe"].get<double>(),
                        h["samples"].get<int>());
        }
        if (!report_path.empty()) {
            json report;
            report["schema"] = kReportSchema;
            report["checkpoint"] = checkpoint_path;
            report["data"] = data_path;
            report["metrics"] = metrics_config_to_json(metrics);
            report["results"] = summary_to_json(s, metrics);
            ensure_parent_dir(report_path);
            write_text_file(report_path, report.dump(2) + "\n");
            std::printf("report written to %s\n", report_path.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift eval: %s\n", e.what());
        return 2;
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    std::vector<std::pair<std::string, double>> results;
    try {
        results = gradient_check_suite(seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift gradcheck: %s\n", e.what());
        return 2;
    }
    bool ok = true;
    for (const auto& [name, err] : results) {
        const bool pass = err < kGradCheckTolerance;
        ok = ok && pass;
        std::printf("%-18s %.3e  %s\n", name.c_str(), err, pass ? "ok" : "FAIL");
    }
    std::printf("gradient check %s (tolerance %.1e, seed %llu)\n",
                ok ? "passed" : "FAILED", kGradCheckTolerance,
                static_cast<unsigned long long>(seed));
    return ok ? 0 : 2;
}

int cmd_graph(const std::string& topology_spec, int max_hop) {
    SkeletonTopology topo;
    HopPartition part;
    try {
        require(max_hop >= 0, ErrorCode::config_invalid, "max hop must be non-negative");
        topo = resolve_topology(topology_spec);
        part = compute_hop_partition(topo, max_hop);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift graph: %s\n", e.what());
        return 1;
    }
    std::printf("nodes %d edges %zu diameter %d max_hop %d\n", topo.num_nodes,
                topo.edges.size(), part.diameter(), part.max_hop);
    std::printf("hop distances:\n");
    for (int i = 0; i < part.num_nodes; ++i) {
        for (int j = 0; j < part.num_nodes; ++j)
            std::printf("%s%2d", j == 0 ? "  " : " ", part.dist(i, j));
        std::printf("\n");
    }
    for (int i = 0; i < part.num_nodes; ++i) {
        std::printf("node %2d", i);
        if (static_cast<std::size_t>(i) < topo.joint_names.size())
            std::printf(" (%s)", topo.joint_names[static_cast<std::size_t>(i)].c_str());
        std::printf(": eccentricity %d", part.eccentricity(i));
        for (int k = 1; k <= part.max_hop; ++k) {
            std::string members;
            for (int j = 0; j < part.num_nodes; ++j)
                if (part.dist(i, j) == k) members += (members.empty() ? "" : " ") + std::to_string(j);
            if (!members.empty()) std::printf(" | hop%d {%s}", k, members.c_str());
        }
        std::printf("\n");
    }
    return 0;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_path) {
    PoseDataset ds;
    try {
        require(!out_path.empty(), ErrorCode::config_invalid, "output path is required");
        // Generation is pure computation, so its failures are config errors.
        ds = synth_dataset(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift synth: %s\n", e.what());
        return 1;
    }
    try {
        ensure_parent_dir(out_path);
        save_dataset_jsonl(ds, out_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "poselift synth: %s\n", e.what());
        return 2;
    }
    std::printf("wrote %zu samples (%d frames each, %dx%d px, noise %.4g px) to %s\n",
                ds.samples.size(), cfg.frames, ds.image_width, ds.image_height,
                cfg.noise_std_2d, out_path.c_str());
    return 0;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"skeletal graph network toolkit for lifting 2d poses to 3d"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    CLI::App* train = app.add_subcommand("train", "train a model from a run config");
    train->add_option("config", config_path, "run config JSON file")->required();
    train->add_option("overrides", overrides,
                      "section.key=value edits applied to the config");

    std::string checkpoint_path, data_path, report_path;
    MetricsConfig metrics;
    bool no_flip = false;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval->add_option("--data", data_path, "dataset JSONL file")->required();
    eval->add_option("--report", report_path, "write a JSON report here");
    eval->add_option("--pck-threshold", metrics.pck_threshold,
                     "pck threshold in world units");
    eval->add_option("--hard-fraction", metrics.hard_fractions,
                     "hardest-slice fractions to report");
    eval->add_flag("--no-flip-average", no_flip, "single forward pass, no mirror");
    eval->add_option("--histogram-bins", metrics.histogram_bins);
    eval->add_option("--histogram-max", metrics.histogram_max);

    std::uint64_t gradcheck_seed = 7;
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "finite-difference audit of every layer");
    gradcheck->add_option("--seed", gradcheck_seed, "base seed for the random probes");

    std::string topology_spec = "human17";
    int max_hop = 0;
    CLI::App* graph = app.add_subcommand("graph", "print the hop structure of a skeleton");
    graph->add_option("--topology", topology_spec, "preset name or JSON file");
    graph->add_option("--max-hop", max_hop, "0 means up to the graph diameter");

    SynthConfig synth_cfg;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic pose dataset");
    synth->add_option("--out", synth_out, "output JSONL path")->required();
    synth->add_option("--samples", synth_cfg.num_samples, "number of samples");
    synth->add_option("--frames", synth_cfg.frames, "frames per sample");
    synth->add_option("--seed", synth_cfg.seed, "generator seed");
    synth->add_option("--width", synth_cfg.image_width, "image width in pixels");
    synth->add_option("--height", synth_cfg.image_height, "image height in pixels");
    synth->add_option("--focal", synth_cfg.focal_px, "focal length in pixels");
    synth->add_option("--noise", synth_cfg.noise_std_2d, "2d noise std in pixels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (train->parsed()) return cmd_train(config_path, overrides);
    if (eval->parsed()) {
        metrics.flip_average = !no_flip;
        return cmd_eval(checkpoint_path, data_path, report_path, metrics);
    }
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seed);
    if (graph->parsed()) return cmd_graph(topology_spec, max_hop);
    if (synth->parsed()) return cmd_synth(synth_cfg, synth_out);
    return 1;
}

}  // namespace poselift
