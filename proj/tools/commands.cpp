#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "ncn/error.hpp"
#include "ncn/trainer.hpp"
#include "run_spec.hpp"

namespace ncn::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void log(const std::string& msg) { std::cerr << "[ncn] " << msg << '\n'; }

std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw DataError("cannot write " + path.string());
}

struct Inputs {
    Graph graph;
    std::optional<SplitSpec> split;
};

Inputs inputs_from(const RunSpec& spec) {
    if (spec.dataset) {
        auto ds = load_dataset(*spec.dataset);
        log("loaded " + spec.dataset->string() + ": n=" + std::to_string(ds.graph.num_nodes()) +
            " m=" + std::to_string(ds.graph.num_edges()) + " d=" + std::to_string(ds.graph.feature_dim()));
        return {std::move(ds.graph), std::move(ds.split)};
    }
    auto g = generate_sbm(*spec.sbm);
    log("generated sbm: n=" + std::to_string(g.num_nodes()) + " m=" + std::to_string(g.num_edges()));
    return {std::move(g), std::nullopt};
}

// Loads a grid file checked against the graph and the expected propagation,
// or builds one.
GridTensor grid_for(const Graph& g, const PropagationSpec& prop, const std::optional<fs::path>& file,
                    unsigned threads = 1) {
    if (!file) return build_grid(g, prop, threads);
    GridExpectation expect;
    expect.graph_checksum = graph_checksum(g);
    expect.K = prop.K;
    expect.d = static_cast<std::uint32_t>(g.feature_dim());
    expect.n = g.num_nodes();
    auto grid = load_grid(*file, expect);
    if (grid.scheme != prop.scheme) {
        throw DataError("grid file uses scheme " + to_string(grid.scheme) + ", expected " + to_string(prop.scheme));
    }
    if (prop.scheme == Scheme::ppr && grid.gamma != prop.gamma) {
        throw DataError("grid file gamma " + num(grid.gamma) + " differs from configured " + num(prop.gamma));
    }
    log("loaded grid " + file->string());
    return grid;
}

ordered_json split_json(const SplitSpec& s) { return {{"train", s.train}, {"val", s.val}, {"test", s.test}}; }

std::vector<NodeId> select_nodes(const std::string& part, std::size_t n, const std::optional<SplitSpec>& split) {
    if (part == "all") {
        std::vector<NodeId> ids(n);
        std::iota(ids.begin(), ids.end(), NodeId{0});
        return ids;
    }
    if (part != "train" && part != "val" && part != "test") {
        throw UsageError("unknown node set '" + part + "' (expected train, val, test or all)");
    }
    if (!split) throw UsageError("node set '" + part + "' needs a split (checkpoint, --split or splits.json)");
    return part == "train" ? split->train : part == "val" ? split->val : split->test;
}

void check_model_fits(const NcnModel& model, const Graph& g) {
    const auto& cfg = model.config();
    if (cfg.in_dim != g.feature_dim()) {
        throw DataError("model expects " + std::to_string(cfg.in_dim) + " features, dataset has " +
                        std::to_string(g.feature_dim()));
    }
    if (cfg.classes < g.num_classes()) {
        throw DataError("dataset has " + std::to_string(g.num_classes()) + " classes, model only " +
                        std::to_string(cfg.classes));
    }
}

}  // namespace

LoadedModel load_model(const fs::path& dir) {
    const auto ck = load_checkpoint(dir);
    json meta;
    ModelConfig cfg;
    PropagationSpec prop;
    std::uint64_t checksum = 0;
    std::optional<SplitSpec> split;
    try {
        meta = json::parse(ck.meta_json);
        const auto& m = meta.at("model");
        cfg.in_dim = m.at("in_dim").get<std::size_t>();
        cfg.hidden = m.at("hidden").get<std::size_t>();
        cfg.inner = m.at("inner").get<std::size_t>();
        cfg.K = m.at("K").get<std::uint32_t>();
        cfg.classes = m.at("classes").get<std::size_t>();
        cfg.variant = variant_from_string(m.at("variant").get<std::string>());
        const auto& p = meta.at("propagation");
        prop.scheme = scheme_from_string(p.at("scheme").get<std::string>());
        prop.K = p.at("K").get<std::uint32_t>();
        prop.gamma = p.at("gamma").get<double>();
        checksum = meta.at("graph_checksum").get<std::uint64_t>();
        if (meta.contains("split")) {
            SplitSpec s;
            s.train = meta["split"].at("train").get<std::vector<NodeId>>();
            s.val = meta["split"].at("val").get<std::vector<NodeId>>();
            s.test = meta["split"].at("test").get<std::vector<NodeId>>();
            split = std::move(s);
        }
    } catch (const json::exception& e) {
        throw DataError("checkpoint metadata is incomplete: " + std::string(e.what()));
    } catch (const UsageError& e) {
        throw DataError(std::string("checkpoint metadata: ") + e.what());
    }

    NcnModel model = [&] {
        try {
            return NcnModel(cfg, 0);
        } catch (const UsageError& e) {
            throw DataError(std::string("checkpoint model config: ") + e.what());
        }
    }();
    const auto& named = model.named_parameters();
    if (named.size() != ck.params.size()) throw DataError("checkpoint parameter count does not match the model");
    for (const auto& stored : ck.params) {
        auto& p = [&]() -> Tensor& {
            try {
                return model.parameter(stored.name);
            } catch (const UsageError&) {
                throw DataError("checkpoint has unexpected parameter '" + stored.name + "'");
            }
        }();
        if (p.shape() != stored.tensor.shape()) throw DataError("checkpoint parameter '" + stored.name + "' has wrong shape");
        std::copy(stored.tensor.data().begin(), stored.tensor.data().end(), p.data().begin());
    }
    return {std::move(model), prop, checksum, std::move(split)};
}

void cmd_preprocess(const PreprocessOptions& o, std::ostream& out) {
    o.propagation.validate();
    const auto g = load_graph(o.dataset);
    const auto grid = build_grid(g, o.propagation, o.threads);
    save_grid(grid, o.out);
    const auto bytes = fs::file_size(o.out);
    log("wrote " + o.out.string());
    ordered_json j{{"n", grid.n}, {"K", grid.K}, {"d", grid.d}, {"scheme", to_string(grid.scheme)}, {"bytes", bytes}};
    out << j.dump() << '\n';
}

void cmd_train(const TrainOptions& o, std::ostream& out) {
    const auto spec = load_run_spec(o.config);
    const auto in = inputs_from(spec);
    const auto grid = grid_for(in.graph, spec.train.propagation(), spec.grid, spec.threads);
    if (in.split) log("using the dataset's fixed split for every run");

    const auto res = run_experiment(in.graph, grid, spec.train, in.split, spec.threads);
    fs::create_directories(spec.output_dir);
    write_text(spec.output_dir / "metrics.json", metrics_to_json(res, run_spec_to_json(spec), o.timing));

    const std::size_t best = res.best_run();
    const auto& run = res.runs[best];
    const auto& mc = run.model.config();
    ordered_json meta;
    meta["model"] = {{"in_dim", mc.in_dim}, {"hidden", mc.hidden}, {"inner", mc.inner},
                     {"K", mc.K},           {"classes", mc.classes}, {"variant", to_string(mc.variant)}};
    meta["propagation"] = {{"scheme", to_string(spec.train.scheme)}, {"K", spec.train.K}, {"gamma", spec.train.gamma}};
    meta["graph_checksum"] = graph_checksum(in.graph);
    meta["run"] = best;
    meta["seed"] = run.metrics.seed;
    meta["split"] = split_json(run.split);
    std::vector<NamedTensor> params;
    for (const auto& [name, t] : run.model.named_parameters()) params.push_back({name, t});
    save_checkpoint(spec.output_dir / "checkpoint", params, meta.dump());
    save_split(run.split, spec.output_dir / "split.json");

    log("mean test accuracy " + num(res.mean_test_acc) + " +- " + num(res.std_test_acc) + " over " +
        std::to_string(res.runs.size()) + " runs");
    ordered_json summary{{"runs", res.runs.size()},
                         {"mean_test_acc", res.mean_test_acc},
                         {"std_test_acc", res.std_test_acc},
                         {"checkpoint", (spec.output_dir / "checkpoint").string()}};
    out << summary.dump() << '\n';
}

void cmd_eval(const EvalOptions& o, std::ostream& out) {
    const auto lm = load_model(o.checkpoint);
    const auto ds = load_dataset(o.dataset);
    check_model_fits(lm.model, ds.graph);
    if (graph_checksum(ds.graph) != lm.graph_checksum) log("note: dataset differs from the one the model was trained on");

    auto prop = lm.propagation;
    prop.K = lm.model.config().K;
    const auto grid = grid_for(ds.graph, prop, o.grid);
    std::optional<SplitSpec> split = lm.split;
    if (o.split) {
        split = load_split(*o.split, ds.graph.num_nodes());
    } else if (!split) {
        split = ds.split;
    }
    if (split) validate_split(*split, ds.graph.num_nodes());
    const auto ids = select_nodes(o.part, ds.graph.num_nodes(), split);
    const double acc = evaluate(lm.model, grid, ds.graph, ids);
    ordered_json j{{"part", o.part}, {"nodes", ids.size()}, {"accuracy", acc}};
    out << j.dump() << '\n';
}

void cmd_sweep_k(const SweepOptions& o, std::ostream& out) {
    const auto spec = load_run_spec(o.config);
    const auto in = inputs_from(spec);
    if (spec.grid) log("ignoring 'grid': sweep-k rebuilds the grid for every K");
    const auto ks = o.k_values ? *o.k_values : spec.k_values;
    const auto rows = sweep_k(in.graph, spec.train, ks, in.split, spec.threads);
    const auto csv = sweep_to_csv(rows);
    write_text(spec.output_dir / "sweep_k.csv", csv);
    for (const auto& r : rows) log("K=" + std::to_string(r.K) + " acc " + num(r.mean_acc) + " +- " + num(r.std_acc));
    out << csv;
}

void cmd_synth(const SynthOptions& o, std::ostream& out) {
    const auto g = generate_sbm(o.sbm);
    save_graph(g, o.out);
    if (o.write_split) {
        save_split(make_split(g.num_nodes(), {0.6, 0.2, 0.2}, derive_seed(o.sbm.seed, kStreamSplit)),
                   o.out / "splits.json");
    }
    ordered_json j{{"n", g.num_nodes()}, {"edges", g.num_edges()}, {"classes", g.num_classes()}};
    if (g.num_edges() > 0) j["homophily"] = homophily_ratio(g);
    out << j.dump() << '\n';
}

void cmd_homophily(const fs::path& dataset, std::ostream& out) {
    const auto g = load_graph(dataset);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", homophily_ratio(g));
    out << buf << '\n';
}

void cmd_export_weights(const ExportOptions& o, std::ostream& out) {
    const auto lm = load_model(o.checkpoint);
    if (!lm.model.config().has_fusion()) {
        throw UsageError("variant '" + to_string(lm.model.config().variant) + "' has no fusion weights");
    }
    const auto ds = load_dataset(o.dataset);
    check_model_fits(lm.model, ds.graph);
    auto prop = lm.propagation;
    prop.K = lm.model.config().K;
    const auto grid = grid_for(ds.graph, prop, o.grid);
    const auto split = lm.split ? lm.split : ds.split;
    const auto ids = select_nodes(o.part, ds.graph.num_nodes(), split);
    const auto rows = export_fusion_weights(lm.model, grid, ds.graph.features(), ids);

    std::string csv = "node_id,a0,a1\n";
    double s0 = 0.0, s1 = 0.0;
    for (const auto& r : rows) {
        csv += std::to_string(r.node) + "," + num(r.a0) + "," + num(r.a1) + "\n";
        s0 += r.a0;
        s1 += r.a1;
    }
    write_text(o.out, csv);
    const double k = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    ordered_json j{{"rows", rows.size()}, {"mean_a0", s0 / k}, {"mean_a1", s1 / k}};
    out << j.dump() << '\n';
}

}  // namespace ncn::cli
