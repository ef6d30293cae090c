#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "ncn/error.hpp"

using namespace ncn;
using namespace ncn::cli;

int main(int argc, char** argv) {
    CLI::App app{"ncn: grid-aggregation node classifier"};
    app.require_subcommand(1);

    PreprocessOptions pre;
    std::string scheme = "ppr";
    auto* c_pre = app.add_subcommand("preprocess", "Build the multi-hop grid tensor for a dataset");
    c_pre->add_option("--dataset", pre.dataset, "Dataset directory")->required();
    c_pre->add_option("--K", pre.propagation.K, "Propagation steps")->required();
    c_pre->add_option("--scheme", scheme, "ppr or rw")->capture_default_str();
    c_pre->add_option("--gamma", pre.propagation.gamma, "Teleport probability (ppr)")->capture_default_str();
    c_pre->add_option("--out", pre.out, "Output grid file")->required();
    c_pre->add_option("--threads", pre.threads)->capture_default_str()->check(CLI::PositiveNumber);

    TrainOptions tr;
    bool no_timing = false;
    auto* c_train = app.add_subcommand("train", "Train and evaluate over several seeded runs");
    c_train->add_option("--config", tr.config, "Run config (JSON)")->required();
    c_train->add_flag("--no-timing", no_timing, "Omit wall-time fields from metrics.json");

    EvalOptions ev;
    auto* c_eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a dataset");
    c_eval->add_option("--checkpoint", ev.checkpoint)->required();
    c_eval->add_option("--dataset", ev.dataset)->required();
    c_eval->add_option("--grid", ev.grid, "Prebuilt grid file");
    c_eval->add_option("--split", ev.split, "Split JSON (defaults to the checkpoint's split)");
    c_eval->add_option("--part", ev.part, "train, val, test or all")->capture_default_str();

    SweepOptions sw;
    auto* c_sweep = app.add_subcommand("sweep-k", "Multi-run accuracy for each propagation step K");
    c_sweep->add_option("--config", sw.config)->required();
    c_sweep->add_option("--k", sw.k_values, "K values (overrides the config)")->delimiter(',');

    SynthOptions sy;
    auto* c_synth = app.add_subcommand("synth", "Write a stochastic block model dataset");
    c_synth->add_option("--n", sy.sbm.n)->capture_default_str();
    c_synth->add_option("--c", sy.sbm.c)->capture_default_str();
    c_synth->add_option("--p-in", sy.sbm.p_in)->capture_default_str();
    c_synth->add_option("--p-out", sy.sbm.p_out)->capture_default_str();
    c_synth->add_option("--feat-dim", sy.sbm.feat_dim)->capture_default_str();
    c_synth->add_option("--mu", sy.sbm.mu)->capture_default_str();
    c_synth->add_option("--sigma", sy.sbm.sigma)->capture_default_str();
    c_synth->add_option("--seed", sy.sbm.seed)->required();
    c_synth->add_option("--out", sy.out)->required();
    c_synth->add_flag("--with-split", sy.write_split, "Also write a 60/20/20 splits.json");

    std::filesystem::path homophily_dir;
    auto* c_hom = app.add_subcommand("homophily", "Edge homophily ratio of a dataset");
    c_hom->add_option("--dataset", homophily_dir)->required();

    ExportOptions ex;
    auto* c_export = app.add_subcommand("export-weights", "Per-node fusion weights as CSV");
    c_export->add_option("--checkpoint", ex.checkpoint)->required();
    c_export->add_option("--dataset", ex.dataset)->required();
    c_export->add_option("--grid", ex.grid);
    c_export->add_option("--out", ex.out)->required();
    c_export->add_option("--part", ex.part, "train, val, test or all")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorKind::usage);
    }

    try {
        if (*c_pre) {
            pre.propagation.scheme = scheme_from_string(scheme);
            cmd_preprocess(pre, std::cout);
        } else if (*c_train) {
            tr.timing = !no_timing;
            cmd_train(tr, std::cout);
        } else if (*c_eval) {
            cmd_eval(ev, std::cout);
        } else if (*c_sweep) {
            cmd_sweep_k(sw, std::cout);
        } else if (*c_synth) {
            cmd_synth(sy, std::cout);
        } else if (*c_hom) {
            cmd_homophily(homophily_dir, std::cout);
        } else if (*c_export) {
            cmd_export_weights(ex, std::cout);
        }
    } catch (const Error& e) {
        std::cerr << "ncn: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "ncn: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::data);
    } catch (const std::exception& e) {
        std::cerr << "ncn: internal error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::numeric);
    }
    return 0;
}
