#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "ncn/checkpoint.hpp"
#include "ncn/dataset.hpp"
#include "ncn/model.hpp"
#include "ncn/propagation.hpp"

namespace ncn::cli {

namespace fs = std::filesystem;

struct PreprocessOptions {
    fs::path dataset;
    PropagationSpec propagation;
    fs::path out;
    unsigned threads = 1;
};

struct TrainOptions {
    fs::path config;
    bool timing = true;  // wall-time fields in metrics.json
};

struct EvalOptions {
    fs::path checkpoint;
    fs::path dataset;
    std::optional<fs::path> grid;
    std::optional<fs::path> split;
    std::string part = "test";
};

struct SweepOptions {
    fs::path config;
    std::optional<std::vector<std::uint32_t>> k_values;
};

struct SynthOptions {
    SbmSpec sbm;
    fs::path out;
    bool write_split = false;
};

struct ExportOptions {
    fs::path checkpoint;
    fs::path dataset;
    std::optional<fs::path> grid;
    fs::path out;
    std::string part = "all";
};

// Each command writes its artifacts to files and a short machine-readable
// summary to `out`. Failures are thrown as ncn::Error.
void cmd_preprocess(const PreprocessOptions& o, std::ostream& out);
void cmd_train(const TrainOptions& o, std::ostream& out);
void cmd_eval(const EvalOptions& o, std::ostream& out);
void cmd_sweep_k(const SweepOptions& o, std::ostream& out);
void cmd_synth(const SynthOptions& o, std::ostream& out);
void cmd_homophily(const fs::path& dataset, std::ostream& out);
void cmd_export_weights(const ExportOptions& o, std::ostream& out);

// Model checkpoint with the metadata needed to rebuild the model and its grid.
struct LoadedModel {
    NcnModel model;
    PropagationSpec propagation;
    std::uint64_t graph_checksum = 0;
    std::optional<SplitSpec> split;
};

LoadedModel load_model(const fs::path& checkpoint_dir);

}  // namespace ncn::cli
