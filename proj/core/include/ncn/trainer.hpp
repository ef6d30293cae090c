#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncn/dataset.hpp"
#include "ncn/graph.hpp"
#include "ncn/model.hpp"
#include "ncn/propagation.hpp"

namespace ncn {

// Every hyperparameter of a training run. Defaults lie inside the search
// ranges: d' in {128, 256, 512}, beta in {0.1, ..., 0.4},
// K in {2, 4, ..., 10}, lr in {1e-3, 5e-4, 1e-4}, weight decay in {1e-4, 1e-5}.
struct TrainConfig {
    std::size_t hidden = 128;
    std::size_t inner = 0;  // conv inner width, 0 = hidden
    double beta = 0.2;
    std::uint32_t K = 4;
    Scheme scheme = Scheme::ppr;
    double gamma = 0.1;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::size_t batch_size = 1000;
    std::size_t patience = 50;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 0;
    Variant variant = Variant::full;
    std::size_t runs = 10;
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
    bool stratify = false;

    void validate() const;
    PropagationSpec propagation() const { return {scheme, K, gamma}; }
    ModelConfig model_config(const Graph& g) const;
};

struct RunMetrics {
    std::uint64_t seed = 0;
    std::vector<double> train_loss;  // per epoch, mean over training nodes
    std::vector<double> val_acc;     // per epoch
    std::size_t best_epoch = 0;      // 1-based; 0 if no epoch ran
    double best_val_acc = 0.0;
    double test_acc = 0.0;
    std::size_t epochs_run = 0;
    double wall_time_s = 0.0;
};

struct TrainResult {
    NcnModel model;
    RunMetrics metrics;
    SplitSpec split;
};

// Seed streams derived from a run seed s: derive_seed(s, kStream*).
inline constexpr std::uint64_t kStreamSplit = 1;
inline constexpr std::uint64_t kStreamInit = 2;
inline constexpr std::uint64_t kStreamShuffle = 3;
inline constexpr std::uint64_t kStreamMask = 4;

// One training run seeded by cfg.seed. Per epoch: resample the mask plan
// (full variant, beta > 0), shuffle the training nodes, take one AdamW step
// per mini-batch on the batch-mean cross-entropy, then score the validation
// set. Stops after `patience` epochs without a strict improvement and returns
// the parameters of the best validation epoch.
TrainResult train(const Graph& graph, const GridTensor& grid, const SplitSpec& split, const TrainConfig& cfg);

// Fraction of argmax-correct predictions on node_ids; no masking.
double evaluate(const NcnModel& model, const GridTensor& grid, const Graph& graph, std::span<const NodeId> node_ids,
                std::size_t batch_size = 1000);

// Argmax class per node.
std::vector<Label> predict(const NcnModel& model, const GridTensor& grid, const Graph& graph,
                           std::span<const NodeId> node_ids, std::size_t batch_size = 1000);

struct ExperimentResult {
    std::vector<TrainResult> runs;
    double mean_test_acc = 0.0;
    double std_test_acc = 0.0;  // population standard deviation
    double mean_best_val_acc = 0.0;

    // Index of the run with the highest validation accuracy (first on ties).
    std::size_t best_run() const;
};

// Seed of run r: derive_seed(cfg.seed, 1000 + r).
std::uint64_t run_seed(std::uint64_t master, std::size_t run);

// cfg.runs independent runs, each on its own random split (or on
// `fixed_split` when given). Runs may execute on up to `threads` threads;
// results do not depend on the thread count.
ExperimentResult run_experiment(const Graph& graph, const GridTensor& grid, const TrainConfig& cfg,
                                const std::optional<SplitSpec>& fixed_split = std::nullopt, unsigned threads = 1);

struct SweepRow {
    std::uint32_t K = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
};

// Rebuilds the grid for every K and runs a full experiment; rows ascend by K.
std::vector<SweepRow> sweep_k(const Graph& graph, const TrainConfig& cfg, std::vector<std::uint32_t> k_values,
                              const std::optional<SplitSpec>& fixed_split = std::nullopt, unsigned threads = 1);

std::string sweep_to_csv(std::span<const SweepRow> rows);

struct EpochTiming {
    std::size_t num_nodes = 0;
    std::size_t num_edges = 0;
    double preprocess_ms = 0.0;  // median build_grid time
    double epoch_ms = 0.0;       // median training epoch time, grids prebuilt
};

// For each graph: time preprocessing, then time `epochs` training epochs on
// the prebuilt grid (after one warm-up epoch). Training uses a fixed
// 60/20/20 split and the mask/shuffle streams of cfg.seed.
std::vector<EpochTiming> benchmark_epoch_time(std::span<const Graph> graphs, const TrainConfig& cfg,
                                              std::size_t epochs = 5, std::size_t preprocess_reps = 3);

// metrics.json document. `config_json` is embedded verbatim under "config";
// wall-time fields are written only when include_timing is set.
std::string metrics_to_json(const ExperimentResult& result, const std::string& config_json, bool include_timing = true);

}  // namespace ncn
