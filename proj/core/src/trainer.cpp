#include "ncn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define NCN_HAVE_MXCSR 1
#endif

#include "ncn/error.hpp"
#include "ncn/optim.hpp"

namespace ncn {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Flush-to-zero and denormals-are-zero for the current thread while alive.
// Late in training, gradients drift into the subnormal range and every
// operation on them takes a slow microcode path.
class DenormalGuard {
public:
#ifdef NCN_HAVE_MXCSR
    DenormalGuard() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~DenormalGuard() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

// Mini-batch state for one run: model, optimizer and the two RNG streams.
class EpochRunner {
public:
    EpochRunner(const Graph& graph, const GridTensor& grid, const SplitSpec& split, const TrainConfig& cfg)
        : guard_(),
          graph_(graph),
          grid_(grid),
          split_(split),
          cfg_(cfg),
          model_(cfg.model_config(graph), derive_seed(cfg.seed, kStreamInit)),
          optimizer_(model_.parameters(), AdamWOptions{cfg.lr, cfg.weight_decay}),
          shuffle_rng_(derive_seed(cfg.seed, kStreamShuffle)),
          mask_rng_(derive_seed(cfg.seed, kStreamMask)) {}

    NcnModel& model() { return model_; }

    // Returns the mean training loss over all training nodes.
    double epoch() {
        const bool masking = cfg_.variant == Variant::full && cfg_.beta > 0.0;
        MaskPlan plan;
        if (masking) plan = sample_mask_plan(split_.train, cfg_.beta, mask_rng_);

        std::vector<NodeId> order(split_.train);
        shuffle_rng_.shuffle(std::span<NodeId>(order));

        double loss_sum = 0.0;
        const auto& labels = graph_.labels();
        for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
            const std::span<const NodeId> ids(order.data() + start, std::min(cfg_.batch_size, order.size() - start));
            std::vector<Label> targets(ids.size());
            for (std::size_t i = 0; i < ids.size(); ++i) targets[i] = labels[ids[i]];
            const auto roles = masking ? plan.roles_for(ids) : std::vector<MaskRole>{};

            Tape tape;
            Tensor grid_rows, raw_rows;
            if (model_.config().uses_grid()) grid_rows = grid_batch_tensor<float>(grid_, ids);
            if (model_.config().uses_raw()) raw_rows = raw_batch_tensor<float>(graph_.features(), ids);
            const auto out = model_.forward(tape, grid_rows, raw_rows, roles);
            auto loss = nll_loss(tape, log_softmax(tape, out.logits), std::span<const Label>(targets));
            if (!std::isfinite(loss.item())) throw NumericError("training loss is not finite");

            optimizer_.zero_grad();
            tape.backward(loss);
            optimizer_.step();
            loss_sum += static_cast<double>(loss.item()) * static_cast<double>(ids.size());
        }
        return loss_sum / static_cast<double>(order.size());
    }

private:
    DenormalGuard guard_;
    const Graph& graph_;
    const GridTensor& grid_;
    const SplitSpec& split_;
    const TrainConfig& cfg_;
    NcnModel model_;
    AdamW<float> optimizer_;
    Rng shuffle_rng_;
    Rng mask_rng_;
};

void check_inputs(const Graph& graph, const GridTensor& grid, const TrainConfig& cfg) {
    cfg.validate();
    GridExpectation expect;
    expect.K = cfg.K;
    expect.n = graph.num_nodes();
    expect.d = static_cast<std::uint32_t>(graph.feature_dim());
    expect.graph_checksum = graph_checksum(graph);
    check_grid(grid, expect);
}

}  // namespace

void TrainConfig::validate() const {
    if (hidden == 0) throw UsageError("hidden dimension must be positive");
    if (!(beta >= 0.0 && beta < 0.5)) throw UsageError("beta must lie in [0, 0.5)");
    propagation().validate();
    if (variant != Variant::mlp_baseline && K % 2 != 0) {
        throw UsageError("K must be even for the conv stack, got K=" + std::to_string(K));
    }
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("learning rate must be finite and >= 0");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw UsageError("weight decay must be >= 0");
    if (batch_size == 0) throw UsageError("batch size must be positive");
    if (max_epochs == 0) throw UsageError("max_epochs must be positive");
    if (patience == 0) throw UsageError("patience must be positive");
    if (runs == 0) throw UsageError("runs must be positive");
    for (double r : ratios) {
        if (!(r >= 0.0 && r <= 1.0)) throw UsageError("split ratios must lie in [0, 1]");
    }
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");
}

ModelConfig TrainConfig::model_config(const Graph& g) const {
    ModelConfig m;
    m.in_dim = g.feature_dim();
    m.hidden = hidden;
    m.inner = inner;
    m.K = K;
    m.classes = g.num_classes();
    m.variant = variant;
    return m;
}

TrainResult train(const Graph& graph, const GridTensor& grid, const SplitSpec& split, const TrainConfig& cfg) {
    check_inputs(graph, grid, cfg);
    validate_split(split, graph.num_nodes());
    if (split.train.empty()) throw UsageError("train: empty training set");
    if (split.val.empty()) throw UsageError("train: empty validation set");
    if (split.test.empty()) throw UsageError("train: empty test set");

    const auto start = Clock::now();
    EpochRunner runner(graph, grid, split, cfg);
    NcnModel best = runner.model().clone();

    RunMetrics metrics;
    metrics.seed = cfg.seed;
    metrics.best_val_acc = -1.0;
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        metrics.train_loss.push_back(runner.epoch());
        const double val = evaluate(runner.model(), grid, graph, split.val, cfg.batch_size);
        metrics.val_acc.push_back(val);
        metrics.epochs_run = epoch;
        // Ties do not reset patience.
        if (val > metrics.best_val_acc) {
            metrics.best_val_acc = val;
            metrics.best_epoch = epoch;
            best.load_values_from(runner.model());
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    runner.model().load_values_from(best);
    metrics.test_acc = evaluate(runner.model(), grid, graph, split.test, cfg.batch_size);
    metrics.wall_time_s = ms_since(start) / 1000.0;
    return {runner.model().clone(), std::move(metrics), split};
}

std::vector<Label> predict(const NcnModel& model, const GridTensor& grid, const Graph& graph,
                           std::span<const NodeId> node_ids, std::size_t batch_size) {
    const auto& mc = model.config();
    if (mc.uses_grid()) {
        check_grid(grid, {std::nullopt, mc.K, static_cast<std::uint32_t>(mc.in_dim), graph.num_nodes()});
    }
    batch_size = std::max<std::size_t>(1, batch_size);
    std::vector<Label> out;
    out.reserve(node_ids.size());
    Tape tape(false);
    for (std::size_t start = 0; start < node_ids.size(); start += batch_size) {
        const auto ids = node_ids.subspan(start, std::min(batch_size, node_ids.size() - start));
        Tensor grid_rows, raw_rows;
        if (mc.uses_grid()) grid_rows = grid_batch_tensor<float>(grid, ids);
        if (mc.uses_raw()) raw_rows = raw_batch_tensor<float>(graph.features(), ids);
        const auto logits = model.forward(tape, grid_rows, raw_rows).logits;
        const std::size_t c = logits.dim(1);
        const auto v = logits.data();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto row = v.subspan(i * c, c);
            out.push_back(static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin()));
        }
    }
    return out;
}

double evaluate(const NcnModel& model, const GridTensor& grid, const Graph& graph, std::span<const NodeId> node_ids,
                std::size_t batch_size) {
    if (node_ids.empty()) throw UsageError("evaluate: empty node set");
    const auto pred = predict(model, grid, graph, node_ids, batch_size);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < node_ids.size(); ++i) correct += pred[i] == graph.labels()[node_ids[i]] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(node_ids.size());
}

std::size_t ExperimentResult::best_run() const {
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].metrics.best_val_acc > runs[best].metrics.best_val_acc) best = r;
    }
    return best;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, 1000 + run); }

ExperimentResult run_experiment(const Graph& graph, const GridTensor& grid, const TrainConfig& cfg,
                                const std::optional<SplitSpec>& fixed_split, unsigned threads) {
    check_inputs(graph, grid, cfg);
    std::vector<std::optional<TrainResult>> slots(cfg.runs);
    std::vector<std::exception_ptr> errors(cfg.runs);

    auto run_one = [&](std::size_t r) {
        try {
            TrainConfig run_cfg = cfg;
            run_cfg.seed = run_seed(cfg.seed, r);
            SplitSpec split = fixed_split
                                  ? *fixed_split
                                  : make_split(graph.num_nodes(), cfg.ratios, derive_seed(run_cfg.seed, kStreamSplit),
                                               cfg.stratify ? std::optional<std::span<const Label>>(graph.labels())
                                                            : std::nullopt);
            slots[r] = train(graph, grid, split, run_cfg);
        } catch (...) {
            errors[r] = std::current_exception();
        }
    };

    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(cfg.runs));
    if (threads == 1) {
        for (std::size_t r = 0; r < cfg.runs; ++r) run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < cfg.runs; r = next++) run_one(r);
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ExperimentResult result;
    for (auto& slot : slots) result.runs.push_back(std::move(*slot));
    const double k = static_cast<double>(result.runs.size());
    for (const auto& r : result.runs) {
        result.mean_test_acc += r.metrics.test_acc / k;
        result.mean_best_val_acc += r.metrics.best_val_acc / k;
    }
    double var = 0.0;
    for (const auto& r : result.runs) var += std::pow(r.metrics.test_acc - result.mean_test_acc, 2) / k;
    result.std_test_acc = std::sqrt(var);
    return result;
}

std::vector<SweepRow> sweep_k(const Graph& graph, const TrainConfig& cfg, std::vector<std::uint32_t> k_values,
                              const std::optional<SplitSpec>& fixed_split, unsigned threads) {
    if (k_values.empty()) throw UsageError("sweep_k: no K values");
    std::sort(k_values.begin(), k_values.end());
    k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
    std::vector<SweepRow> rows;
    for (std::uint32_t K : k_values) {
        TrainConfig kcfg = cfg;
        kcfg.K = K;
        kcfg.validate();
        const auto grid = build_grid(graph, kcfg.propagation());
        const auto res = run_experiment(graph, grid, kcfg, fixed_split, threads);
        rows.push_back({K, res.mean_test_acc, res.std_test_acc});
    }
    return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::ostringstream out;
    out.precision(17);
    out << "K,mean_acc,std_acc\n";
    for (const auto& r : rows) out << r.K << ',' << r.mean_acc << ',' << r.std_acc << '\n';
    return out.str();
}

std::vector<EpochTiming> benchmark_epoch_time(std::span<const Graph> graphs, const TrainConfig& cfg,
                                              std::size_t epochs, std::size_t preprocess_reps) {
    cfg.validate();
    std::vector<EpochTiming> table;
    for (const auto& g : graphs) {
        EpochTiming row;
        row.num_nodes = g.num_nodes();
        row.num_edges = g.num_edges();

        std::vector<double> prep;
        GridTensor grid;
        for (std::size_t r = 0; r < std::max<std::size_t>(1, preprocess_reps); ++r) {
            const auto t0 = Clock::now();
            grid = build_grid(g, cfg.propagation());
            prep.push_back(ms_since(t0));
        }
        row.preprocess_ms = median(prep);

        check_inputs(g, grid, cfg);
        const auto split = make_split(g.num_nodes(), {0.6, 0.2, 0.2}, derive_seed(cfg.seed, kStreamSplit));
        EpochRunner runner(g, grid, split, cfg);
        runner.epoch();
        std::vector<double> times;
        for (std::size_t e = 0; e < std::max<std::size_t>(1, epochs); ++e) {
            const auto t0 = Clock::now();
            runner.epoch();
            times.push_back(ms_since(t0));
        }
        row.epoch_ms = median(times);
        table.push_back(row);
    }
    return table;
}

std::string metrics_to_json(const ExperimentResult& result, const std::string& config_json, bool include_timing) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["format"] = "ncn-metrics";
    doc["version"] = 1;
    doc["config"] = ordered_json::parse(config_json);
    doc["runs"] = ordered_json::array();
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        const auto& m = result.runs[r].metrics;
        ordered_json run;
        run["run"] = r;
        run["seed"] = m.seed;
        run["epochs_run"] = m.epochs_run;
        run["best_epoch"] = m.best_epoch;
        run["best_val_acc"] = m.best_val_acc;
        run["test_acc"] = m.test_acc;
        if (include_timing) run["wall_time_s"] = m.wall_time_s;
        run["train_loss"] = m.train_loss;
        run["val_acc"] = m.val_acc;
        doc["runs"].push_back(std::move(run));
    }
    doc["summary"] = {{"runs", result.runs.size()},
                      {"mean_test_acc", result.mean_test_acc},
                      {"std_test_acc", result.std_test_acc},
                      {"mean_best_val_acc", result.mean_best_val_acc},
                      {"best_run", result.best_run()}};
    return doc.dump(2) + "\n";
}

}  // namespace ncn
