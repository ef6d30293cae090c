#include "ncn/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <numeric>

#include "ncn/dataset.hpp"
#include "ncn/error.hpp"
#include "support/oracles.hpp"

using namespace ncn;

namespace {

SbmSpec homophilic(std::uint64_t seed) {
    return {.n = 400, .c = 2, .p_in = 0.05, .p_out = 0.005, .feat_dim = 16, .mu = 1.5, .sigma = 1.0, .seed = seed};
}

TrainConfig quick_cfg() {
    TrainConfig cfg;
    cfg.hidden = 16;
    cfg.max_epochs = 40;
    cfg.patience = 10;
    cfg.batch_size = 64;
    cfg.lr = 5e-3;
    cfg.runs = 3;
    cfg.seed = 11;
    return cfg;
}

struct Fixture {
    Graph graph;
    GridTensor grid;
    SplitSpec split;
};

Fixture fixture(const SbmSpec& spec, const TrainConfig& cfg) {
    Fixture f{generate_sbm(spec), {}, {}};
    f.grid = build_grid(f.graph, cfg.propagation());
    f.split = make_split(f.graph.num_nodes(), cfg.ratios, 5);
    return f;
}

std::vector<float> flat_params(const NcnModel& m) {
    std::vector<float> out;
    for (const auto& [n, t] : m.named_parameters()) out.insert(out.end(), t.data().begin(), t.data().end());
    return out;
}

}  // namespace

TEST(TrainTest, ZeroLearningRateKeepsParameters) {
    auto cfg = quick_cfg();
    cfg.lr = 0.0;
    cfg.patience = 100;
    cfg.max_epochs = 8;
    const auto f = fixture(homophilic(1), cfg);
    const auto r = train(f.graph, f.grid, f.split, cfg);
    const NcnModel fresh(cfg.model_config(f.graph), derive_seed(cfg.seed, kStreamInit));
    EXPECT_EQ(flat_params(r.model), flat_params(fresh));
    ASSERT_EQ(r.metrics.val_acc.size(), 8u);
    for (double a : r.metrics.val_acc) EXPECT_EQ(a, r.metrics.val_acc[0]);
    EXPECT_EQ(r.metrics.best_epoch, 1u);
}

TEST(TrainTest, FixedSeedIsDeterministic) {
    const auto cfg = quick_cfg();
    const auto f = fixture(homophilic(2), cfg);
    const auto a = train(f.graph, f.grid, f.split, cfg);
    const auto b = train(f.graph, f.grid, f.split, cfg);
    EXPECT_EQ(a.metrics.train_loss, b.metrics.train_loss);
    EXPECT_EQ(a.metrics.val_acc, b.metrics.val_acc);
    EXPECT_EQ(a.metrics.test_acc, b.metrics.test_acc);
    EXPECT_EQ(flat_params(a.model), flat_params(b.model));
}

TEST(TrainTest, FirstEpochLossNearLogC) {
    for (std::size_t c : {2u, 3u, 5u}) {
        auto cfg = quick_cfg();
        cfg.max_epochs = 1;
        cfg.batch_size = 1000;
        auto spec = homophilic(3);
        spec.c = c;
        const auto f = fixture(spec, cfg);
        const auto r = train(f.graph, f.grid, f.split, cfg);
        EXPECT_NEAR(r.metrics.train_loss[0], std::log(double(c)), 0.1 * std::log(double(c))) << "c=" << c;
    }
}

TEST(TrainTest, LossTrendsDownOverFirstEpochs) {
    auto cfg = quick_cfg();
    cfg.max_epochs = 20;
    cfg.patience = 100;
    const auto f = fixture(homophilic(4), cfg);
    const auto loss = train(f.graph, f.grid, f.split, cfg).metrics.train_loss;
    ASSERT_EQ(loss.size(), 20u);
    // least-squares slope against the epoch index
    const double xm = 9.5, ym = std::accumulate(loss.begin(), loss.end(), 0.0) / 20.0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        num += (double(i) - xm) * (loss[i] - ym);
        den += (double(i) - xm) * (double(i) - xm);
    }
    EXPECT_LE(num / den, 0.0);
}

TEST(TrainTest, ReturnedModelReproducesBestValidation) {
    const auto cfg = quick_cfg();
    const auto f = fixture(homophilic(5), cfg);
    const auto r = train(f.graph, f.grid, f.split, cfg);
    EXPECT_EQ(evaluate(r.model, f.grid, f.graph, f.split.val), r.metrics.best_val_acc);
    EXPECT_EQ(evaluate(r.model, f.grid, f.graph, f.split.test), r.metrics.test_acc);
    EXPECT_EQ(r.metrics.val_acc[r.metrics.best_epoch - 1], r.metrics.best_val_acc);
    EXPECT_LE(r.metrics.best_epoch, r.metrics.epochs_run);
    EXPECT_EQ(*std::max_element(r.metrics.val_acc.begin(), r.metrics.val_acc.end()), r.metrics.best_val_acc);
}

TEST(TrainTest, EarlyStoppingHonorsPatience) {
    auto cfg = quick_cfg();
    cfg.patience = 3;
    cfg.max_epochs = 500;
    const auto f = fixture(homophilic(6), cfg);
    const auto m = train(f.graph, f.grid, f.split, cfg).metrics;
    EXPECT_EQ(m.epochs_run, m.best_epoch + 3);
    // The best epoch is the first one reaching the maximum: ties do not move it.
    for (std::size_t e = 0; e + 1 < m.best_epoch; ++e) EXPECT_LT(m.val_acc[e], m.best_val_acc);
    for (std::size_t e = m.best_epoch; e < m.epochs_run; ++e) EXPECT_LE(m.val_acc[e], m.best_val_acc);
}

TEST(TrainTest, NoMaskIgnoresBeta) {
    auto cfg = quick_cfg();
    cfg.variant = Variant::no_mask;
    const auto f = fixture(homophilic(7), cfg);
    cfg.beta = 0.3;
    const auto a = train(f.graph, f.grid, f.split, cfg);
    cfg.beta = 0.0;
    const auto b = train(f.graph, f.grid, f.split, cfg);
    EXPECT_EQ(a.metrics.train_loss, b.metrics.train_loss);
    EXPECT_EQ(flat_params(a.model), flat_params(b.model));

    // The full variant with beta = 0 takes the same path.
    cfg.variant = Variant::full;
    const auto c = train(f.graph, f.grid, f.split, cfg);
    EXPECT_EQ(c.metrics.train_loss, b.metrics.train_loss);
}

TEST(TrainTest, InputValidation) {
    auto cfg = quick_cfg();
    const auto f = fixture(homophilic(8), cfg);
    auto k6 = cfg;
    k6.K = 6;
    EXPECT_THROW(train(f.graph, f.grid, f.split, k6), DataError);
    auto empty = f.split;
    empty.train.clear();
    EXPECT_THROW(train(f.graph, f.grid, empty, cfg), UsageError);
    auto odd = cfg;
    odd.K = 3;
    EXPECT_THROW(odd.validate(), UsageError);
    auto bad_beta = cfg;
    bad_beta.beta = 0.5;
    EXPECT_THROW(bad_beta.validate(), UsageError);
    const auto other = generate_sbm(homophilic(9));
    EXPECT_THROW(train(other, f.grid, f.split, cfg), DataError);
}

TEST(TrainTest, MlpSeparatesEasyGaussians) {
    auto cfg = quick_cfg();
    cfg.variant = Variant::mlp_baseline;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    auto spec = homophilic(10);
    spec.mu = 3.0;
    spec.sigma = 0.5;
    const auto f = fixture(spec, cfg);
    const auto r = train(f.graph, f.grid, f.split, cfg);
    EXPECT_GT(evaluate(r.model, f.grid, f.graph, f.split.train), 0.95);
}

TEST(TrainTest, HomophilicSbmIsLearned) {
    TrainConfig cfg;
    cfg.seed = 4;
    const auto f = fixture(homophilic(12), cfg);
    EXPECT_GE(train(f.graph, f.grid, f.split, cfg).metrics.test_acc, 0.90);
}

TEST(EvaluateTest, PerfectAndConstantPredictors) {
    // Features are one-hot labels; an identity MLP head reproduces them.
    const std::size_t n = 10;
    DenseMatrix x(n, 2);
    std::vector<Label> y(n);
    for (std::size_t v = 0; v < n; ++v) {
        y[v] = static_cast<Label>(v % 2);
        x(v, v % 2) = 1.0;
    }
    const auto g = Graph::from_edges(n, {}, x, y, 2);
    const auto grid = build_grid(g, {Scheme::ppr, 2, 0.1});
    NcnModel m({.in_dim = 2, .hidden = 2, .K = 2, .classes = 2, .variant = Variant::mlp_baseline}, 1);
    for (const char* name : {"head.fc1.weight", "head.fc2.weight"}) {
        auto w = m.parameter(name).data();
        std::fill(w.begin(), w.end(), 0.0f);
        w[0] = w[3] = 1.0f;
    }
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    EXPECT_EQ(evaluate(m, grid, g, ids, 3), 1.0);
    EXPECT_EQ(predict(m, grid, g, ids), y);

    auto fc2 = m.parameter("head.fc2.weight").data();
    std::fill(fc2.begin(), fc2.end(), 0.0f);
    m.parameter("head.fc2.bias").data()[0] = 1.0f;
    EXPECT_EQ(evaluate(m, grid, g, ids), 0.5);
    EXPECT_THROW(evaluate(m, grid, g, {}), UsageError);
}

TEST(ExperimentTest, RunsAggregateAndIgnoreThreadCount) {
    auto cfg = quick_cfg();
    cfg.max_epochs = 10;
    const auto f = fixture(homophilic(13), cfg);
    const auto one = run_experiment(f.graph, f.grid, cfg, std::nullopt, 1);
    const auto three = run_experiment(f.graph, f.grid, cfg, std::nullopt, 3);
    ASSERT_EQ(one.runs.size(), 3u);
    double mean = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_EQ(one.runs[r].metrics.test_acc, three.runs[r].metrics.test_acc);
        EXPECT_EQ(one.runs[r].metrics.seed, run_seed(cfg.seed, r));
        EXPECT_EQ(one.runs[r].split.train, three.runs[r].split.train);
        mean += one.runs[r].metrics.test_acc / 3.0;
    }
    // Each run draws its own split.
    EXPECT_NE(one.runs[0].split.train, one.runs[1].split.train);
    EXPECT_NEAR(one.mean_test_acc, mean, 1e-12);
    double var = 0.0;
    for (const auto& r : one.runs) var += (r.metrics.test_acc - mean) * (r.metrics.test_acc - mean) / 3.0;
    EXPECT_NEAR(one.std_test_acc, std::sqrt(var), 1e-12);

    const auto fixed = run_experiment(f.graph, f.grid, cfg, f.split);
    for (const auto& r : fixed.runs) EXPECT_EQ(r.split.test, f.split.test);
}

TEST(ExperimentTest, MetricsJsonShape) {
    auto cfg = quick_cfg();
    cfg.max_epochs = 3;
    cfg.runs = 2;
    const auto f = fixture(homophilic(14), cfg);
    const auto res = run_experiment(f.graph, f.grid, cfg);
    const auto doc = nlohmann::json::parse(metrics_to_json(res, R"({"K":4})"));
    EXPECT_EQ(doc["format"], "ncn-metrics");
    EXPECT_EQ(doc["runs"].size(), 2u);
    EXPECT_EQ(doc["config"]["K"], 4);
    EXPECT_DOUBLE_EQ(doc["summary"]["mean_test_acc"].get<double>(), res.mean_test_acc);
    EXPECT_TRUE(doc["runs"][0].contains("wall_time_s"));
    const auto quiet = nlohmann::json::parse(metrics_to_json(res, "{}", false));
    EXPECT_FALSE(quiet["runs"][0].contains("wall_time_s"));
}

TEST(SweepTest, RowsAscendAndCsv) {
    auto cfg = quick_cfg();
    cfg.max_epochs = 3;
    cfg.runs = 1;
    const auto g = generate_sbm(homophilic(15));
    const auto single = sweep_k(g, cfg, {2});
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0].K, 2u);
    const auto rows = sweep_k(g, cfg, {6, 2, 4, 2});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].K, 2u);
    EXPECT_EQ(rows[2].K, 6u);
    const auto csv = sweep_to_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,mean_acc,std_acc");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_THROW(sweep_k(g, cfg, {3}), UsageError);
}

TEST(SweepTest, HomophilicBestKIsSmall) {
    auto cfg = quick_cfg();
    cfg.hidden = 32;
    cfg.max_epochs = 60;
    cfg.patience = 15;
    const auto g = generate_sbm(homophilic(16));
    const auto rows = sweep_k(g, cfg, {2, 4, 6, 8, 10});
    const auto best = std::max_element(rows.begin(), rows.end(),
                                       [](const SweepRow& a, const SweepRow& b) { return a.mean_acc < b.mean_acc; });
    EXPECT_LE(best->K, 6u);
}

TEST(EpochTimingTest, ScalesWithNodesNotEdges) {
    auto cfg = quick_cfg();
    cfg.hidden = 32;
    cfg.batch_size = 1000;
    auto spec = homophilic(17);
    spec.n = 2000;
    spec.p_in = 0.01;
    spec.p_out = 0.001;
    const auto g1 = generate_sbm(spec);
    spec.p_in *= 2;
    spec.p_out *= 2;
    const auto g2 = generate_sbm(spec);
    spec.n = 4000;
    spec.p_in = 0.005;
    spec.p_out = 0.0005;
    const auto g3 = generate_sbm(spec);
    const std::vector<Graph> graphs{g1, g2, g3};
    const auto t = benchmark_epoch_time(graphs, cfg, 5, 3);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_GT(t[1].num_edges, t[0].num_edges * 3 / 2);
    EXPECT_GT(t[1].preprocess_ms, t[0].preprocess_ms);
    const double m_ratio = t[1].epoch_ms / t[0].epoch_ms;
    EXPECT_GE(m_ratio, 0.8);
    EXPECT_LE(m_ratio, 1.25);
    const double n_ratio = t[2].epoch_ms / t[0].epoch_ms;
    EXPECT_GE(n_ratio, 1.6);
    EXPECT_LE(n_ratio, 2.6);
}
