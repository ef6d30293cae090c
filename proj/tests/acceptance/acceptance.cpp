// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if anything failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ncn/dataset.hpp"
#include "ncn/error.hpp"
#include "ncn/model.hpp"
#include "ncn/propagation.hpp"
#include "ncn/trainer.hpp"
#include "support/oracles.hpp"

using namespace ncn;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<NodeId> all_nodes(std::size_t n) {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    return ids;
}

SbmSpec homophilic_sbm() {
    return {.n = 400, .c = 2, .p_in = 0.05, .p_out = 0.005, .feat_dim = 16, .mu = 1.5, .sigma = 1.0, .seed = 2024};
}

SbmSpec heterophilic_sbm() {
    return {.n = 400, .c = 2, .p_in = 0.005, .p_out = 0.05, .feat_dim = 16, .mu = 0.2, .sigma = 1.0, .seed = 2025};
}

TrainConfig synthetic_config(std::size_t runs, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.K = 4;
    cfg.hidden = 128;
    cfg.runs = runs;
    cfg.seed = seed;
    return cfg;
}

// 1: recurrence vs dense closed form
Outcome propagation_oracle() {
    Stopwatch clock;
    Rng meta(101);
    double worst = 0.0;
    const double gammas[] = {0.1, 0.5, 0.9};
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + meta.uniform_index(19);
        const double p = 0.1 + 0.5 * meta.uniform();
        const auto K = static_cast<std::uint32_t>(1 + meta.uniform_index(6));
        const auto g = test::random_graph({n, p, 3, 2}, 5000 + trial);
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (std::size_t v = 0; v < n; ++v)
            for (NodeId u : g.neighbors(static_cast<NodeId>(v)))
                if (u > v) edges.emplace_back(static_cast<NodeId>(v), u);
        const auto a_hat = test::dense_norm_adj(n, edges);
        const auto adj = normalize_adjacency(g);
        for (double gamma : gammas) {
            const auto hops = propagate_hops(adj, g.features(), {Scheme::ppr, K, gamma});
            for (std::uint32_t k = 0; k <= K; ++k) {
                const auto expect = test::dense_matmul(test::ppr_weights_closed_form(a_hat, k, gamma), g.features());
                worst = std::max(worst, test::max_abs_diff(hops[k], expect));
            }
        }
    }
    const double t = clock.seconds();
    const bool ok = worst <= 1e-10 && t < 10.0;
    return {ok ? Status::pass : Status::fail, fmt("max |diff| %.3g (<= 1e-10), %.2f s (< 10 s)", worst, t)};
}

// 2: gamma = 1 and hop 0
Outcome teleport_limit() {
    bool teleport_ok = true, hop0_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = test::random_graph({15, 0.3, 4, 2}, 700 + trial);
        const auto adj = normalize_adjacency(g);
        const auto& x = g.features();
        const auto one = propagate_hops(adj, x, {Scheme::ppr, 6, 1.0});
        for (std::uint32_t k = 1; k <= 6; ++k) teleport_ok = teleport_ok && one[k].data == x.data;
        const auto grid_one = propagate(adj, x, {Scheme::ppr, 6, 1.0});
        for (std::size_t v = 0; v < g.num_nodes(); ++v)
            for (std::uint32_t k = 0; k <= 6; ++k)
                for (std::size_t j = 0; j < x.cols; ++j)
                    teleport_ok = teleport_ok && grid_one.at(v, k, j) == static_cast<float>(x(v, j));

        const PropagationSpec specs[] = {{Scheme::ppr, 2, 0.1}, {Scheme::ppr, 5, 0.5}, {Scheme::ppr, 4, 0.9},
                                         {Scheme::ppr, 3, 1.0}, {Scheme::rw, 4, 0.0}};
        for (const auto& spec : specs) {
            const auto hops = propagate_hops(adj, x, spec);
            hop0_ok = hop0_ok && hops[0].data == x.data;
            const auto grid = propagate(adj, x, spec);
            for (std::size_t v = 0; v < g.num_nodes(); ++v)
                for (std::size_t j = 0; j < x.cols; ++j)
                    hop0_ok = hop0_ok && grid.at(v, 0, j) == static_cast<float>(x(v, j));
        }
    }
    return {teleport_ok && hop0_ok ? Status::pass : Status::fail,
            fmt("gamma=1 gives X at every hop: %s; hop 0 equals X bitwise: %s", teleport_ok ? "yes" : "no",
                hop0_ok ? "yes" : "no")};
}

// 3: whole-model finite differences in 64-bit
Outcome gradient_check() {
    Stopwatch clock;
    const auto g = test::random_graph({12, 0.35, 4, 3}, 31);
    const auto grid = build_grid(g, {Scheme::ppr, 4, 0.1});
    const auto ids = all_nodes(12);
    const ModelConfig cfg{.in_dim = 4, .hidden = 6, .inner = 4, .K = 4, .classes = 3, .variant = Variant::full};
    NcnModel64 model(cfg, 37);
    Rng rng(38);
    for (auto [name, p] : model.named_parameters())
        if (name.ends_with(".bias"))
            for (double& v : p.data()) v = 0.1 * rng.normal();
    const auto gb = grid_batch_tensor<double>(grid, ids);
    const auto rb = raw_batch_tensor<double>(g.features(), ids);
    std::vector<MaskRole> roles(12, MaskRole::keep);
    roles[1] = MaskRole::zero_a0;
    roles[6] = MaskRole::zero_a1;
    auto loss = [&](Tape64& t) {
        return nll_loss(t, log_softmax(t, model.forward(t, gb, rb, roles).logits), g.labels());
    };
    Tape64 tape;
    auto l = loss(tape);
    tape.backward(l);
    double worst = 0.0;
    std::string worst_name;
    for (auto [name, p] : model.named_parameters()) {
        const std::vector<double> analytic(p.grad().begin(), p.grad().end());
        const auto numeric = test::finite_difference(p.data(), [&] {
            Tape64 quiet(false);
            return loss(quiet).item();
        }, 1e-6);
        const double err = test::relative_error(analytic, numeric);
        if (err >= worst) {
            worst = err;
            worst_name = name;
        }
    }
    const double t = clock.seconds();
    const bool ok = worst < 1e-4 && t < 60.0;
    return {ok ? Status::pass : Status::fail,
            fmt("%zu parameter tensors, worst relative error %.3g at %s (< 1e-4), %.2f s (< 60 s)",
                model.named_parameters().size(), worst, worst_name.c_str(), t)};
}

// 4: fusion weights sum to one; zeroed gates cut their branch off
Outcome fusion_contract() {
    const auto g = generate_sbm(homophilic_sbm());
    auto cfg = synthetic_config(1, 41);
    cfg.max_epochs = 20;
    const auto grid = build_grid(g, cfg.propagation());
    const auto split = make_split(g.num_nodes(), cfg.ratios, 42);
    const auto trained = train(g, grid, split, cfg);
    double worst_sum = 0.0;
    bool nonneg = true;
    const auto weights = export_fusion_weights(trained.model, grid, g.features(), all_nodes(g.num_nodes()));
    for (const auto& w : weights) {
        worst_sum = std::max(worst_sum, std::abs(w.a0 + w.a1 - 1.0));
        nonneg = nonneg && w.a0 >= 0.0 && w.a1 >= 0.0;
    }

    // Perturb one branch input while its gate is zeroed and compare logits bitwise.
    const auto ids = all_nodes(64);
    const auto gb = grid_batch_tensor<float>(grid, ids);
    const auto rb = raw_batch_tensor<float>(g.features(), ids);
    auto perturbed = [](const Tensor& t) {
        Tensor c = t.clone();
        Rng rng(43);
        for (float& v : c.data()) v += static_cast<float>(rng.normal());
        return c;
    };
    auto logits = [&](const Tensor& grid_in, const Tensor& raw_in, MaskRole role) {
        Tape tape(false);
        const std::vector<MaskRole> roles(ids.size(), role);
        const auto out = trained.model.forward(tape, grid_in, raw_in, roles).logits;
        return std::vector<float>(out.data().begin(), out.data().end());
    };
    const bool raw_cut = logits(gb, rb, MaskRole::zero_a0) == logits(gb, perturbed(rb), MaskRole::zero_a0);
    const bool grid_cut = logits(gb, rb, MaskRole::zero_a1) == logits(perturbed(gb), rb, MaskRole::zero_a1);

    const bool ok = worst_sum <= 1e-6 && nonneg && raw_cut && grid_cut;
    return {ok ? Status::pass : Status::fail,
            fmt("max |a0+a1-1| %.3g over %zu nodes (<= 1e-6); a0=0 logits independent of raw input: %s; "
                "a1=0 logits independent of grid input: %s",
                worst_sum, weights.size(), raw_cut ? "yes" : "no", grid_cut ? "yes" : "no")};
}

// 5: the two conv blocks collapse the hop axis to a single row
Outcome shape_theorem() {
    std::string heights;
    bool ok = true;
    for (std::uint32_t K : {2u, 4u, 6u, 8u, 10u}) {
        const ModelConfig cfg{.in_dim = 3, .hidden = 8, .inner = 5, .K = K, .classes = 2, .variant = Variant::full};
        NcnModel model(cfg, K);
        Tape tape(false);
        std::vector<float> v(2 * 8 * (K + 1));
        Rng rng(K);
        for (float& x : v) x = static_cast<float>(rng.normal());
        auto h = Tensor({2, 8, K + 1u, 1}, std::move(v));
        for (const char* block : {"block1", "block2"}) {
            const std::string b(block);
            h = conv2d_hx1(tape, h, model.parameter(b + ".conv_a.weight"), model.parameter(b + ".conv_a.bias"));
            h = relu(tape, h);
            h = conv2d_hx1(tape, h, model.parameter(b + ".conv_b.weight"), model.parameter(b + ".conv_b.bias"));
            h = relu(tape, h);
        }
        const std::size_t height = h.dim(2);
        ok = ok && height == 1 && block_output_height(K) == 1;
        heights += fmt("%sK=%u:%zu", heights.empty() ? "" : " ", K, height);
    }
    std::string rejected;
    for (std::uint32_t K : {1u, 3u, 5u, 7u, 9u}) {
        try {
            NcnModel bad({.in_dim = 3, .hidden = 8, .K = K, .classes = 2}, 1);
            ok = false;
        } catch (const UsageError&) {
            rejected += fmt("%s%u", rejected.empty() ? "" : ",", K);
        }
    }
    return {ok ? Status::pass : Status::fail, "output heights " + heights + "; odd K rejected: " + rejected};
}

// 6: homophilic SBM
Outcome homophilic_task() {
    Stopwatch clock;
    const auto g = generate_sbm(homophilic_sbm());
    const auto cfg = synthetic_config(5, 61);
    const auto grid = build_grid(g, cfg.propagation());
    const auto result = run_experiment(g, grid, cfg);
    const double t = clock.seconds();
    const bool ok = result.mean_test_acc >= 0.90 && t < 120.0;
    return {ok ? Status::pass : Status::fail,
            fmt("mean test accuracy %.4f +- %.4f over 5 seeds (>= 0.90), %.1f s (< 120 s)", result.mean_test_acc,
                result.std_test_acc, t)};
}

// 7: heterophilic SBM, NCN vs raw-feature MLP and the learned fusion weights
Outcome heterophilic_task() {
    const auto g = generate_sbm(heterophilic_sbm());
    auto cfg = synthetic_config(5, 71);
    const auto grid = build_grid(g, cfg.propagation());
    const auto ncn = run_experiment(g, grid, cfg);
    cfg.variant = Variant::mlp_baseline;
    const auto mlp = run_experiment(g, grid, cfg);

    double sum_a0 = 0.0, sum_a1 = 0.0;
    std::size_t count = 0;
    for (const auto& run : ncn.runs) {
        for (const auto& w : export_fusion_weights(run.model, grid, g.features(), run.split.test)) {
            sum_a0 += w.a0;
            sum_a1 += w.a1;
            ++count;
        }
    }
    const double a0 = sum_a0 / static_cast<double>(count), a1 = sum_a1 / static_cast<double>(count);
    const bool ok = ncn.mean_test_acc >= mlp.mean_test_acc + 0.10 && a1 > a0;
    return {ok ? Status::pass : Status::fail,
            fmt("NCN %.4f vs MLP %.4f (margin >= 0.10); mean a1 %.4f vs a0 %.4f on %zu test nodes",
                ncn.mean_test_acc, mlp.mean_test_acc, a1, a0, count)};
}

// 8: ablation ordering with a one-point allowance per comparison
Outcome ablation_ordering() {
    const auto g = generate_sbm(homophilic_sbm());
    auto cfg = synthetic_config(10, 81);
    const auto grid = build_grid(g, cfg.propagation());
    double acc[3];
    const Variant variants[] = {Variant::full, Variant::no_mask, Variant::no_ra};
    for (int i = 0; i < 3; ++i) {
        cfg.variant = variants[i];
        acc[i] = run_experiment(g, grid, cfg).mean_test_acc;
    }
    const bool ok = acc[0] >= acc[1] - 0.01 && acc[1] >= acc[2] - 0.01;
    return {ok ? Status::pass : Status::fail,
            fmt("full %.4f, no_mask %.4f, no_ra %.4f over 10 seeds", acc[0], acc[1], acc[2])};
}

// 9: epoch time follows n, preprocessing follows m
Outcome complexity() {
    auto spec = homophilic_sbm();
    spec.n = 2000;
    spec.seed = 91;
    std::vector<Graph> graphs;
    for (double scale : {1.0, 2.0, 4.0}) {
        spec.p_in = 0.01 * scale;
        spec.p_out = 0.001 * scale;
        graphs.push_back(generate_sbm(spec));
    }
    const auto cfg = synthetic_config(1, 92);
    const auto t = benchmark_epoch_time(graphs, cfg, 7, 5);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < t.size(); ++i) {
        detail += fmt("%sm=%zu epoch %.1f ms prep %.2f ms", i ? "; " : "", t[i].num_edges, t[i].epoch_ms,
                      t[i].preprocess_ms);
        if (i == 0) continue;
        ok = ok && std::abs(t[i].epoch_ms / t[i - 1].epoch_ms - 1.0) <= 0.25;
        ok = ok && t[i].preprocess_ms > t[i - 1].preprocess_ms;
    }
    return {ok ? Status::pass : Status::fail, detail};
}

std::optional<std::filesystem::path> cora_dir() {
    if (const char* env = std::getenv("NCN_CORA_DIR")) return std::filesystem::path(env);
    for (const std::filesystem::path p : {std::filesystem::path("data/cora"),
                                          std::filesystem::path(NCN_SOURCE_DIR) / "data" / "cora"}) {
        if (std::filesystem::exists(p / "edges.csv")) return p;
    }
    return std::nullopt;
}

// 10: Cora, when the converted dataset is available
Outcome cora() {
    const auto dir = cora_dir();
    if (!dir) return {Status::skip, "no dataset (set NCN_CORA_DIR or place it under data/cora)"};
    Stopwatch clock;
    const auto g = load_graph(*dir);
    TrainConfig cfg;
    cfg.hidden = 256;
    cfg.K = 4;
    cfg.beta = 0.3;
    cfg.lr = 1e-3;
    cfg.weight_decay = 1e-4;
    cfg.runs = 10;
    cfg.seed = 101;
    const auto grid = build_grid(g, cfg.propagation());
    const auto result = run_experiment(g, grid, cfg);
    const double t = clock.seconds();
    const bool ok = result.mean_test_acc >= 0.85 && t < 600.0;
    return {ok ? Status::pass : Status::fail,
            fmt("mean test accuracy %.4f +- %.4f over 10 runs (>= 0.85), %.0f s (< 600 s)", result.mean_test_acc,
                result.std_test_acc, t)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"propagation oracle", propagation_oracle},
        {"teleport limit", teleport_limit},
        {"whole-model gradient check", gradient_check},
        {"fusion contract", fusion_contract},
        {"shape theorem", shape_theorem},
        {"homophilic synthetic task", homophilic_task},
        {"heterophilic fusion behavior", heterophilic_task},
        {"ablation ordering", ablation_ordering},
        {"complexity property", complexity},
        {"cora (optional)", cora},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("threw: ") + e.what()};
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
        std::printf("%-4s %2zu %s: %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
        failed += o.status == Status::fail;
    }
    std::printf("%d failed\n", failed);
    return failed ? 1 : 0;
}
