#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ncn/graph.hpp"

namespace ncn {

// Disjoint train/val/test node sets.
struct SplitSpec {
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
};

// Stochastic block model with Gaussian class-mean features. Node v belongs to
// class v % c; its features are mu * e_(class % feat_dim) + sigma * N(0, I).
struct SbmSpec {
    std::size_t n = 400;
    std::size_t c = 2;
    double p_in = 0.05;
    double p_out = 0.005;
    std::size_t feat_dim = 16;
    double mu = 1.5;
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

struct Dataset {
    Graph graph;
    std::optional<SplitSpec> split;  // from splits.json when present
};

// Reads edges.csv, features.csv, labels.csv and the optional splits.json from
// `dir`. The node count is the number of feature rows; the class count is
// max(label) + 1.
Dataset load_dataset(const std::filesystem::path& dir);
Graph load_graph(const std::filesystem::path& dir);

// Writes the directory layout read by load_dataset. Reals are written in
// shortest round-trip form, so save -> load reproduces the graph exactly.
void save_graph(const Graph& g, const std::filesystem::path& dir);
void save_split(const SplitSpec& split, const std::filesystem::path& path);
SplitSpec load_split(const std::filesystem::path& path, std::size_t n);

Graph generate_sbm(const SbmSpec& spec);

// Uniformly random partition by `ratios`: the train part gets round(r0 * n)
// nodes, val round(r1 * n), test the rest. With `stratify_labels` the rule is
// applied per class and the parts are concatenated.
SplitSpec make_split(std::size_t n, std::array<double, 3> ratios, std::uint64_t seed,
                     std::optional<std::span<const Label>> stratify_labels = std::nullopt);

// Throws DataError when ids leave [0, n) or the parts overlap.
void validate_split(const SplitSpec& split, std::size_t n);

}  // namespace ncn
