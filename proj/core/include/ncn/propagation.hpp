#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncn/graph.hpp"
#include "ncn/matrix.hpp"

namespace ncn {

enum class Scheme : std::uint8_t { ppr = 0, rw = 1 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

// Multi-hop aggregation settings. `gamma` is the teleport probability of the
// personalized PageRank weights and is ignored by the random-walk scheme.
struct PropagationSpec {
    Scheme scheme = Scheme::ppr;
    std::uint32_t K = 4;
    double gamma = 0.1;

    void validate() const;
};

// Hop-stacked aggregated features, node-major then hop then feature:
// at(v, k, j) is feature j of the k-step aggregation at node v.
// Stored in 32-bit; hop 0 is the raw feature matrix.
struct GridTensor {
    std::size_t n = 0;
    std::uint32_t K = 0;
    std::uint32_t d = 0;
    Scheme scheme = Scheme::ppr;
    double gamma = 0.0;
    std::uint64_t graph_checksum = 0;
    std::vector<float> data;

    std::size_t hops() const { return static_cast<std::size_t>(K) + 1; }
    std::size_t node_stride() const { return hops() * d; }
    float at(std::size_t v, std::size_t k, std::size_t j) const { return data[v * node_stride() + k * d + j]; }
    std::span<const float> node(std::size_t v) const { return {data.data() + v * node_stride(), node_stride()}; }

    bool operator==(const GridTensor&) const = default;
};

// B^(0..K) in 64-bit via the recurrences
//   ppr: B^(k) = (1 - gamma) * A_hat * B^(k-1) + gamma * X
//   rw:  B^(k) = A_hat * B^(k-1)
// with B^(0) = X. Throws NumericError on non-finite input features.
std::vector<DenseMatrix> propagate_hops(const NormAdj& adj, const DenseMatrix& x, const PropagationSpec& spec,
                                        unsigned threads = 1);

// propagate_hops assembled into a GridTensor (values rounded to float).
GridTensor propagate(const NormAdj& adj, const DenseMatrix& x, const PropagationSpec& spec,
                     std::uint64_t graph_checksum = 0, unsigned threads = 1);

// Convenience: normalize, propagate and stamp the graph checksum.
GridTensor build_grid(const Graph& g, const PropagationSpec& spec, unsigned threads = 1);

// Binary grid file: "NCNT", u32 version, u64 n, u32 K, u32 d, u8 scheme,
// f64 gamma, u64 checksum, then n*(K+1)*d f32. All little-endian.
inline constexpr std::uint32_t kGridFormatVersion = 1;

void save_grid(const GridTensor& t, const std::filesystem::path& path);

// Optional header checks applied on load; a mismatch is a DataError.
struct GridExpectation {
    std::optional<std::uint64_t> graph_checksum;
    std::optional<std::uint32_t> K;
    std::optional<std::uint32_t> d;
    std::optional<std::size_t> n;
};

GridTensor load_grid(const std::filesystem::path& path, const GridExpectation& expect = {});

// Same checks against an in-memory tensor.
void check_grid(const GridTensor& t, const GridExpectation& expect);

// Gathers node rows in the given order into a |ids| x (K+1) x d buffer.
std::vector<float> slice_batch(const GridTensor& t, std::span<const NodeId> ids);

}  // namespace ncn
