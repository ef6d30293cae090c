#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncn/graph.hpp"
#include "ncn/propagation.hpp"
#include "ncn/rng.hpp"
#include "ncn/tensor.hpp"

namespace ncn {

// full: neighborhood + raw branch with adaptive fusion and mask training.
// no_ra: neighborhood branch only. no_mask: full architecture, mask training
// disabled. mlp_baseline: MLP on raw features only.
enum class Variant { full, no_ra, no_mask, mlp_baseline };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
    std::size_t in_dim = 0;   // raw feature dimension d
    std::size_t hidden = 128; // d'
    std::size_t inner = 0;    // channel width between conv_a and conv_b; 0 means `hidden`
    std::uint32_t K = 4;      // even; the grid has K + 1 hop rows
    std::size_t classes = 2;
    Variant variant = Variant::full;

    std::size_t inner_width() const { return inner ? inner : hidden; }
    bool uses_grid() const { return variant != Variant::mlp_baseline; }
    bool uses_raw() const { return variant != Variant::no_ra; }
    bool has_fusion() const { return variant == Variant::full || variant == Variant::no_mask; }
};

// Height of the hop axis after both conv blocks: each conv_a with kernel
// height K/2 + 1 removes K/2 rows, so an even K leaves exactly one row.
constexpr std::size_t block_output_height(std::uint32_t K) {
    const std::size_t h = K / 2 + 1;
    return (static_cast<std::size_t>(K) + 1) - 2 * (h - 1);
}

// Per-node gate override during training.
enum class MaskRole : std::uint8_t { keep, zero_a0, zero_a1 };

// Per-epoch partition of the training nodes: a0 is zeroed on n0, a1 on n1.
struct MaskPlan {
    double beta = 0.0;
    std::vector<NodeId> n0;  // sorted
    std::vector<NodeId> n1;  // sorted
    std::vector<NodeId> n2;  // sorted

    MaskRole role_of(NodeId v) const;
    std::vector<MaskRole> roles_for(std::span<const NodeId> batch) const;
};

// |n0| = |n1| = floor(beta * |train|), drawn uniformly without replacement.
// beta must lie in [0, 0.5).
MaskPlan sample_mask_plan(std::span<const NodeId> train_ids, double beta, Rng& rng);

template <typename T>
struct ForwardResult {
    BasicTensor<T> logits;   // [B, c]
    BasicTensor<T> weights;  // [B, 2] fusion weights before masking; undefined without fusion
};

template <typename T>
class BasicNcnModel {
public:
    // Uniform(+-sqrt(1 / fan_in)) weights, zero biases, drawn in parameter
    // order from `init_seed`. Throws UsageError for odd K or zero dims.
    BasicNcnModel(const ModelConfig& cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }

    const std::vector<std::pair<std::string, BasicTensor<T>>>& named_parameters() const { return params_; }
    std::vector<BasicTensor<T>> parameters() const;
    std::size_t parameter_count() const;
    BasicTensor<T>& parameter(const std::string& name);

    // grid_batch [B, K+1, d] (ignored by mlp_baseline, may be undefined),
    // raw_batch [B, d] (ignored by no_ra, may be undefined). `roles` is empty
    // (all keep) or one role per row; it only has an effect in the full variant.
    ForwardResult<T> forward(BasicTape<T>& tape, const BasicTensor<T>& grid_batch, const BasicTensor<T>& raw_batch,
                             std::span<const MaskRole> roles = {}) const;

    BasicNcnModel clone() const;
    // Copies parameter values from a model with the same configuration.
    void load_values_from(const BasicNcnModel& other);

private:
    BasicNcnModel() = default;
    const BasicTensor<T>& p(std::size_t slot) const { return params_[slot].second; }
    BasicTensor<T> conv_block(BasicTape<T>& tape, const BasicTensor<T>& x, std::size_t first_slot) const;
    BasicTensor<T> head(BasicTape<T>& tape, const BasicTensor<T>& x) const;

    ModelConfig cfg_;
    std::vector<std::pair<std::string, BasicTensor<T>>> params_;
    // Slot indices into params_; npos when absent in this variant.
    std::size_t reduce_ = npos, block1_ = npos, block2_ = npos, raw_ = npos, fuse_ = npos, head_ = npos;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

using NcnModel = BasicNcnModel<float>;
using NcnModel64 = BasicNcnModel<double>;

// Grid rows and raw feature rows for `ids` as model inputs.
template <typename T>
BasicTensor<T> grid_batch_tensor(const GridTensor& grid, std::span<const NodeId> ids);
template <typename T>
BasicTensor<T> raw_batch_tensor(const DenseMatrix& features, std::span<const NodeId> ids);

struct FusionWeight {
    NodeId node;
    double a0;
    double a1;
};

// Unmasked fusion weights for `node_ids`, evaluated in batches of
// `batch_size`. UsageError for variants without fusion.
std::vector<FusionWeight> export_fusion_weights(const NcnModel& model, const GridTensor& grid,
                                                const DenseMatrix& features, std::span<const NodeId> node_ids,
                                                std::size_t batch_size = 1000);

}  // namespace ncn
