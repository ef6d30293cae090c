#include "ncn/model.hpp"

#include <algorithm>
#include <cmath>

#include "ncn/error.hpp"

namespace ncn {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_ra: return "no_ra";
        case Variant::no_mask: return "no_mask";
        case Variant::mlp_baseline: return "mlp_baseline";
    }
    return "full";
}

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "no_ra") return Variant::no_ra;
    if (s == "no_mask") return Variant::no_mask;
    if (s == "mlp_baseline" || s == "mlp") return Variant::mlp_baseline;
    throw UsageError("unknown variant '" + s + "' (expected full, no_ra, no_mask or mlp_baseline)");
}

MaskRole MaskPlan::role_of(NodeId v) const {
    if (std::binary_search(n0.begin(), n0.end(), v)) return MaskRole::zero_a0;
    if (std::binary_search(n1.begin(), n1.end(), v)) return MaskRole::zero_a1;
    return MaskRole::keep;
}

std::vector<MaskRole> MaskPlan::roles_for(std::span<const NodeId> batch) const {
    std::vector<MaskRole> roles(batch.size());
    std::transform(batch.begin(), batch.end(), roles.begin(), [this](NodeId v) { return role_of(v); });
    return roles;
}

MaskPlan sample_mask_plan(std::span<const NodeId> train_ids, double beta, Rng& rng) {
    if (!(beta >= 0.0 && beta < 0.5)) throw UsageError("mask beta must lie in [0, 0.5)");
    std::vector<NodeId> ids(train_ids.begin(), train_ids.end());
    rng.shuffle(std::span<NodeId>(ids));
    const auto k = static_cast<std::size_t>(std::floor(beta * static_cast<double>(ids.size())));
    MaskPlan plan;
    plan.beta = beta;
    plan.n0.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
    plan.n1.assign(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.begin() + static_cast<std::ptrdiff_t>(2 * k));
    plan.n2.assign(ids.begin() + static_cast<std::ptrdiff_t>(2 * k), ids.end());
    for (auto* part : {&plan.n0, &plan.n1, &plan.n2}) std::sort(part->begin(), part->end());
    return plan;
}

template <typename T>
BasicNcnModel<T>::BasicNcnModel(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg.in_dim == 0 || cfg.hidden == 0 || cfg.classes == 0) {
        throw UsageError("model: in_dim, hidden and classes must be positive");
    }
    const std::size_t d = cfg.in_dim, dh = cfg.hidden, dc = cfg.inner_width();
    if (cfg.uses_grid()) {
        if (cfg.K < 2 || cfg.K % 2 != 0) {
            throw UsageError("model: propagation step K must be even and >= 2, got K=" + std::to_string(cfg.K));
        }
        if (block_output_height(cfg.K) != 1) throw UsageError("model: conv stack does not reduce the grid to height 1");
    }

    Rng rng(init_seed);
    auto add = [&](std::string name, Shape shape, std::size_t fan_in) {
        const bool is_bias = fan_in == 0;
        std::vector<T> values(shape_numel(shape), T(0));
        if (!is_bias) {
            const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
            for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
        }
        params_.emplace_back(std::move(name), BasicTensor<T>(std::move(shape), std::move(values), true));
    };

    if (cfg.uses_grid()) {
        const std::size_t h = cfg.K / 2 + 1;
        reduce_ = params_.size();
        add("reduce.weight", {d, dh}, d);
        add("reduce.bias", {dh}, 0);
        block1_ = params_.size();
        add("block1.conv_a.weight", {dc, dh, h, 1}, dh * h);
        add("block1.conv_a.bias", {dc}, 0);
        add("block1.conv_b.weight", {dh, dc, 1, 1}, dc);
        add("block1.conv_b.bias", {dh}, 0);
        block2_ = params_.size();
        add("block2.conv_a.weight", {dc, dh, h, 1}, dh * h);
        add("block2.conv_a.bias", {dc}, 0);
        add("block2.conv_b.weight", {dh, dc, 1, 1}, dc);
        add("block2.conv_b.bias", {dh}, 0);
    }
    if (cfg.has_fusion()) {
        raw_ = params_.size();
        add("raw.weight", {d, dh}, d);
        add("raw.bias", {dh}, 0);
        fuse_ = params_.size();
        add("fuse.weight", {2 * dh, 2}, 2 * dh);
        add("fuse.bias", {2}, 0);
    }
    const std::size_t head_in = cfg.variant == Variant::mlp_baseline ? d : (cfg.has_fusion() ? 2 * dh : dh);
    head_ = params_.size();
    add("head.fc1.weight", {head_in, dh}, head_in);
    add("head.fc1.bias", {dh}, 0);
    add("head.fc2.weight", {dh, cfg.classes}, dh);
    add("head.fc2.bias", {cfg.classes}, 0);
}

template <typename T>
std::vector<BasicTensor<T>> BasicNcnModel<T>::parameters() const {
    std::vector<BasicTensor<T>> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(t);
    return out;
}

template <typename T>
std::size_t BasicNcnModel<T>::parameter_count() const {
    std::size_t total = 0;
    for (const auto& [name, t] : params_) total += t.numel();
    return total;
}

template <typename T>
BasicTensor<T>& BasicNcnModel<T>::parameter(const std::string& name) {
    for (auto& [n, t] : params_) {
        if (n == name) return t;
    }
    throw UsageError("model has no parameter '" + name + "'");
}

template <typename T>
BasicNcnModel<T> BasicNcnModel<T>::clone() const {
    BasicNcnModel copy = *this;
    for (auto& [name, t] : copy.params_) t = t.clone();
    return copy;
}

template <typename T>
void BasicNcnModel<T>::load_values_from(const BasicNcnModel& other) {
    if (other.params_.size() != params_.size()) throw UsageError("model: parameter layout mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto dst = params_[i].second.data();
        const auto src = other.params_[i].second.data();
        if (dst.size() != src.size() || params_[i].first != other.params_[i].first) {
            throw UsageError("model: parameter '" + params_[i].first + "' layout mismatch");
        }
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

template <typename T>
BasicTensor<T> BasicNcnModel<T>::conv_block(BasicTape<T>& tape, const BasicTensor<T>& x, std::size_t first) const {
    auto h = conv2d_hx1(tape, x, p(first), p(first + 1));
    h = relu(tape, h);
    return conv2d_hx1(tape, h, p(first + 2), p(first + 3));
}

template <typename T>
BasicTensor<T> BasicNcnModel<T>::head(BasicTape<T>& tape, const BasicTensor<T>& x) const {
    auto h = relu(tape, add_bias(tape, matmul(tape, x, p(head_)), p(head_ + 1)));
    return add_bias(tape, matmul(tape, h, p(head_ + 2)), p(head_ + 3));
}

template <typename T>
ForwardResult<T> BasicNcnModel<T>::forward(BasicTape<T>& tape, const BasicTensor<T>& grid_batch,
                                           const BasicTensor<T>& raw_batch, std::span<const MaskRole> roles) const {
    const std::size_t d = cfg_.in_dim, dh = cfg_.hidden;
    std::size_t batch = 0;
    if (cfg_.uses_raw()) {
        if (!raw_batch.defined() || raw_batch.rank() != 2 || raw_batch.dim(1) != d) {
            throw UsageError("forward: raw batch must be [B, " + std::to_string(d) + "]");
        }
        batch = raw_batch.dim(0);
    }
    if (cfg_.uses_grid()) {
        if (!grid_batch.defined() || grid_batch.rank() != 3 || grid_batch.dim(1) != cfg_.K + 1 ||
            grid_batch.dim(2) != d) {
            throw UsageError("forward: grid batch must be [B, " + std::to_string(cfg_.K + 1) + ", " +
                             std::to_string(d) + "]");
        }
        if (cfg_.uses_raw() && grid_batch.dim(0) != batch) throw UsageError("forward: grid and raw batch sizes differ");
        batch = grid_batch.dim(0);
    }
    if (!roles.empty() && roles.size() != batch) throw UsageError("forward: one mask role per batch row required");

    ForwardResult<T> result;
    if (cfg_.variant == Variant::mlp_baseline) {
        result.logits = head(tape, raw_batch);
        return result;
    }

    // Hop rows reduced d -> d', then laid out as a d'-channel image of height K+1.
    auto reduced = add_bias(tape, matmul(tape, grid_batch, p(reduce_)), p(reduce_ + 1));
    auto image = reshape(tape, swap_last_two(tape, reduced), Shape{batch, dh, cfg_.K + 1, 1});
    auto h = conv_block(tape, image, block1_);
    h = relu(tape, h);
    h = conv_block(tape, h, block2_);
    auto h_neigh = reshape(tape, h, Shape{batch, dh});

    if (cfg_.variant == Variant::no_ra) {
        result.logits = head(tape, h_neigh);
        return result;
    }

    auto h_raw = add_bias(tape, matmul(tape, raw_batch, p(raw_)), p(raw_ + 1));
    auto weights = softmax_last_dim(
        tape, add_bias(tape, matmul(tape, concat_last_dim(tape, h_raw, h_neigh), p(fuse_)), p(fuse_ + 1)));
    result.weights = weights;

    auto gates = weights;
    const bool masking = cfg_.variant == Variant::full &&
                         std::any_of(roles.begin(), roles.end(), [](MaskRole r) { return r != MaskRole::keep; });
    if (masking) {
        BasicTensor<T> mask(Shape{batch, 2}, T(1));
        auto m = mask.data();
        for (std::size_t i = 0; i < batch; ++i) {
            if (roles[i] == MaskRole::zero_a0) m[i * 2] = T(0);
            if (roles[i] == MaskRole::zero_a1) m[i * 2 + 1] = T(0);
        }
        gates = elementwise_mul(tape, weights, mask);
    }

    auto fused = concat_last_dim(tape, elementwise_mul(tape, expand_last(tape, column(tape, gates, 0), dh), h_raw),
                                 elementwise_mul(tape, expand_last(tape, column(tape, gates, 1), dh), h_neigh));
    result.logits = head(tape, fused);
    return result;
}

template <typename T>
BasicTensor<T> grid_batch_tensor(const GridTensor& grid, std::span<const NodeId> ids) {
    const auto rows = slice_batch(grid, ids);
    return BasicTensor<T>(Shape{ids.size(), grid.hops(), grid.d}, std::vector<T>(rows.begin(), rows.end()));
}

template <typename T>
BasicTensor<T> raw_batch_tensor(const DenseMatrix& features, std::span<const NodeId> ids) {
    std::vector<T> values(ids.size() * features.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= features.rows) throw UsageError("raw_batch_tensor: node id out of range");
        const auto row = features.row(ids[i]);
        for (std::size_t j = 0; j < features.cols; ++j) values[i * features.cols + j] = static_cast<T>(row[j]);
    }
    return BasicTensor<T>(Shape{ids.size(), features.cols}, std::move(values));
}

std::vector<FusionWeight> export_fusion_weights(const NcnModel& model, const GridTensor& grid,
                                                const DenseMatrix& features, std::span<const NodeId> node_ids,
                                                std::size_t batch_size) {
    if (!model.config().has_fusion()) {
        throw UsageError("export_fusion_weights: variant '" + to_string(model.config().variant) +
                         "' has no fusion layer");
    }
    batch_size = std::max<std::size_t>(1, batch_size);
    std::vector<FusionWeight> out;
    out.reserve(node_ids.size());
    Tape tape(false);
    for (std::size_t start = 0; start < node_ids.size(); start += batch_size) {
        const auto ids = node_ids.subspan(start, std::min(batch_size, node_ids.size() - start));
        const auto res = model.forward(tape, grid_batch_tensor<float>(grid, ids), raw_batch_tensor<float>(features, ids));
        const auto w = res.weights.data();
        for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], w[i * 2], w[i * 2 + 1]});
    }
    return out;
}

template class BasicNcnModel<float>;
template class BasicNcnModel<double>;
template BasicTensor<float> grid_batch_tensor<float>(const GridTensor&, std::span<const NodeId>);
template BasicTensor<double> grid_batch_tensor<double>(const GridTensor&, std::span<const NodeId>);
template BasicTensor<float> raw_batch_tensor<float>(const DenseMatrix&, std::span<const NodeId>);
template BasicTensor<double> raw_batch_tensor<double>(const DenseMatrix&, std::span<const NodeId>);

}  // namespace ncn
