#include "ncn/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <thread>

#include "ncn/error.hpp"

namespace ncn {

Graph Graph::from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges, DenseMatrix features,
                        std::vector<Label> labels, std::size_t num_classes) {
    if (features.rows != n) {
        throw DataError("feature rows (" + std::to_string(features.rows) + ") != node count (" + std::to_string(n) +
                        ")");
    }
    if (labels.size() != n) {
        throw DataError("label count (" + std::to_string(labels.size()) + ") != node count (" + std::to_string(n) +
                        ")");
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= num_classes) {
            throw DataError("label " + std::to_string(labels[v]) + " of node " + std::to_string(v) +
                            " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
    for (double value : features.data) {
        if (!std::isfinite(value)) throw DataError("non-finite feature value");
    }

    std::vector<std::size_t> counts(n + 1, 0);
    for (auto [a, b] : edges) {
        if (a >= n || b >= n) {
            throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") references node >= " +
                            std::to_string(n));
        }
        if (a == b) continue;
        ++counts[a + 1];
        ++counts[b + 1];
    }
    for (std::size_t v = 0; v < n; ++v) counts[v + 1] += counts[v];

    std::vector<NodeId> raw(counts[n]);
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    for (auto [a, b] : edges) {
        if (a == b) continue;
        raw[cursor[a]++] = b;
        raw[cursor[b]++] = a;
    }

    Graph g;
    g.n_ = n;
    g.num_classes_ = num_classes;
    g.offsets_.assign(n + 1, 0);
    g.neighbors_.reserve(raw.size());
    for (std::size_t v = 0; v < n; ++v) {
        auto first = raw.begin() + static_cast<std::ptrdiff_t>(counts[v]);
        auto last = raw.begin() + static_cast<std::ptrdiff_t>(counts[v + 1]);
        std::sort(first, last);
        last = std::unique(first, last);
        g.neighbors_.insert(g.neighbors_.end(), first, last);
        g.offsets_[v + 1] = g.neighbors_.size();
    }
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    return g;
}

std::vector<std::pair<NodeId, NodeId>> Graph::edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(num_edges());
    for (std::size_t v = 0; v < n_; ++v) {
        for (NodeId u : neighbors(v)) {
            if (v < u) out.emplace_back(static_cast<NodeId>(v), u);
        }
    }
    return out;
}

namespace {

struct Fnv1a {
    std::uint64_t state = 0xcbf29ce484222325ULL;

    void bytes(const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            state ^= b[i];
            state *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            const unsigned char byte = static_cast<unsigned char>(v >> (8 * i));
            bytes(&byte, 1);
        }
    }
};

}  // namespace

std::uint64_t graph_checksum(const Graph& g) {
    Fnv1a h;
    h.u64(g.num_nodes());
    h.u64(g.feature_dim());
    for (std::size_t off : g.offsets()) h.u64(off);
    for (NodeId u : g.adjacency()) h.u64(u);
    for (double x : g.features().data) h.u64(std::bit_cast<std::uint64_t>(x));
    return h.state;
}

NormAdj normalize_adjacency(const Graph& g) {
    const std::size_t n = g.num_nodes();
    NormAdj adj;
    adj.offsets = g.offsets();
    adj.indices = g.adjacency();
    adj.degree.resize(n);
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        adj.degree[v] = static_cast<double>(g.degree(v));
        if (adj.degree[v] > 0) inv_sqrt[v] = 1.0 / std::sqrt(adj.degree[v]);
    }
    adj.values.resize(adj.indices.size());
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t e = adj.offsets[v]; e < adj.offsets[v + 1]; ++e) {
            adj.values[e] = inv_sqrt[v] * inv_sqrt[adj.indices[e]];
        }
    }
    return adj;
}

namespace {

void matvec_range(const NormAdj& adj, const DenseMatrix& m, DenseMatrix& out, std::size_t begin, std::size_t end) {
    const std::size_t cols = m.cols;
    for (std::size_t i = begin; i < end; ++i) {
        double* dst = out.data.data() + i * cols;
        for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
            const double w = adj.values[e];
            const double* src = m.data.data() + static_cast<std::size_t>(adj.indices[e]) * cols;
            for (std::size_t k = 0; k < cols; ++k) dst[k] += w * src[k];
        }
    }
}

}  // namespace

DenseMatrix sparse_matvec_rows(const NormAdj& adj, const DenseMatrix& m, unsigned threads) {
    const std::size_t n = adj.num_nodes();
    if (m.rows != n) {
        throw UsageError("sparse_matvec_rows: matrix has " + std::to_string(m.rows) + " rows, adjacency has " +
                         std::to_string(n) + " nodes");
    }
    DenseMatrix out(n, m.cols);
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2 * threads) {
        matvec_range(adj, m, out, 0, n);
        return out;
    }
    {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            workers.emplace_back([&, begin, end] { matvec_range(adj, m, out, begin, end); });
        }
    }
    return out;
}

double homophily_ratio(const Graph& g) {
    const auto& y = g.labels();
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const auto nbrs = g.neighbors(v);
        if (nbrs.empty()) continue;
        std::size_t same = 0;
        for (NodeId u : nbrs) same += (y[u] == y[v]) ? 1 : 0;
        total += static_cast<double>(same) / static_cast<double>(nbrs.size());
        ++counted;
    }
    if (counted == 0) throw DataError("homophily_ratio: graph has no edges");
    return total / static_cast<double>(counted);
}

}  // namespace ncn
