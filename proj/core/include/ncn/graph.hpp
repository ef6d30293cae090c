#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ncn/matrix.hpp"

namespace ncn {

using NodeId = std::uint32_t;
using Label = std::int32_t;

// Immutable undirected attributed graph in CSR form.
//
// Invariants (checked by the factory): symmetric adjacency, sorted neighbor
// lists without repeats or self-loops, labels in [0, c), finite features.
class Graph {
public:
    Graph() = default;

    // Builds a graph from an arbitrary edge list. Edges are symmetrized,
    // duplicates merged and self-loops dropped. Throws DataError on an
    // endpoint >= n, a label outside [0, num_classes), a non-finite feature or
    // a feature/label row count different from n.
    static Graph from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges, DenseMatrix features,
                            std::vector<Label> labels, std::size_t num_classes);

    std::size_t num_nodes() const { return n_; }
    std::size_t feature_dim() const { return features_.cols; }
    std::size_t num_classes() const { return num_classes_; }
    // Undirected edge count (each {i, j} counted once).
    std::size_t num_edges() const { return neighbors_.size() / 2; }

    std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }
    std::span<const NodeId> neighbors(std::size_t v) const {
        return {neighbors_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<NodeId>& adjacency() const { return neighbors_; }
    const DenseMatrix& features() const { return features_; }
    const std::vector<Label>& labels() const { return labels_; }

    // Unordered list of undirected edges with i < j.
    std::vector<std::pair<NodeId, NodeId>> edge_list() const;

    bool operator==(const Graph&) const = default;

private:
    std::size_t n_ = 0;
    std::size_t num_classes_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> neighbors_;
    DenseMatrix features_;
    std::vector<Label> labels_;
};

// FNV-1a over node count, CSR structure and feature bits. Labels are not part
// of the checksum: a grid tensor depends only on structure and features.
std::uint64_t graph_checksum(const Graph& g);

// Symmetrically normalized adjacency D^-1/2 A D^-1/2 sharing the graph's CSR
// pattern. Isolated nodes have empty rows.
struct NormAdj {
    std::vector<std::size_t> offsets;
    std::vector<NodeId> indices;
    std::vector<double> values;
    std::vector<double> degree;

    std::size_t num_nodes() const { return degree.size(); }
};

NormAdj normalize_adjacency(const Graph& g);

// result[i] = sum_{j in N(i)} adj(i, j) * m[j]. Rows may be split over
// `threads` workers; every row is accumulated in neighbor order, so the
// result does not depend on the thread count.
DenseMatrix sparse_matvec_rows(const NormAdj& adj, const DenseMatrix& m, unsigned threads = 1);

// Mean over nodes of the fraction of neighbors sharing the node's label.
// Zero-degree nodes are excluded from the mean; a graph without any edges
// is a DataError.
double homophily_ratio(const Graph& g);

}  // namespace ncn
