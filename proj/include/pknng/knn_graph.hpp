#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_set>
#include <vector>

#include "pknng/core.hpp"

namespace pknng {

enum class EdgeKind : std::uint8_t { Original, Added };

struct Edge {
    std::size_t i = 0;  // always i < j
    std::size_t j = 0;
    double weight = 0.0;
    EdgeKind kind = EdgeKind::Original;
    bool reciprocal = false;
};

/// Compressed adjacency: neighbors of v are targets[offsets[v] .. offsets[v+1]).
struct Adjacency {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> targets;
    std::vector<double> weights;

    std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
    std::span<const std::size_t> neighbors(std::size_t v) const {
        return {targets.data() + offsets[v], degree(v)};
    }
    std::span<const double> neighbor_weights(std::size_t v) const {
        return {weights.data() + offsets[v], degree(v)};
    }
};

/// Undirected weighted graph over point indices. Each edge is stored once with
/// i < j; self-loops, duplicate pairs and non-positive weights are rejected.
class WeightedGraph {
public:
    explicit WeightedGraph(std::size_t n = 0) : n_(n) {}

    void add_edge(std::size_t a, std::size_t b, double weight, EdgeKind kind, bool reciprocal = false);

    std::size_t vertex_count() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t edge_count(EdgeKind kind) const;
    bool has_edge(std::size_t a, std::size_t b) const;

    Adjacency adjacency() const;

    /// Number of zero-length point pairs whose weight was clamped while building.
    std::size_t clamped_weights() const noexcept { return clamped_; }
    void set_clamped_weights(std::size_t c) noexcept { clamped_ = c; }

private:
    std::uint64_t key(std::size_t i, std::size_t j) const noexcept {
        return static_cast<std::uint64_t>(i) * n_ + j;
    }

    std::size_t n_;
    std::vector<Edge> edges_;
    std::unordered_set<std::uint64_t> keys_;
    std::size_t clamped_ = 0;
};

struct ComponentLabeling {
    std::vector<std::size_t> component_of;
    std::size_t count = 0;
};

/// Weight assigned to zero-length edges between duplicate points.
inline constexpr double kMinEdgeWeight = 1e-12;

/// k nearest neighbors of every point, nearest first, ties broken by lower index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const PointSet& ps, std::size_t k,
                                                        unsigned threads = 1);

/// knn-graph with Euclidean weights; every edge ORIGINAL and tagged reciprocal
/// iff each endpoint is among the other's k nearest neighbors. Requires 1 <= k < n.
WeightedGraph build_knn_graph(const PointSet& ps, std::size_t k, unsigned threads = 1);

/// Linear-interpolation sample quantile: position p*(m-1) among sorted values.
double quantile_type7(std::vector<double> values, double p);

/// Q3 + 1.5 * IQR over all edge weights of g.
double outlier_weight_threshold(const WeightedGraph& g);

/// Drops the edges that are non-reciprocal and heavier than outlier_weight_threshold(g).
/// Thresholds are computed once on the input graph.
WeightedGraph prune_outlier_edges(const WeightedGraph& g);

/// Connected components over ORIGINAL edges; ids follow the smallest member index.
ComponentLabeling components(const WeightedGraph& g);

/// True when all vertices are reachable using edges of any kind.
bool is_connected(const WeightedGraph& g);

struct MinKGraph {
    WeightedGraph graph;
    std::size_t k = 0;
};

/// Unpruned knn-graph for the smallest k that makes it connected. Requires n >= 2.
MinKGraph min_k_connected_graph(const PointSet& ps, unsigned threads = 1);

/// Debug dump, one edge per line: `i j weight kind reciprocal`.
void write_edge_list(std::ostream& out, const WeightedGraph& g);

}  // namespace pknng
