#include "pknng/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "parallel.hpp"

namespace pknng {

// ---------------------------------------------------------------- WeightedGraph

void WeightedGraph::add_edge(std::size_t a, std::size_t b, double weight, EdgeKind kind, bool reciprocal) {
    if (a == b) throw std::invalid_argument("WeightedGraph: self-loop at vertex " + std::to_string(a));
    if (a >= n_ || b >= n_) throw std::out_of_range("WeightedGraph: vertex index out of range");
    if (!(weight > 0.0) || !std::isfinite(weight)) {
        throw std::invalid_argument("WeightedGraph: edge weight must be positive and finite");
    }
    if (a > b) std::swap(a, b);
    if (!keys_.insert(key(a, b)).second) {
        throw std::invalid_argument("WeightedGraph: duplicate edge (" + std::to_string(a) + ", " +
                                    std::to_string(b) + ")");
    }
    edges_.push_back(Edge{a, b, weight, kind, reciprocal});
}

std::size_t WeightedGraph::edge_count(EdgeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; }));
}

bool WeightedGraph::has_edge(std::size_t a, std::size_t b) const {
    if (a == b || a >= n_ || b >= n_) return false;
    if (a > b) std::swap(a, b);
    return keys_.contains(key(a, b));
}

Adjacency WeightedGraph::adjacency() const {
    Adjacency adj;
    adj.offsets.assign(n_ + 1, 0);
    for (const auto& e : edges_) {
        ++adj.offsets[e.i + 1];
        ++adj.offsets[e.j + 1];
    }
    for (std::size_t v = 0; v < n_; ++v) adj.offsets[v + 1] += adj.offsets[v];
    adj.targets.resize(adj.offsets[n_]);
    adj.weights.resize(adj.offsets[n_]);
    std::vector<std::size_t> fill(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& e : edges_) {
        adj.targets[fill[e.i]] = e.j;
        adj.weights[fill[e.i]++] = e.weight;
        adj.targets[fill[e.j]] = e.i;
        adj.weights[fill[e.j]++] = e.weight;
    }
    return adj;
}

// ---------------------------------------------------------------- knn

std::vector<std::vector<std::size_t>> nearest_neighbors(const PointSet& ps, std::size_t k, unsigned threads) {
    const std::size_t n = ps.size();
    if (k < 1 || k >= n) {
        throw std::invalid_argument("nearest_neighbors: need 1 <= k < n (k=" + std::to_string(k) +
                                    ", n=" + std::to_string(n) + ")");
    }
    std::vector<std::vector<std::size_t>> result(n);
    detail::parallel_for(n, threads, [&](std::size_t v) {
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(n - 1);
        for (std::size_t w = 0; w < n; ++w) {
            if (w != v) cand.emplace_back(euclidean_distance(ps.point(v), ps.point(w)), w);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        auto& out = result[v];
        out.reserve(k);
        for (std::size_t r = 0; r < k; ++r) out.push_back(cand[r].second);
    });
    return result;
}

namespace {

WeightedGraph graph_from_neighbors(const PointSet& ps, const std::vector<std::vector<std::size_t>>& nn,
                                   std::size_t k) {
    const std::size_t n = ps.size();
    std::vector<std::vector<std::size_t>> sorted(n);
    for (std::size_t v = 0; v < n; ++v) {
        sorted[v].assign(nn[v].begin(), nn[v].begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(sorted[v].begin(), sorted[v].end());
    }
    auto in_knn = [&](std::size_t v, std::size_t w) {
        return std::binary_search(sorted[v].begin(), sorted[v].end(), w);
    };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * k);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t w : sorted[v]) pairs.emplace_back(std::min(v, w), std::max(v, w));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    WeightedGraph g(n);
    std::size_t clamped = 0;
    for (auto [i, j] : pairs) {
        double d = euclidean_distance(ps.point(i), ps.point(j));
        if (d < kMinEdgeWeight) {
            d = kMinEdgeWeight;
            ++clamped;
        }
        g.add_edge(i, j, d, EdgeKind::Original, in_knn(i, j) && in_knn(j, i));
    }
    g.set_clamped_weights(clamped);
    return g;
}

}  // namespace

WeightedGraph build_knn_graph(const PointSet& ps, std::size_t k, unsigned threads) {
    return graph_from_neighbors(ps, nearest_neighbors(ps, k, threads), k);
}

// ---------------------------------------------------------------- pruning

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile_type7: empty sample");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_type7: p outside [0, 1]");
    std::sort(values.begin(), values.end());
    double pos = p * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double outlier_weight_threshold(const WeightedGraph& g) {
    std::vector<double> w;
    w.reserve(g.edges().size());
    for (const auto& e : g.edges()) w.push_back(e.weight);
    double q1 = quantile_type7(w, 0.25);
    double q3 = quantile_type7(std::move(w), 0.75);
    return q3 + 1.5 * (q3 - q1);
}

WeightedGraph prune_outlier_edges(const WeightedGraph& g) {
    if (g.edges().empty()) return g;
    const double threshold = outlier_weight_threshold(g);
    WeightedGraph out(g.vertex_count());
    for (const auto& e : g.edges()) {
        bool outlier = e.kind == EdgeKind::Original && !e.reciprocal && e.weight > threshold;
        if (!outlier) out.add_edge(e.i, e.j, e.weight, e.kind, e.reciprocal);
    }
    out.set_clamped_weights(g.clamped_weights());
    return out;
}

// ---------------------------------------------------------------- components

namespace {

ComponentLabeling label_components(DisjointSet& ds, std::size_t n) {
    ComponentLabeling lab;
    lab.component_of.assign(n, 0);
    std::vector<std::size_t> id_of_root(n, n);
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t r = ds.find(v);
        if (id_of_root[r] == n) id_of_root[r] = lab.count++;
        lab.component_of[v] = id_of_root[r];
    }
    return lab;
}

}  // namespace

ComponentLabeling components(const WeightedGraph& g) {
    DisjointSet ds(g.vertex_count());
    for (const auto& e : g.edges()) {
        if (e.kind == EdgeKind::Original) ds.unite(e.i, e.j);
    }
    return label_components(ds, g.vertex_count());
}

bool is_connected(const WeightedGraph& g) {
    DisjointSet ds(g.vertex_count());
    for (const auto& e : g.edges()) ds.unite(e.i, e.j);
    return ds.set_count() <= 1;
}

MinKGraph min_k_connected_graph(const PointSet& ps, unsigned threads) {
    const std::size_t n = ps.size();
    if (n < 2) throw std::invalid_argument("min_k_connected_graph: need at least two points");

    // Grow the neighbor horizon geometrically; ranks 1..k of every point are
    // merged into the union-find one rank at a time.
    std::size_t horizon = std::min<std::size_t>(8, n - 1);
    for (;;) {
        auto nn = nearest_neighbors(ps, horizon, threads);
        DisjointSet ds(n);
        for (std::size_t k = 1; k <= horizon; ++k) {
            for (std::size_t v = 0; v < n; ++v) ds.unite(v, nn[v][k - 1]);
            if (ds.set_count() == 1) return MinKGraph{graph_from_neighbors(ps, nn, k), k};
        }
        horizon = std::min(horizon * 2, n - 1);
    }
}

void write_edge_list(std::ostream& out, const WeightedGraph& g) {
    auto prec = out.precision(17);
    for (const auto& e : g.edges()) {
        out << e.i << ' ' << e.j << ' ' << e.weight << ' '
            << (e.kind == EdgeKind::Original ? "original" : "added") << ' ' << (e.reciprocal ? 1 : 0) << '\n';
    }
    out.precision(prec);
}

}  // namespace pknng
