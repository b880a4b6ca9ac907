#include "pknng/geodesic.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "parallel.hpp"

namespace pknng {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void throw_if_disconnected(const WeightedGraph& g) {
    DisjointSet ds(g.vertex_count());
    for (const auto& e : g.edges()) ds.unite(e.i, e.j);
    if (ds.set_count() <= 1) return;
    // Name components by smallest member, as components() does.
    std::vector<std::size_t> id(g.vertex_count(), g.vertex_count());
    std::size_t next = 0;
    std::size_t first_root = ds.find(0);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        std::size_t r = ds.find(v);
        if (id[r] == g.vertex_count()) id[r] = next++;
        if (r != first_root) throw DisconnectedGraphError(0, id[r]);
    }
}

DissimilarityMatrix symmetrize_upper(std::size_t n, std::vector<double>& full) {
    for (std::size_t i = 0; i < n; ++i) {
        full[i * n + i] = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) full[j * n + i] = full[i * n + j];
    }
    return DissimilarityMatrix(n, std::move(full));
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int t = 0; t < 8; ++t) b[t] = static_cast<unsigned char>(v >> (8 * t));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("matrix file: truncated header");
    std::uint64_t v = 0;
    for (int t = 0; t < 8; ++t) v |= static_cast<std::uint64_t>(b[t]) << (8 * t);
    return v;
}

}  // namespace

DisconnectedGraphError::DisconnectedGraphError(std::size_t component_a, std::size_t component_b)
    : std::runtime_error("graph is disconnected: no path between component " + std::to_string(component_a) +
                         " and component " + std::to_string(component_b)),
      a_(component_a),
      b_(component_b) {}

DissimilarityMatrix apsp_dijkstra(const WeightedGraph& g, unsigned threads) {
    const std::size_t n = g.vertex_count();
    throw_if_disconnected(g);
    const Adjacency adj = g.adjacency();
    std::vector<double> full(n * n, kInf);

    detail::parallel_for(n, threads, [&](std::size_t source) {
        double* dist = full.data() + source * n;
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[source] = 0.0;
        heap.emplace(0.0, source);
        while (!heap.empty()) {
            auto [d, v] = heap.top();
            heap.pop();
            if (d > dist[v]) continue;
            auto nbrs = adj.neighbors(v);
            auto ws = adj.neighbor_weights(v);
            for (std::size_t t = 0; t < nbrs.size(); ++t) {
                double cand = d + ws[t];
                if (cand < dist[nbrs[t]]) {
                    dist[nbrs[t]] = cand;
                    heap.emplace(cand, nbrs[t]);
                }
            }
        }
    });
    return symmetrize_upper(n, full);
}

DissimilarityMatrix apsp_floyd_warshall(const WeightedGraph& g) {
    const std::size_t n = g.vertex_count();
    throw_if_disconnected(g);
    std::vector<double> d(n * n, kInf);
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
    for (const auto& e : g.edges()) {
        d[e.i * n + e.j] = std::min(d[e.i * n + e.j], e.weight);
        d[e.j * n + e.i] = d[e.i * n + e.j];
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double dik = d[i * n + k];
            if (dik == kInf) continue;
            double* row = d.data() + i * n;
            const double* krow = d.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) row[j] = std::min(row[j], dik + krow[j]);
        }
    }
    return symmetrize_upper(n, d);
}

DissimilarityMatrix apsp(const WeightedGraph& g, unsigned threads) {
    const double n = static_cast<double>(g.vertex_count());
    const bool dense = static_cast<double>(g.edges().size()) > n * (n - 1) / 8.0;
    return dense ? apsp_floyd_warshall(g) : apsp_dijkstra(g, threads);
}

PknngGraphs pknng_graphs(const PointSet& ps, std::size_t k, const ConnectorConfig& cfg, unsigned threads) {
    PknngGraphs out;
    out.knn = build_knn_graph(ps, k, threads);
    out.pruned = prune_outlier_edges(out.knn);
    out.components = components(out.pruned).count;
    out.mu = ps.size() >= 2 ? connector_length_scale(out.pruned, ps) : 0.0;
    out.connected = connect_graph(out.pruned, ps, cfg);
    return out;
}

DissimilarityMatrix pknng_metric(const PointSet& ps, std::size_t k, const ConnectorConfig& cfg, unsigned threads) {
    WeightedGraph knn = build_knn_graph(ps, k, threads);
    WeightedGraph pruned = prune_outlier_edges(knn);
    WeightedGraph connected = connect_graph(pruned, ps, cfg);
    return apsp(connected, threads);
}

// ---------------------------------------------------------------- persistence

void write_matrix_binary(std::ostream& out, const DissimilarityMatrix& m) {
    out.write(kMatrixMagic, sizeof kMatrixMagic);
    put_u64(out, m.size());
    for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw std::runtime_error("matrix file: write failed");
}

void write_matrix_binary(const std::string& path, const DissimilarityMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_matrix_binary(out, m);
}

DissimilarityMatrix read_matrix_binary(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8)) throw std::runtime_error("matrix file: truncated header");
    if (std::memcmp(magic, kMatrixMagic, 8) != 0) throw std::runtime_error("matrix file: bad magic");
    std::uint64_t n = get_u64(in);
    if (n > (1ULL << 20)) throw std::runtime_error("matrix file: implausible size");
    std::vector<double> values(n * n);
    for (auto& v : values) {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("matrix file: truncated data");
        std::uint64_t bits = 0;
        for (int t = 0; t < 8; ++t) bits |= static_cast<std::uint64_t>(b[t]) << (8 * t);
        v = std::bit_cast<double>(bits);
    }
    return DissimilarityMatrix(n, std::move(values));
}

DissimilarityMatrix read_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_matrix_binary(in);
}

void write_matrix_csv(std::ostream& out, const DissimilarityMatrix& m) {
    char buf[32];
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (j) out << ',';
            auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const DissimilarityMatrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_matrix_csv(out, m);
}

}  // namespace pknng
