#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "pknng/connect.hpp"
#include "pknng/core.hpp"
#include "pknng/knn_graph.hpp"

namespace pknng {

/// Raised when shortest paths are requested on a graph with more than one component.
class DisconnectedGraphError : public std::runtime_error {
public:
    DisconnectedGraphError(std::size_t component_a, std::size_t component_b);
    std::size_t component_a() const noexcept { return a_; }
    std::size_t component_b() const noexcept { return b_; }

private:
    std::size_t a_;
    std::size_t b_;
};

/// All-pairs shortest paths, one binary-heap Dijkstra per source. Sources are
/// spread over `threads` workers; the result does not depend on the thread count.
DissimilarityMatrix apsp_dijkstra(const WeightedGraph& g, unsigned threads = 1);

/// O(n^3) reference implementation.
DissimilarityMatrix apsp_floyd_warshall(const WeightedGraph& g);

/// Dijkstra on sparse graphs, Floyd-Warshall once the graph holds more than
/// a quarter of all vertex pairs.
DissimilarityMatrix apsp(const WeightedGraph& g, unsigned threads = 1);

/// knn-graph -> outlier pruning -> connectors -> all-pairs geodesics.
DissimilarityMatrix pknng_metric(const PointSet& ps, std::size_t k, const ConnectorConfig& cfg,
                                 unsigned threads = 1);

/// The intermediate graphs of pknng_metric, for inspection and debug dumps.
struct PknngGraphs {
    WeightedGraph knn;
    WeightedGraph pruned;
    WeightedGraph connected;
    std::size_t components = 0;
    double mu = 0.0;
};
PknngGraphs pknng_graphs(const PointSet& ps, std::size_t k, const ConnectorConfig& cfg, unsigned threads = 1);

// Binary matrix file: 8-byte magic "PKNNGDM1", uint64 n, then n*n float64, all
// little-endian, row-major.
inline constexpr char kMatrixMagic[8] = {'P', 'K', 'N', 'N', 'G', 'D', 'M', '1'};

void write_matrix_binary(std::ostream& out, const DissimilarityMatrix& m);
void write_matrix_binary(const std::string& path, const DissimilarityMatrix& m);
DissimilarityMatrix read_matrix_binary(std::istream& in);
DissimilarityMatrix read_matrix_binary(const std::string& path);

/// Plain n x n CSV without a header, full round-trip precision.
void write_matrix_csv(std::ostream& out, const DissimilarityMatrix& m);
void write_matrix_csv(const std::string& path, const DissimilarityMatrix& m);

}  // namespace pknng
