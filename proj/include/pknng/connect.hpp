#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pknng/core.hpp"
#include "pknng/knn_graph.hpp"

namespace pknng {

/// Which connector edges join the knn sub-graphs.
enum class ConnectScheme {
    MinSpan,       // C-1 shortest edges forming a spanning tree over components
    AllSubGraphs,  // shortest edge between every pair of components
    AllEdges,      // every point pair not already joined by an original edge
    Medoids,       // every pair of component medoids
};

enum class Penalty {
    Exponential,         // d * exp(d / mu)
    ExponentialShifted,  // d * exp(d / mu - 1)
    Plain,               // d
};

/// Where the penalty's length scale comes from. Only the mean of the pruned
/// original edges is implemented.
enum class MuSource { PostPruneMean };

struct ConnectorConfig {
    ConnectScheme scheme = ConnectScheme::MinSpan;
    Penalty penalty = Penalty::Exponential;
    MuSource mu_source = MuSource::PostPruneMean;
};

std::string to_string(ConnectScheme s);
std::string to_string(Penalty p);
/// Accepts the names printed by to_string, case-insensitively (e.g. "minspan", "all-edges").
ConnectScheme parse_scheme(std::string_view name);
Penalty parse_penalty(std::string_view name);

/// Mean weight of the ORIGINAL edges. Throws std::domain_error when there are none.
double mean_edge_weight(const WeightedGraph& g);

/// Length scale used for connector penalties: mean_edge_weight(g), falling back
/// to the mean pairwise distance of ps when g has no original edges.
double connector_length_scale(const WeightedGraph& g, const PointSet& ps);

double penalized_weight(double d, double mu, Penalty penalty);

/// Point minimizing summed Euclidean distance to the rest of its component,
/// one per component id; ties go to the lowest index.
std::vector<std::size_t> component_medoids(const PointSet& ps, const ComponentLabeling& lab);

/// Adds ADDED edges under cfg.scheme so the graph becomes connected. Connector
/// weights are penalized_weight(euclidean length, mu, cfg.penalty).
WeightedGraph connect_graph(const WeightedGraph& g, const PointSet& ps, const ConnectorConfig& cfg);

}  // namespace pknng
