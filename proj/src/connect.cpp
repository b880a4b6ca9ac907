#include "pknng/connect.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace pknng {

namespace {

std::string normalize_name(std::string_view name) {
    std::string out;
    for (char c : name) {
        if (c == '-' || c == '_' || c == ' ') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

struct Candidate {
    double length = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    std::size_t j = 0;
};

}  // namespace

std::string to_string(ConnectScheme s) {
    switch (s) {
        case ConnectScheme::MinSpan: return "minspan";
        case ConnectScheme::AllSubGraphs: return "allsubgraphs";
        case ConnectScheme::AllEdges: return "alledges";
        case ConnectScheme::Medoids: return "medoids";
    }
    return "?";
}

std::string to_string(Penalty p) {
    switch (p) {
        case Penalty::Exponential: return "exponential";
        case Penalty::ExponentialShifted: return "exponential-shifted";
        case Penalty::Plain: return "plain";
    }
    return "?";
}

ConnectScheme parse_scheme(std::string_view name) {
    const std::string n = normalize_name(name);
    if (n == "minspan") return ConnectScheme::MinSpan;
    if (n == "allsubgraphs") return ConnectScheme::AllSubGraphs;
    if (n == "alledges") return ConnectScheme::AllEdges;
    if (n == "medoids") return ConnectScheme::Medoids;
    throw std::invalid_argument("unknown connection scheme '" + std::string(name) + "'");
}

Penalty parse_penalty(std::string_view name) {
    const std::string n = normalize_name(name);
    if (n == "exponential" || n == "exp") return Penalty::Exponential;
    if (n == "exponentialshifted" || n == "shifted") return Penalty::ExponentialShifted;
    if (n == "plain") return Penalty::Plain;
    throw std::invalid_argument("unknown penalty '" + std::string(name) + "'");
}

double mean_edge_weight(const WeightedGraph& g) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& e : g.edges()) {
        if (e.kind == EdgeKind::Original) {
            sum += e.weight;
            ++count;
        }
    }
    if (count == 0) throw std::domain_error("mean_edge_weight: graph has no original edges");
    return sum / static_cast<double>(count);
}

double connector_length_scale(const WeightedGraph& g, const PointSet& ps) {
    if (g.edge_count(EdgeKind::Original) > 0) return mean_edge_weight(g);
    return mean_pairwise_distance(ps);
}

double penalized_weight(double d, double mu, Penalty penalty) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("penalized_weight: mu must be positive");
    if (d < 0.0) throw std::invalid_argument("penalized_weight: negative distance");
    switch (penalty) {
        case Penalty::Exponential: return d * std::exp(d / mu);
        case Penalty::ExponentialShifted: return d * std::exp(d / mu - 1.0);
        case Penalty::Plain: return d;
    }
    return d;
}

std::vector<std::size_t> component_medoids(const PointSet& ps, const ComponentLabeling& lab) {
    std::vector<std::vector<std::size_t>> members(lab.count);
    for (std::size_t v = 0; v < lab.component_of.size(); ++v) members[lab.component_of[v]].push_back(v);

    std::vector<std::size_t> medoids(lab.count);
    for (std::size_t c = 0; c < lab.count; ++c) {
        const auto& m = members[c];
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a : m) {
            double total = 0.0;
            for (std::size_t b : m) total += euclidean_distance(ps.point(a), ps.point(b));
            if (total < best) {
                best = total;
                medoids[c] = a;
            }
        }
    }
    return medoids;
}

WeightedGraph connect_graph(const WeightedGraph& g, const PointSet& ps, const ConnectorConfig& cfg) {
    const std::size_t n = g.vertex_count();
    if (ps.size() != n) throw std::invalid_argument("connect_graph: point count differs from vertex count");

    const ComponentLabeling lab = components(g);
    const std::size_t C = lab.count;

    std::vector<std::pair<std::size_t, std::size_t>> added;

    switch (cfg.scheme) {
        case ConnectScheme::MinSpan:
        case ConnectScheme::AllSubGraphs: {
            if (C <= 1) break;
            // Shortest point pair between every pair of components (exhaustive scan;
            // strict comparison keeps the lexicographically first pair on ties).
            std::vector<Candidate> best(C * C);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ci = lab.component_of[i];
                for (std::size_t j = i + 1; j < n; ++j) {
                    const std::size_t cj = lab.component_of[j];
                    if (ci == cj) continue;
                    double d = euclidean_distance(ps.point(i), ps.point(j));
                    Candidate& slot = best[std::min(ci, cj) * C + std::max(ci, cj)];
                    if (d < slot.length) slot = Candidate{d, i, j};
                }
            }
            std::vector<Candidate> cands;
            cands.reserve(C * (C - 1) / 2);
            for (std::size_t a = 0; a < C; ++a) {
                for (std::size_t b = a + 1; b < C; ++b) cands.push_back(best[a * C + b]);
            }
            if (cfg.scheme == ConnectScheme::AllSubGraphs) {
                for (const auto& c : cands) added.emplace_back(c.i, c.j);
                break;
            }
            std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
                return std::tie(x.length, x.i, x.j) < std::tie(y.length, y.i, y.j);
            });
            DisjointSet ds(C);
            for (const auto& c : cands) {
                if (ds.unite(lab.component_of[c.i], lab.component_of[c.j])) added.emplace_back(c.i, c.j);
                if (ds.set_count() == 1) break;
            }
            break;
        }
        case ConnectScheme::AllEdges: {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (!g.has_edge(i, j)) added.emplace_back(i, j);
                }
            }
            break;
        }
        case ConnectScheme::Medoids: {
            if (C <= 1) break;
            const auto medoids = component_medoids(ps, lab);
            for (std::size_t a = 0; a < C; ++a) {
                for (std::size_t b = a + 1; b < C; ++b) {
                    added.emplace_back(std::min(medoids[a], medoids[b]), std::max(medoids[a], medoids[b]));
                }
            }
            break;
        }
    }

    WeightedGraph out = g;
    if (added.empty()) return out;

    const double mu = connector_length_scale(g, ps);
    for (auto [i, j] : added) {
        double d = std::max(euclidean_distance(ps.point(i), ps.point(j)), kMinEdgeWeight);
        double w = penalized_weight(d, mu, cfg.penalty);
        if (!std::isfinite(w)) {
            throw std::overflow_error("connect_graph: penalized weight overflows (d/mu = " +
                                      std::to_string(d / mu) + ")");
        }
        out.add_edge(i, j, w, EdgeKind::Added);
    }
    return out;
}

}  // namespace pknng
