#include "pknng/cluster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace pknng {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_k(std::size_t k, std::size_t n, const char* who) {
    if (k < 1 || k > n) {
        throw std::invalid_argument(std::string(who) + ": need 1 <= k <= n (k=" + std::to_string(k) +
                                    ", n=" + std::to_string(n) + ")");
    }
}

// Relabels so cluster ids appear in order of their smallest member.
std::vector<int> canonical_labels(std::span<const std::size_t> group) {
    std::vector<int> out(group.size());
    std::vector<int> id(group.size(), -1);
    int next = 0;
    for (std::size_t v = 0; v < group.size(); ++v) {
        if (id[group[v]] < 0) id[group[v]] = next++;
        out[v] = id[group[v]];
    }
    return out;
}

}  // namespace

int ClusterAssignment::cluster_count() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

// ---------------------------------------------------------------- PAM

double medoid_objective(const DissimilarityMatrix& d, std::span<const std::size_t> medoids) {
    double total = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        double best = kInf;
        for (std::size_t m : medoids) best = std::min(best, d(j, m));
        total += best;
    }
    return total;
}

ClusterAssignment pam(const DissimilarityMatrix& d, std::size_t k) {
    const std::size_t n = d.size();
    check_k(k, n, "pam");

    std::vector<char> is_medoid(n, 0);
    std::vector<std::size_t> medoids;
    std::vector<double> nearest(n, kInf);

    // BUILD: first medoid minimizes the total distance, then add the point with
    // the largest reduction of the current objective.
    {
        std::size_t first = 0;
        double best = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (double v : d.row(i)) s += v;
            if (s < best) {
                best = s;
                first = i;
            }
        }
        medoids.push_back(first);
        is_medoid[first] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = d(j, first);
    }
    while (medoids.size() < k) {
        std::size_t pick = n;
        double best_gain = -kInf;
        for (std::size_t c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) gain += std::max(nearest[j] - d(j, c), 0.0);
            if (gain > best_gain) {
                best_gain = gain;
                pick = c;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(j, pick));
    }

    // SWAP: steepest descent over all (medoid, non-medoid) exchanges. For each
    // candidate the deltas of all k removals are accumulated in one pass using
    // the nearest and second-nearest medoid distances.
    std::vector<std::size_t> near_pos(n);
    std::vector<double> dn(n), ds(n), delta(k);
    double objective = medoid_objective(d, medoids);
    const std::size_t max_iter = 100 * (n + 1);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t j = 0; j < n; ++j) {
            dn[j] = ds[j] = kInf;
            for (std::size_t p = 0; p < k; ++p) {
                double v = d(j, medoids[p]);
                if (v < dn[j]) {
                    ds[j] = dn[j];
                    dn[j] = v;
                    near_pos[j] = p;
                } else if (v < ds[j]) {
                    ds[j] = v;
                }
            }
        }

        double best_delta = 0.0;
        std::size_t best_pos = k, best_cand = n;
        for (std::size_t h = 0; h < n; ++h) {
            if (is_medoid[h]) continue;
            std::fill(delta.begin(), delta.end(), 0.0);
            double shared = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double djh = d(j, h);
                const double gain = std::min(djh - dn[j], 0.0);
                shared += gain;
                delta[near_pos[j]] += std::min(djh, ds[j]) - dn[j] - gain;
            }
            for (std::size_t p = 0; p < k; ++p) {
                const double total = shared + delta[p];
                bool better = total < best_delta ||
                              (total == best_delta && best_pos < k &&
                               std::tie(medoids[p], h) < std::tie(medoids[best_pos], best_cand));
                if (better) {
                    best_delta = total;
                    best_pos = p;
                    best_cand = h;
                }
            }
        }
        // Strict decrease, with slack for rounding in the accumulated deltas.
        if (best_pos == k || best_delta >= -1e-12 * std::max(1.0, objective)) break;
        is_medoid[medoids[best_pos]] = 0;
        is_medoid[best_cand] = 1;
        medoids[best_pos] = best_cand;
        objective = medoid_objective(d, medoids);
    }

    std::sort(medoids.begin(), medoids.end());
    ClusterAssignment out;
    out.medoids = medoids;
    out.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t best = 0;
        for (std::size_t p = 1; p < k; ++p) {
            if (d(j, medoids[p]) < d(j, medoids[best])) best = p;
        }
        out.labels[j] = static_cast<int>(best);
    }
    out.objective = medoid_objective(d, medoids);
    return out;
}

// ---------------------------------------------------------------- hierarchical

std::string to_string(Linkage l) {
    switch (l) {
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
        case Linkage::Average: return "average";
    }
    return "?";
}

Linkage parse_linkage(std::string_view name) {
    std::string n;
    for (char c : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (n == "single") return Linkage::Single;
    if (n == "complete") return Linkage::Complete;
    if (n == "average") return Linkage::Average;
    throw std::invalid_argument("unknown linkage '" + std::string(name) + "'");
}

ClusterAssignment hierarchical(const DissimilarityMatrix& d, std::size_t k, Linkage linkage) {
    const std::size_t n = d.size();
    check_k(k, n, "hierarchical");

    // Slot a holds the cluster whose smallest member is a; merging b into a (a < b)
    // keeps that property.
    std::vector<double> w(d.values());
    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    DisjointSet members(n);

    while (active.size() > k) {
        double best = kInf;
        std::size_t ia = 0, ib = 0;  // positions in `active`
        for (std::size_t x = 0; x < active.size(); ++x) {
            const double* row = w.data() + active[x] * n;
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                if (row[active[y]] < best) {
                    best = row[active[y]];
                    ia = x;
                    ib = y;
                }
            }
        }
        const std::size_t a = active[ia], b = active[ib];
        const double na = static_cast<double>(size[a]), nb = static_cast<double>(size[b]);
        for (std::size_t c : active) {
            if (c == a || c == b) continue;
            double dac = w[a * n + c], dbc = w[b * n + c], v = 0.0;
            switch (linkage) {
                case Linkage::Single: v = std::min(dac, dbc); break;
                case Linkage::Complete: v = std::max(dac, dbc); break;
                case Linkage::Average: v = (na * dac + nb * dbc) / (na + nb); break;
            }
            w[a * n + c] = w[c * n + a] = v;
        }
        size[a] += size[b];
        members.unite(a, b);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(ib));
    }

    std::vector<std::size_t> root(n);
    for (std::size_t v = 0; v < n; ++v) root[v] = members.find(v);
    return ClusterAssignment{canonical_labels(root), {}, std::nullopt};
}

// ---------------------------------------------------------------- MST

ClusterAssignment mst_cluster(const DissimilarityMatrix& d, std::size_t k) {
    const std::size_t n = d.size();
    check_k(k, n, "mst_cluster");

    struct TreeEdge {
        double w;
        std::size_t i, j;
    };
    std::vector<TreeEdge> tree;
    tree.reserve(n - 1);

    // Prim on the dense graph.
    std::vector<char> in_tree(n, 0);
    std::vector<double> key(n, kInf);
    std::vector<std::size_t> parent(n, 0);
    key[0] = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t v = n;
        for (std::size_t u = 0; u < n; ++u) {
            if (!in_tree[u] && (v == n || key[u] < key[v])) v = u;
        }
        in_tree[v] = 1;
        if (step > 0) tree.push_back(TreeEdge{key[v], std::min(v, parent[v]), std::max(v, parent[v])});
        for (std::size_t u = 0; u < n; ++u) {
            if (!in_tree[u] && d(v, u) < key[u]) {
                key[u] = d(v, u);
                parent[u] = v;
            }
        }
    }

    std::sort(tree.begin(), tree.end(),
              [](const TreeEdge& a, const TreeEdge& b) { return std::tie(a.w, a.i, a.j) < std::tie(b.w, b.i, b.j); });
    DisjointSet ds(n);
    for (std::size_t e = 0; e + (k - 1) < tree.size(); ++e) ds.unite(tree[e].i, tree[e].j);

    std::vector<std::size_t> root(n);
    for (std::size_t v = 0; v < n; ++v) root[v] = ds.find(v);
    return ClusterAssignment{canonical_labels(root), {}, std::nullopt};
}

// ---------------------------------------------------------------- spectral

Eigen::MatrixXd normalized_affinity(const DissimilarityMatrix& d, double sigma_factor) {
    const std::size_t n = d.size();
    if (!(sigma_factor > 0.0)) throw std::invalid_argument("spectral: sigma_factor must be positive");
    if (n < 2) throw std::invalid_argument("spectral: need at least two points");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) mean += d(i, j);
    }
    mean /= 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    const double sigma = sigma_factor * mean;
    if (!(sigma > 0.0)) throw std::invalid_argument("spectral: all dissimilarities are zero");

    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        a(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < ni; ++j) {
            double v = d(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            a(i, j) = a(j, i) = std::exp(-v * v / (2.0 * sigma * sigma));
        }
    }
    Eigen::VectorXd deg = a.rowwise().sum();
    for (Eigen::Index i = 0; i < ni; ++i) {
        if (!(deg(i) > 0.0)) {
            throw std::runtime_error("spectral: point " + std::to_string(i) + " has zero affinity to all others");
        }
    }
    Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
    return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

SpectralEmbedding spectral_embedding(const DissimilarityMatrix& d, std::size_t k, double sigma_factor) {
    check_k(k, d.size(), "spectral");
    Eigen::MatrixXd m = normalized_affinity(d, sigma_factor);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) throw std::runtime_error("spectral: eigen-decomposition failed");

    const Eigen::Index n = m.rows(), kk = static_cast<Eigen::Index>(k);
    SpectralEmbedding out;
    out.rows.resize(n, kk);
    out.eigenvalues.resize(kk);
    for (Eigen::Index c = 0; c < kk; ++c) {  // eigenvalues come ascending
        out.rows.col(c) = solver.eigenvectors().col(n - 1 - c);
        out.eigenvalues(c) = solver.eigenvalues()(n - 1 - c);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        double norm = out.rows.row(i).norm();
        if (!(norm > 0.0)) throw std::runtime_error("spectral: zero row in eigenvector embedding");
        out.rows.row(i) /= norm;
    }
    return out;
}

KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, Rng& rng, int restarts, int max_iter) {
    const auto n = static_cast<std::size_t>(x.rows());
    check_k(k, n, "kmeans");
    const auto kk = static_cast<Eigen::Index>(k);

    KMeansResult best;
    best.inertia = kInf;
    for (int r = 0; r < restarts; ++r) {
        // k-means++ seeding
        Eigen::MatrixXd cent(kk, x.cols());
        std::vector<double> d2(n, kInf);
        std::size_t first = rng.index(n);
        cent.row(0) = x.row(static_cast<Eigen::Index>(first));
        for (Eigen::Index c = 1; c < kk; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - cent.row(c - 1)).squaredNorm());
                total += d2[i];
            }
            std::size_t pick = n - 1;
            if (total > 0.0) {
                double u = rng.uniform(0.0, total), acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = rng.index(n);
            }
            cent.row(c) = x.row(static_cast<Eigen::Index>(pick));
        }

        std::vector<int> labels(n, -1);
        std::vector<double> dist(n);
        for (int it = 0; it < max_iter; ++it) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int arg = 0;
                double bd = kInf;
                for (Eigen::Index c = 0; c < kk; ++c) {
                    double v = (x.row(static_cast<Eigen::Index>(i)) - cent.row(c)).squaredNorm();
                    if (v < bd) {
                        bd = v;
                        arg = static_cast<int>(c);
                    }
                }
                dist[i] = bd;
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
            }
            // Refill empty clusters with the worst-fitting point of a larger cluster.
            std::vector<std::size_t> count(k, 0);
            for (int l : labels) ++count[static_cast<std::size_t>(l)];
            for (std::size_t c = 0; c < k; ++c) {
                if (count[c] > 0) continue;
                std::size_t far = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (count[static_cast<std::size_t>(labels[i])] > 1 && (far == n || dist[i] > dist[far])) far = i;
                }
                if (far == n) break;
                --count[static_cast<std::size_t>(labels[far])];
                labels[far] = static_cast<int>(c);
                count[c] = 1;
                dist[far] = 0.0;
                changed = true;
            }
            cent.setZero();
            for (std::size_t i = 0; i < n; ++i) cent.row(labels[i]) += x.row(static_cast<Eigen::Index>(i));
            for (Eigen::Index c = 0; c < kk; ++c) {
                if (count[static_cast<std::size_t>(c)] > 0) cent.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
            }
            if (!changed && it > 0) break;
        }

        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += (x.row(static_cast<Eigen::Index>(i)) - cent.row(labels[i])).squaredNorm();
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centroids = cent;
        }
    }
    return best;
}

ClusterAssignment spectral(const DissimilarityMatrix& d, std::size_t k, double sigma_factor, Rng& rng) {
    const std::size_t n = d.size();
    check_k(k, n, "spectral");
    if (k == 1) return ClusterAssignment{std::vector<int>(n, 0), {}, std::nullopt};
    SpectralEmbedding emb = spectral_embedding(d, k, sigma_factor);
    KMeansResult km = kmeans(emb.rows, k, rng);
    std::vector<std::size_t> group(km.labels.begin(), km.labels.end());
    return ClusterAssignment{canonical_labels(group), {}, std::nullopt};
}

// ---------------------------------------------------------------- accuracy

std::vector<std::size_t> hungarian_min_cost(std::span<const double> cost, std::size_t m) {
    if (cost.size() != m * m) throw std::invalid_argument("hungarian_min_cost: cost must be m x m");
    // Shortest augmenting paths with row/column potentials; 1-based with a
    // virtual column 0.
    std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(m);
    for (std::size_t j = 1; j <= m; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (predicted.empty()) throw std::invalid_argument("accuracy: empty labeling");

    auto dense = [](std::span<const int> raw, std::size_t& count) {
        std::vector<int> uniq(raw.begin(), raw.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        std::vector<std::size_t> out(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out[i] = static_cast<std::size_t>(std::lower_bound(uniq.begin(), uniq.end(), raw[i]) - uniq.begin());
        }
        count = uniq.size();
        return out;
    };
    std::size_t np = 0, nt = 0;
    auto p = dense(predicted, np);
    auto t = dense(truth, nt);
    const std::size_t m = std::max(np, nt);

    std::vector<double> confusion(m * m, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) confusion[p[i] * m + t[i]] += 1.0;
    const double top = *std::max_element(confusion.begin(), confusion.end());
    std::vector<double> cost(m * m);
    for (std::size_t i = 0; i < m * m; ++i) cost[i] = top - confusion[i];

    auto match = hungarian_min_cost(cost, m);
    double correct = 0.0;
    for (std::size_t r = 0; r < m; ++r) correct += confusion[r * m + match[r]];
    return correct / static_cast<double>(predicted.size());
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& a) {
    out << "point_index,cluster_id\n";
    for (std::size_t i = 0; i < a.labels.size(); ++i) out << i << ',' << a.labels[i] << '\n';
}

}  // namespace pknng
