#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pknng/core.hpp"

namespace pknng {

/// Per-point cluster ids in [0, k), every id populated. Medoid-based methods also
/// report the medoid of each cluster (medoids[c] is the medoid of cluster c) and
/// the objective sum_i d[i][medoid(i)].
struct ClusterAssignment {
    std::vector<int> labels;
    std::vector<std::size_t> medoids;
    std::optional<double> objective;

    int cluster_count() const;
};

/// Partitioning Around Medoids: greedy BUILD, then best-improvement SWAP until no
/// swap lowers the objective. Deterministic; ties go to the lowest indices.
ClusterAssignment pam(const DissimilarityMatrix& d, std::size_t k);

/// Sum over points of the distance to the closest of `medoids`.
double medoid_objective(const DissimilarityMatrix& d, std::span<const std::size_t> medoids);

enum class Linkage { Single, Complete, Average };
std::string to_string(Linkage l);
Linkage parse_linkage(std::string_view name);

/// Agglomerative clustering with Lance-Williams updates, stopped at k clusters.
/// Equal merge distances go to the pair with the smallest (i, j) member indices.
ClusterAssignment hierarchical(const DissimilarityMatrix& d, std::size_t k, Linkage linkage);

/// Minimum spanning tree of the complete graph with its k-1 heaviest edges removed.
ClusterAssignment mst_cluster(const DissimilarityMatrix& d, std::size_t k);

/// Gaussian affinity exp(-d^2 / (2 sigma^2)) with sigma = sigma_factor * mean
/// off-diagonal d, zero diagonal, symmetrically normalized by the degrees.
Eigen::MatrixXd normalized_affinity(const DissimilarityMatrix& d, double sigma_factor);

struct SpectralEmbedding {
    Eigen::MatrixXd rows;          // n x k, each row scaled to unit length
    Eigen::VectorXd eigenvalues;   // the k largest, descending
};

/// Top-k eigenvectors of normalized_affinity(d), rows normalized.
SpectralEmbedding spectral_embedding(const DissimilarityMatrix& d, std::size_t k, double sigma_factor);

struct KMeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest inertia wins.
KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, Rng& rng, int restarts = 10, int max_iter = 300);

/// Spectral clustering on a dissimilarity matrix (normalized affinity, unit rows,
/// k-means). sigma_factor scales the kernel width relative to the mean distance.
ClusterAssignment spectral(const DissimilarityMatrix& d, std::size_t k, double sigma_factor, Rng& rng);

/// Optimal assignment for a square cost matrix (row-major, m x m); returns the
/// column matched to each row.
std::vector<std::size_t> hungarian_min_cost(std::span<const double> cost, std::size_t m);

/// Fraction of points whose predicted cluster maps to their class under the best
/// one-to-one cluster/class matching. Label values may be any nonnegative ints.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// CSV `point_index,cluster_id` with a header row.
void write_assignment_csv(std::ostream& out, const ClusterAssignment& a);

}  // namespace pknng
