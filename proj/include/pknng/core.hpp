#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pknng {

/// n points in D dimensions, stored row-major, with optional dense class labels.
///
/// Labels, when present, are integers in [0, C) with every class populated.
/// The seed records which generator run produced the set; ingested data has none.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t dim, std::vector<double> coords,
             std::optional<std::vector<int>> labels = std::nullopt,
             std::optional<std::uint64_t> seed = std::nullopt);

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    const std::vector<double>& coords() const noexcept { return coords_; }

    bool has_labels() const noexcept { return labels_.has_value(); }
    const std::vector<int>& labels() const;
    /// Number of distinct classes; 0 when unlabeled.
    int class_count() const noexcept { return class_count_; }

    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

    /// Rows selected by `indices`, in that order, with labels carried over.
    /// Labels are re-densified so the result stays a valid PointSet.
    PointSet subset(std::span<const std::size_t> indices) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::optional<std::vector<int>> labels_;
    int class_count_ = 0;
    std::optional<std::uint64_t> seed_;
};

/// Dense symmetric n x n matrix of nonnegative dissimilarities with a zero diagonal.
class DissimilarityMatrix {
public:
    DissimilarityMatrix() = default;

    /// Takes ownership of row-major values and checks every invariant; throws
    /// std::invalid_argument on violation.
    DissimilarityMatrix(std::size_t n, std::vector<double> values);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Largest absolute elementwise difference; matrices must have equal size.
    double max_abs_diff(const DissimilarityMatrix& other) const;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// Seeded pseudo-random source. Identical (seed, stream) pairs give identical sequences.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// An independent generator sharing this seed but drawing from another stream.
    Rng fork(std::uint64_t stream) const { return Rng(seed_, stream); }

    double uniform(double lo, double hi);
    double normal(double mean = 0.0, double sd = 1.0);
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

/// Stable 64-bit hash of (base, key, index); independent of platform and build.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t index);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

DissimilarityMatrix euclidean_matrix(const PointSet& ps);

/// Mean of the n(n-1)/2 pairwise Euclidean distances. Requires n >= 2.
double mean_pairwise_distance(const PointSet& ps);

/// Union-find with union by size and path halving.
class DisjointSet {
public:
    explicit DisjointSet(std::size_t n);
    std::size_t find(std::size_t x);
    /// Returns false when x and y were already joined.
    bool unite(std::size_t x, std::size_t y);
    std::size_t set_count() const noexcept { return sets_; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::size_t sets_;
};

// PointSet CSV: header `x0,...,x{D-1}[,label]`, one point per row.
void write_pointset_csv(std::ostream& out, const PointSet& ps);
void write_pointset_csv(const std::string& path, const PointSet& ps);
/// Label symbols may be arbitrary strings; they are remapped to dense ids
/// (numeric order when all symbols are integers, lexicographic otherwise).
PointSet read_pointset_csv(std::istream& in);
PointSet read_pointset_csv(const std::string& path);

}  // namespace pknng
