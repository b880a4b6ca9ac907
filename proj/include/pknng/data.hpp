#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pknng/core.hpp"

namespace pknng {

enum class DatasetFamily { TwoArcs, ThreeSpirals, ThreeRings, FourGaussians };
enum class NoiseLevel { Low, Medium, High };
enum class Embedding { Plane2d, Swiss3d, Swiss3dNoise, Rot10dNoise };

std::string to_string(DatasetFamily f);
std::string to_string(NoiseLevel l);
std::string to_string(Embedding e);
DatasetFamily parse_family(std::string_view name);
NoiseLevel parse_noise_level(std::string_view name);
Embedding parse_embedding(std::string_view name);

/// True class count of each family: 2, 3, 5, 4.
int class_count(DatasetFamily f);

/// Geometry and noise constants of the synthetic datasets. Bump `version`
/// whenever a default changes so persisted results stay traceable.
struct DataConstants {
    int version = 1;

    double arcs_radius = 1.0;
    std::array<double, 3> arcs_noise{0.05, 0.12, 0.20};  // absolute radial sigma

    double spiral_a = 1.0;  // r = a * theta
    double spiral_theta_min = std::numbers::pi / 2;
    double spiral_theta_max = 2.5 * std::numbers::pi;
    std::array<double, 3> spiral_noise{0.02, 0.05, 0.08};  // sigma relative to r

    double ring_r0 = 1.0;  // central disk
    double ring_r1 = 2.2;
    double ring_r2 = 3.4;
    std::array<double, 3> ring_noise{0.08, 0.16, 0.24};
    double ring_gap = 0.15;  // radians between the two halves of a ring

    double gauss_separation = 2.0;  // side of the square holding the centers
    double gauss_sigma_small = 0.1;
    double gauss_sigma_ratio = 3.0;

    double swiss_span = 2 * std::numbers::pi;    // total winding angle
    double swiss_start = 1.5 * std::numbers::pi;  // angle at the inner edge
    double embed_noise_fraction = 0.01;  // embed sigma = fraction * diameter of the 2d data
};

struct DatasetSpec {
    DatasetFamily family = DatasetFamily::TwoArcs;
    std::size_t n_per_cluster = 300;
    NoiseLevel noise_level = NoiseLevel::Low;
    std::optional<double> noise_sigma;  // overrides the noise level
    Embedding embedding = Embedding::Plane2d;
    std::optional<double> embed_noise_sigma;  // overrides fraction * diameter
    std::uint64_t seed = 0;
};

/// Radial noise sigma in effect for spec (relative to r for spirals).
double resolved_noise_sigma(const DatasetSpec& spec, const DataConstants& c);

/// Two interleaved half-circles; labels 0/1.
PointSet gen_two_arcs(const DatasetSpec& spec, const DataConstants& c = {});
/// Three Archimedean spirals 120 degrees apart, uniform in angle; labels 0/1/2.
PointSet gen_three_spirals(const DatasetSpec& spec, const DataConstants& c = {});
/// Uniform disk plus two rings each split into two halves; labels 0..4.
PointSet gen_three_rings(const DatasetSpec& spec, const DataConstants& c = {});
/// Four isotropic Gaussians at square corners, two narrow and two wide; labels 0..3.
PointSet gen_four_gaussians(const DatasetSpec& spec, const DataConstants& c = {});

/// Arc-length parametrized Archimedean roll r = b * t for t in [t0, t0 + span].
/// Planar x in [x_min, x_min + width] maps to arc length x - x_min from the inner edge.
struct SwissRoll {
    double b = 1.0;
    double t0 = 0.0;
    double x_min = 0.0;
    double width = 0.0;

    static SwissRoll fit(const PointSet& plane, const DataConstants& c);
    /// Arc length of r = t from 0 to t (the b = 1 spiral).
    static double unit_arc_length(double t);
    /// Winding angle reached after travelling x - x_min along the roll.
    double angle_at(double x) const;
};

/// Random orthogonal matrix with determinant +1 (QR of a Gaussian matrix).
Eigen::MatrixXd random_rotation(std::size_t dim, Rng& rng);

/// Maximum pairwise Euclidean distance.
double diameter(const PointSet& ps);

/// Places planar data in the requested embedding. `noise_sigma` drives the
/// noisy embeddings; swiss embeddings require 2d input.
PointSet embed(const PointSet& ps, Embedding embedding, double noise_sigma, Rng& rng,
               const DataConstants& c = {});

/// Generator for spec.family followed by spec.embedding. Generation draws from
/// stream 0 of spec.seed and the embedding from stream 1.
PointSet generate(const DatasetSpec& spec, const DataConstants& c = {});

// ---------------------------------------------------------------- MNIST

class IdxError : public std::runtime_error {
public:
    enum class Kind { Io, BadMagic, Truncated, CountMismatch };
    IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct MnistData {
    std::size_t rows = 0;
    std::size_t cols = 0;
    PointSet images;          // raw 0-255 pixel values, row-major per image, unlabeled
    std::vector<int> digits;  // label byte of each image
};

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Writers for the same formats, used for fixtures and exports.
void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);

struct DigitSubset {
    PointSet points;  // labels are positions in the requested digit list
    std::vector<std::size_t> source_index;
};

/// `repeats` disjoint samples with exactly `per_class` images of each requested
/// digit, cut from one seeded shuffle per digit.
std::vector<DigitSubset> sample_digit_subsets(const PointSet& images, std::span<const int> digit_of,
                                              std::span<const int> digits, std::size_t per_class,
                                              std::size_t repeats, Rng& rng);

}  // namespace pknng
