#include "pknng/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pknng {

namespace {

constexpr double kPi = std::numbers::pi;

std::string normalize_name(std::string_view name) {
    std::string out;
    for (char c : name) {
        if (c == '-' || c == '_' || c == ' ') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::size_t level_index(NoiseLevel l) { return static_cast<std::size_t>(l); }

void require_family(const DatasetSpec& spec, DatasetFamily f) {
    if (spec.family != f) throw std::invalid_argument("generator called with a spec of family " + to_string(spec.family));
    if (spec.n_per_cluster < 10) throw std::invalid_argument("n_per_cluster must be at least 10");
    if (spec.noise_sigma && *spec.noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IdxError(IdxError::Kind::Truncated, path + ": truncated header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

}  // namespace

// ---------------------------------------------------------------- names

std::string to_string(DatasetFamily f) {
    switch (f) {
        case DatasetFamily::TwoArcs: return "two-arcs";
        case DatasetFamily::ThreeSpirals: return "three-spirals";
        case DatasetFamily::ThreeRings: return "three-rings";
        case DatasetFamily::FourGaussians: return "four-gaussians";
    }
    return "?";
}

std::string to_string(NoiseLevel l) {
    switch (l) {
        case NoiseLevel::Low: return "low";
        case NoiseLevel::Medium: return "medium";
        case NoiseLevel::High: return "high";
    }
    return "?";
}

std::string to_string(Embedding e) {
    switch (e) {
        case Embedding::Plane2d: return "2d";
        case Embedding::Swiss3d: return "3d";
        case Embedding::Swiss3dNoise: return "3d-noise";
        case Embedding::Rot10dNoise: return "10d-noise";
    }
    return "?";
}

DatasetFamily parse_family(std::string_view name) {
    const std::string n = normalize_name(name);
    if (n == "twoarcs" || n == "arcs") return DatasetFamily::TwoArcs;
    if (n == "threespirals" || n == "spirals") return DatasetFamily::ThreeSpirals;
    if (n == "threerings" || n == "rings") return DatasetFamily::ThreeRings;
    if (n == "fourgaussians" || n == "gaussians") return DatasetFamily::FourGaussians;
    throw std::invalid_argument("unknown dataset family '" + std::string(name) + "'");
}

NoiseLevel parse_noise_level(std::string_view name) {
    const std::string n = normalize_name(name);
    if (n == "low") return NoiseLevel::Low;
    if (n == "medium") return NoiseLevel::Medium;
    if (n == "high") return NoiseLevel::High;
    throw std::invalid_argument("unknown noise level '" + std::string(name) + "'");
}

Embedding parse_embedding(std::string_view name) {
    const std::string n = normalize_name(name);
    if (n == "2d" || n == "plane2d") return Embedding::Plane2d;
    if (n == "3d" || n == "swiss3d") return Embedding::Swiss3d;
    if (n == "3dnoise" || n == "swiss3dnoise") return Embedding::Swiss3dNoise;
    if (n == "10dnoise" || n == "rot10dnoise") return Embedding::Rot10dNoise;
    throw std::invalid_argument("unknown embedding '" + std::string(name) + "'");
}

int class_count(DatasetFamily f) {
    switch (f) {
        case DatasetFamily::TwoArcs: return 2;
        case DatasetFamily::ThreeSpirals: return 3;
        case DatasetFamily::ThreeRings: return 5;
        case DatasetFamily::FourGaussians: return 4;
    }
    return 0;
}

double resolved_noise_sigma(const DatasetSpec& spec, const DataConstants& c) {
    if (spec.noise_sigma) return *spec.noise_sigma;
    const std::size_t l = level_index(spec.noise_level);
    switch (spec.family) {
        case DatasetFamily::TwoArcs: return c.arcs_noise[l];
        case DatasetFamily::ThreeSpirals: return c.spiral_noise[l];
        case DatasetFamily::ThreeRings: return c.ring_noise[l];
        case DatasetFamily::FourGaussians: return 0.0;
    }
    return 0.0;
}

// ---------------------------------------------------------------- generators

PointSet gen_two_arcs(const DatasetSpec& spec, const DataConstants& c) {
    require_family(spec, DatasetFamily::TwoArcs);
    Rng rng(spec.seed, 0);
    const double sigma = resolved_noise_sigma(spec, c);
    const double R = c.arcs_radius;
    const std::size_t m = spec.n_per_cluster;
    std::vector<double> xy;
    std::vector<int> labels;
    xy.reserve(4 * m);
    for (int arc = 0; arc < 2; ++arc) {
        for (std::size_t i = 0; i < m; ++i) {
            double theta = rng.uniform(0.0, kPi);
            double r = R + rng.normal(0.0, sigma);
            if (arc == 0) {
                xy.push_back(r * std::cos(theta));
                xy.push_back(r * std::sin(theta));
            } else {  // mirrored below, shifted so the tips interleave
                xy.push_back(R - r * std::cos(theta));
                xy.push_back(0.5 * R - r * std::sin(theta));
            }
            labels.push_back(arc);
        }
    }
    return PointSet(2, std::move(xy), std::move(labels), spec.seed);
}

PointSet gen_three_spirals(const DatasetSpec& spec, const DataConstants& c) {
    require_family(spec, DatasetFamily::ThreeSpirals);
    Rng rng(spec.seed, 0);
    const double sigma = resolved_noise_sigma(spec, c);
    const std::size_t m = spec.n_per_cluster;
    std::vector<double> xy;
    std::vector<int> labels;
    xy.reserve(6 * m);
    for (int arm = 0; arm < 3; ++arm) {
        const double phase = 2.0 * kPi * arm / 3.0;
        for (std::size_t i = 0; i < m; ++i) {
            double theta = rng.uniform(c.spiral_theta_min, c.spiral_theta_max);
            double r = c.spiral_a * theta;
            r += rng.normal(0.0, sigma * r);
            xy.push_back(r * std::cos(theta + phase));
            xy.push_back(r * std::sin(theta + phase));
            labels.push_back(arm);
        }
    }
    return PointSet(2, std::move(xy), std::move(labels), spec.seed);
}

PointSet gen_three_rings(const DatasetSpec& spec, const DataConstants& c) {
    require_family(spec, DatasetFamily::ThreeRings);
    Rng rng(spec.seed, 0);
    const double sigma = resolved_noise_sigma(spec, c);
    const std::size_t m = spec.n_per_cluster;
    const double half_gap = 0.5 * c.ring_gap;
    std::vector<double> xy;
    std::vector<int> labels;
    xy.reserve(10 * m);

    for (std::size_t i = 0; i < m; ++i) {
        double r = c.ring_r0 * std::sqrt(rng.uniform(0.0, 1.0));
        double a = rng.uniform(0.0, 2.0 * kPi);
        xy.push_back(r * std::cos(a));
        xy.push_back(r * std::sin(a));
        labels.push_back(0);
    }
    int label = 1;
    for (double radius : {c.ring_r1, c.ring_r2}) {
        for (int half = 0; half < 2; ++half) {
            const double lo = half * kPi + half_gap, hi = (half + 1) * kPi - half_gap;
            for (std::size_t i = 0; i < m; ++i) {
                double a = rng.uniform(lo, hi);
                double r = radius + rng.normal(0.0, sigma);
                xy.push_back(r * std::cos(a));
                xy.push_back(r * std::sin(a));
                labels.push_back(label);
            }
            ++label;
        }
    }
    return PointSet(2, std::move(xy), std::move(labels), spec.seed);
}

PointSet gen_four_gaussians(const DatasetSpec& spec, const DataConstants& c) {
    require_family(spec, DatasetFamily::FourGaussians);
    Rng rng(spec.seed, 0);
    const double L = c.gauss_separation;
    const double centers[4][2] = {{0.0, 0.0}, {L, 0.0}, {0.0, L}, {L, L}};
    // Narrow clouds on one diagonal, wide ones on the other.
    const double sigmas[4] = {c.gauss_sigma_small, c.gauss_sigma_small * c.gauss_sigma_ratio,
                              c.gauss_sigma_small * c.gauss_sigma_ratio, c.gauss_sigma_small};
    std::vector<double> xy;
    std::vector<int> labels;
    for (int g = 0; g < 4; ++g) {
        for (std::size_t i = 0; i < spec.n_per_cluster; ++i) {
            xy.push_back(rng.normal(centers[g][0], sigmas[g]));
            xy.push_back(rng.normal(centers[g][1], sigmas[g]));
            labels.push_back(g);
        }
    }
    return PointSet(2, std::move(xy), std::move(labels), spec.seed);
}

// ---------------------------------------------------------------- embeddings

double SwissRoll::unit_arc_length(double t) {
    return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t));
}

SwissRoll SwissRoll::fit(const PointSet& plane, const DataConstants& c) {
    if (plane.dim() != 2) throw std::invalid_argument("swiss-roll embedding needs 2d input");
    SwissRoll roll;
    roll.t0 = c.swiss_start;
    roll.x_min = plane.point(0)[0];
    double x_max = roll.x_min;
    for (std::size_t i = 0; i < plane.size(); ++i) {
        roll.x_min = std::min(roll.x_min, plane.point(i)[0]);
        x_max = std::max(x_max, plane.point(i)[0]);
    }
    roll.width = x_max - roll.x_min;
    const double total = unit_arc_length(roll.t0 + c.swiss_span) - unit_arc_length(roll.t0);
    roll.b = roll.width > 0.0 ? roll.width / total : 1.0;
    return roll;
}

double SwissRoll::angle_at(double x) const {
    const double target = unit_arc_length(t0) + (x - x_min) / b;
    // Newton on the monotone arc-length function; its derivative is sqrt(1 + t^2).
    double t = t0 + (x - x_min) / (b * std::sqrt(1.0 + t0 * t0));
    for (int it = 0; it < 100; ++it) {
        double step = (unit_arc_length(t) - target) / std::sqrt(1.0 + t * t);
        t -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, t)) break;
    }
    return t;
}

Eigen::MatrixXd random_rotation(std::size_t dim, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
}

double diameter(const PointSet& ps) {
    double best = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        for (std::size_t j = i + 1; j < ps.size(); ++j) best = std::max(best, euclidean_distance(ps.point(i), ps.point(j)));
    }
    return best;
}

PointSet embed(const PointSet& ps, Embedding embedding, double noise_sigma, Rng& rng, const DataConstants& c) {
    if (embedding == Embedding::Plane2d) return ps;
    if (noise_sigma < 0.0) throw std::invalid_argument("embed: noise sigma must be >= 0");
    const SwissRoll roll = SwissRoll::fit(ps, c);
    const std::size_t n = ps.size();
    const bool on_normal = embedding == Embedding::Swiss3dNoise;

    std::vector<double> xyz;
    xyz.reserve(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = roll.angle_at(ps.point(i)[0]);
        const double r = roll.b * t;
        double px = r * std::cos(t), py = ps.point(i)[1], pz = r * std::sin(t);
        if (on_normal) {
            // normal of the roll surface lies in the x-z plane, orthogonal to d/dt
            double nx = std::sin(t) + t * std::cos(t);
            double nz = -(std::cos(t) - t * std::sin(t));
            double len = std::hypot(nx, nz);
            double e = rng.normal(0.0, noise_sigma);
            px += e * nx / len;
            pz += e * nz / len;
        }
        xyz.insert(xyz.end(), {px, py, pz});
    }
    std::optional<std::vector<int>> labels;
    if (ps.has_labels()) labels = ps.labels();
    if (embedding != Embedding::Rot10dNoise) return PointSet(3, std::move(xyz), std::move(labels), ps.seed());

    constexpr std::size_t kDim = 10;
    const Eigen::MatrixXd rot = random_rotation(kDim, rng);
    std::vector<double> out;
    out.reserve(kDim * n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(kDim);
        v(0) = xyz[3 * i];
        v(1) = xyz[3 * i + 1];
        v(2) = xyz[3 * i + 2];
        Eigen::VectorXd w = rot * v;
        for (std::size_t t = 0; t < kDim; ++t) out.push_back(w(static_cast<Eigen::Index>(t)) + rng.normal(0.0, noise_sigma));
    }
    return PointSet(kDim, std::move(out), std::move(labels), ps.seed());
}

PointSet generate(const DatasetSpec& spec, const DataConstants& c) {
    PointSet plane;
    switch (spec.family) {
        case DatasetFamily::TwoArcs: plane = gen_two_arcs(spec, c); break;
        case DatasetFamily::ThreeSpirals: plane = gen_three_spirals(spec, c); break;
        case DatasetFamily::ThreeRings: plane = gen_three_rings(spec, c); break;
        case DatasetFamily::FourGaussians: plane = gen_four_gaussians(spec, c); break;
    }
    if (spec.embedding == Embedding::Plane2d) return plane;
    const double sigma = spec.embed_noise_sigma ? *spec.embed_noise_sigma : c.embed_noise_fraction * diameter(plane);
    Rng rng(spec.seed, 1);
    return embed(plane, spec.embedding, sigma, rng, c);
}

// ---------------------------------------------------------------- MNIST

MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IdxError(IdxError::Kind::Io, "cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IdxError(IdxError::Kind::Io, "cannot open " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != kIdxImageMagic) {
        throw IdxError(IdxError::Kind::BadMagic, images_path + ": bad image magic " + std::to_string(img_magic));
    }
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);

    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != kIdxLabelMagic) {
        throw IdxError(IdxError::Kind::BadMagic, labels_path + ": bad label magic " + std::to_string(lab_magic));
    }
    const std::uint32_t label_count = read_be32(lab, labels_path);
    if (label_count != count) {
        throw IdxError(IdxError::Kind::CountMismatch, "image count " + std::to_string(count) +
                                                          " differs from label count " + std::to_string(label_count));
    }
    if (count == 0 || rows == 0 || cols == 0) throw IdxError(IdxError::Kind::Truncated, images_path + ": empty dataset");

    const std::size_t pixels = std::size_t{rows} * cols;
    std::vector<unsigned char> raw(pixels * count);
    if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw IdxError(IdxError::Kind::Truncated, images_path + ": truncated pixel data");
    }
    std::vector<unsigned char> raw_labels(count);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(count))) {
        throw IdxError(IdxError::Kind::Truncated, labels_path + ": truncated label data");
    }

    MnistData out;
    out.rows = rows;
    out.cols = cols;
    out.images = PointSet(pixels, std::vector<double>(raw.begin(), raw.end()));
    out.digits.assign(raw_labels.begin(), raw_labels.end());
    return out;
}

void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols, std::span<const std::uint8_t> pixels) {
    if (rows == 0 || cols == 0 || pixels.size() % (rows * cols) != 0) {
        throw std::invalid_argument("write_idx_images: pixel count is not a multiple of rows * cols");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IdxError(IdxError::Kind::Io, "cannot open " + path + " for writing");
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(pixels.size() / (rows * cols)));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IdxError(IdxError::Kind::Io, "cannot open " + path + " for writing");
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

std::vector<DigitSubset> sample_digit_subsets(const PointSet& images, std::span<const int> digit_of,
                                              std::span<const int> digits, std::size_t per_class,
                                              std::size_t repeats, Rng& rng) {
    if (digit_of.size() != images.size()) throw std::invalid_argument("sample_digit_subsets: label count mismatch");
    if (digits.empty() || per_class == 0 || repeats == 0) {
        throw std::invalid_argument("sample_digit_subsets: need at least one digit, sample and repeat");
    }
    std::vector<std::vector<std::size_t>> pools;
    for (int digit : digits) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < digit_of.size(); ++i) {
            if (digit_of[i] == digit) pool.push_back(i);
        }
        if (pool.size() < per_class * repeats) {
            throw std::invalid_argument("sample_digit_subsets: digit " + std::to_string(digit) + " has " +
                                        std::to_string(pool.size()) + " images, need " +
                                        std::to_string(per_class * repeats));
        }
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        pools.push_back(std::move(pool));
    }

    std::vector<DigitSubset> out;
    for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<std::size_t> idx;
        std::vector<double> coords;
        std::vector<int> labels;
        for (std::size_t d = 0; d < pools.size(); ++d) {
            for (std::size_t s = 0; s < per_class; ++s) {
                std::size_t src = pools[d][r * per_class + s];
                idx.push_back(src);
                auto p = images.point(src);
                coords.insert(coords.end(), p.begin(), p.end());
                labels.push_back(static_cast<int>(d));
            }
        }
        out.push_back(DigitSubset{PointSet(images.dim(), std::move(coords), std::move(labels)), std::move(idx)});
    }
    return out;
}

}  // namespace pknng
