#include "pknng/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pknng {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<int> densify(const std::vector<int>& raw, int& count) {
    std::vector<int> uniq(raw);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), raw[i]) - uniq.begin());
    }
    count = static_cast<int>(uniq.size());
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = field.find_first_not_of(' ');
        fields.push_back(start == std::string::npos ? std::string() : field.substr(start));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

// ---------------------------------------------------------------- PointSet

PointSet::PointSet(std::size_t dim, std::vector<double> coords,
                   std::optional<std::vector<int>> labels, std::optional<std::uint64_t> seed)
    : dim_(dim), coords_(std::move(coords)), seed_(seed) {
    if (dim_ == 0) throw std::invalid_argument("PointSet: dimension must be at least 1");
    if (coords_.empty() || coords_.size() % dim_ != 0) {
        throw std::invalid_argument("PointSet: coordinate count must be a positive multiple of the dimension");
    }
    for (double c : coords_) {
        if (!std::isfinite(c)) throw std::invalid_argument("PointSet: non-finite coordinate");
    }
    if (labels) {
        if (labels->size() != size()) throw std::invalid_argument("PointSet: label count differs from point count");
        int max_label = -1;
        for (int l : *labels) {
            if (l < 0) throw std::invalid_argument("PointSet: negative label");
            max_label = std::max(max_label, l);
        }
        std::vector<char> seen(static_cast<std::size_t>(max_label) + 1, 0);
        for (int l : *labels) seen[static_cast<std::size_t>(l)] = 1;
        if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
            throw std::invalid_argument("PointSet: labels must be dense in [0, C)");
        }
        class_count_ = max_label + 1;
        labels_ = std::move(labels);
    }
}

const std::vector<int>& PointSet::labels() const {
    if (!labels_) throw std::logic_error("PointSet has no labels");
    return *labels_;
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
    std::vector<double> coords;
    coords.reserve(indices.size() * dim_);
    for (std::size_t i : indices) {
        if (i >= size()) throw std::out_of_range("PointSet::subset: index out of range");
        auto p = point(i);
        coords.insert(coords.end(), p.begin(), p.end());
    }
    std::optional<std::vector<int>> labels;
    if (labels_) {
        std::vector<int> raw;
        raw.reserve(indices.size());
        for (std::size_t i : indices) raw.push_back((*labels_)[i]);
        int count = 0;
        labels = densify(raw, count);
    }
    return PointSet(dim_, std::move(coords), std::move(labels), seed_);
}

// ---------------------------------------------------------------- DissimilarityMatrix

DissimilarityMatrix::DissimilarityMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
    if (values_.size() != n_ * n_) throw std::invalid_argument("DissimilarityMatrix: expected n*n values");
    for (std::size_t i = 0; i < n_; ++i) {
        if (values_[i * n_ + i] != 0.0) throw std::invalid_argument("DissimilarityMatrix: nonzero diagonal");
        for (std::size_t j = i + 1; j < n_; ++j) {
            double a = values_[i * n_ + j];
            if (!std::isfinite(a) || a < 0.0) {
                throw std::invalid_argument("DissimilarityMatrix: entries must be finite and nonnegative");
            }
            if (a != values_[j * n_ + i]) throw std::invalid_argument("DissimilarityMatrix: not symmetric");
        }
    }
}

double DissimilarityMatrix::max_abs_diff(const DissimilarityMatrix& other) const {
    if (other.n_ != n_) throw std::invalid_argument("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::abs(values_[i] - other.values_[i]));
    return m;
}

// ---------------------------------------------------------------- Rng

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::uint64_t a = splitmix64(seed);
    std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
}

double Rng::uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double sd) {
    if (sd == 0.0) return mean;
    return std::normal_distribution<double>(mean, sd)(engine_);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(base) ^ splitmix64(h) ^ splitmix64(index * 0xd1b54a32d192ed03ULL + 1));
}

// ---------------------------------------------------------------- distances

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        double diff = a[t] - b[t];
        s += diff * diff;
    }
    return std::sqrt(s);
}

DissimilarityMatrix euclidean_matrix(const PointSet& ps) {
    const std::size_t n = ps.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = euclidean_distance(ps.point(i), ps.point(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    return DissimilarityMatrix(n, std::move(d));
}

double mean_pairwise_distance(const PointSet& ps) {
    const std::size_t n = ps.size();
    if (n < 2) throw std::invalid_argument("mean_pairwise_distance: need at least two points");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) sum += euclidean_distance(ps.point(i), ps.point(j));
    }
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

// ---------------------------------------------------------------- DisjointSet

DisjointSet::DisjointSet(std::size_t n) : parent_(n), size_(n, 1), sets_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSet::find(std::size_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

bool DisjointSet::unite(std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    if (size_[x] < size_[y]) std::swap(x, y);
    parent_[y] = x;
    size_[x] += size_[y];
    --sets_;
    return true;
}

// ---------------------------------------------------------------- CSV

void write_pointset_csv(std::ostream& out, const PointSet& ps) {
    for (std::size_t t = 0; t < ps.dim(); ++t) out << (t ? "," : "") << 'x' << t;
    if (ps.has_labels()) out << ",label";
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto p = ps.point(i);
        for (std::size_t t = 0; t < p.size(); ++t) {
            auto res = std::to_chars(buf, buf + sizeof buf, p[t]);
            if (t) out << ',';
            out.write(buf, res.ptr - buf);
        }
        if (ps.has_labels()) out << ',' << ps.labels()[i];
        out << '\n';
    }
}

void write_pointset_csv(const std::string& path, const PointSet& ps) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_pointset_csv(out, ps);
    if (!out) throw std::runtime_error("write failed: " + path);
}

PointSet read_pointset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("PointSet CSV: missing header");
    auto header = split_csv_line(line);
    bool labeled = !header.empty() && header.back() == "label";
    std::size_t dim = header.size() - (labeled ? 1 : 0);
    if (dim == 0) throw std::runtime_error("PointSet CSV: no coordinate columns");
    for (std::size_t t = 0; t < dim; ++t) {
        if (header[t] != "x" + std::to_string(t)) {
            throw std::runtime_error("PointSet CSV: unexpected header column '" + header[t] + "'");
        }
    }

    std::vector<double> coords;
    std::vector<std::string> symbols;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw std::runtime_error("PointSet CSV: wrong field count on line " + std::to_string(row));
        }
        for (std::size_t t = 0; t < dim; ++t) {
            double v = 0.0;
            const std::string& f = fields[t];
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
                throw std::runtime_error("PointSet CSV: bad number '" + f + "' on line " + std::to_string(row));
            }
            coords.push_back(v);
        }
        if (labeled) symbols.push_back(fields.back());
    }
    if (coords.empty()) throw std::runtime_error("PointSet CSV: no data rows");

    std::optional<std::vector<int>> labels;
    if (labeled) {
        bool all_int = std::all_of(symbols.begin(), symbols.end(), [](const std::string& s) {
            long long v = 0;
            auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
        });
        std::vector<int> ids(symbols.size());
        if (all_int) {
            std::map<long long, int> rank;
            for (const auto& s : symbols) rank.emplace(std::stoll(s), 0);
            int next = 0;
            for (auto& [k, v] : rank) v = next++;
            for (std::size_t i = 0; i < symbols.size(); ++i) ids[i] = rank.at(std::stoll(symbols[i]));
        } else {
            std::map<std::string, int> rank;
            for (const auto& s : symbols) rank.emplace(s, 0);
            int next = 0;
            for (auto& [k, v] : rank) v = next++;
            for (std::size_t i = 0; i < symbols.size(); ++i) ids[i] = rank.at(symbols[i]);
        }
        labels = std::move(ids);
    }
    return PointSet(dim, std::move(coords), std::move(labels));
}

PointSet read_pointset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_pointset_csv(in);
}

}  // namespace pknng
