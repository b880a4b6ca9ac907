#include "pknng/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "pknng/geodesic.hpp"
#include "pknng/knn_graph.hpp"

namespace pknng {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
    return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

std::string sanitize_field(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string algorithm_name(const MethodSpec& m) {
    switch (m.algorithm) {
        case Algorithm::Pam: return "pam";
        case Algorithm::Hierarchical: return "hc-" + to_string(m.linkage);
        case Algorithm::Mst: return "mst";
        case Algorithm::Spectral: return "spectral-s" + fmt(m.sigma_factor);
    }
    return "?";
}

std::string metric_name(const MethodSpec& m) {
    switch (m.metric) {
        case MetricKind::Euclidean: return "euclidean";
        case MetricKind::MinKConnected: return "min-k";
        case MetricKind::Pknng:
            return "pknng-" + to_string(m.connector.scheme) + "-" + to_string(m.connector.penalty) + "-k" +
                   std::to_string(m.k_neighbors);
    }
    return "?";
}

void parse_metric_part(std::string_view text, MethodSpec& m) {
    if (text == "euclidean") {
        m.metric = MetricKind::Euclidean;
        return;
    }
    if (text == "min-k" || text == "mink") {
        m.metric = MetricKind::MinKConnected;
        return;
    }
    if (text == "pknng") {
        m.metric = MetricKind::Pknng;
        return;
    }
    if (!starts_with(text, "pknng-")) throw std::invalid_argument("unknown metric '" + std::string(text) + "'");
    m.metric = MetricKind::Pknng;
    std::string rest(text.substr(6));
    auto dash = rest.rfind('-');
    if (dash != std::string::npos && rest.size() > dash + 2 && rest[dash + 1] == 'k') {
        m.k_neighbors = std::stoul(rest.substr(dash + 2));
        rest = rest.substr(0, dash);
    }
    auto first = rest.find('-');
    m.connector.scheme = parse_scheme(rest.substr(0, first));
    if (first != std::string::npos) m.connector.penalty = parse_penalty(rest.substr(first + 1));
}

bool parse_algorithm_part(std::string_view text, MethodSpec& m) {
    if (text == "pam") {
        m.algorithm = Algorithm::Pam;
    } else if (text == "mst") {
        m.algorithm = Algorithm::Mst;
    } else if (text == "hc") {
        m.algorithm = Algorithm::Hierarchical;
    } else if (starts_with(text, "hc-")) {
        m.algorithm = Algorithm::Hierarchical;
        m.linkage = parse_linkage(text.substr(3));
    } else if (text == "spectral") {
        m.algorithm = Algorithm::Spectral;
    } else if (starts_with(text, "spectral-s")) {
        m.algorithm = Algorithm::Spectral;
        m.sigma_factor = parse_double(std::string(text.substr(10)));
    } else {
        return false;
    }
    return true;
}

std::string cell_file_name(const std::string& dataset, const std::string& method) {
    std::string id = dataset + "__" + method;
    std::string safe;
    for (char c : id) safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
    char hex[17];
    auto res = std::to_chars(hex, hex + 16, derive_seed(0, id, 0), 16);
    return safe + "-" + std::string(hex, res.ptr) + ".csv";
}

}  // namespace

// ---------------------------------------------------------------- methods

std::string MethodSpec::name() const { return metric_name(*this) + "+" + algorithm_name(*this); }

MethodSpec parse_method(std::string_view text) {
    MethodSpec m;
    auto plus = text.find('+');
    if (plus != std::string_view::npos) {
        parse_metric_part(text.substr(0, plus), m);
        if (!parse_algorithm_part(text.substr(plus + 1), m)) {
            throw std::invalid_argument("unknown algorithm '" + std::string(text.substr(plus + 1)) + "'");
        }
        return m;
    }
    if (parse_algorithm_part(text, m)) {  // bare algorithm: Euclidean input
        m.metric = MetricKind::Euclidean;
        return m;
    }
    for (std::string_view algo : {"pam", "hc", "mst", "spectral"}) {
        std::string suffix = "-" + std::string(algo);
        if (ends_with(text, suffix)) {
            parse_metric_part(text.substr(0, text.size() - suffix.size()), m);
            parse_algorithm_part(algo, m);
            return m;
        }
    }
    throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

DissimilarityMatrix compute_metric(const PointSet& ps, const MethodSpec& method, unsigned threads) {
    switch (method.metric) {
        case MetricKind::Euclidean: return euclidean_matrix(ps);
        case MetricKind::Pknng: return pknng_metric(ps, method.k_neighbors, method.connector, threads);
        case MetricKind::MinKConnected: return apsp(min_k_connected_graph(ps, threads).graph, threads);
    }
    throw std::logic_error("compute_metric: unhandled metric");
}

ClusterAssignment run_algorithm(const DissimilarityMatrix& d, std::size_t k, const MethodSpec& method,
                                std::uint64_t seed) {
    switch (method.algorithm) {
        case Algorithm::Pam: return pam(d, k);
        case Algorithm::Hierarchical: return hierarchical(d, k, method.linkage);
        case Algorithm::Mst: return mst_cluster(d, k);
        case Algorithm::Spectral: {
            Rng rng(seed, 2);
            return spectral(d, k, method.sigma_factor, rng);
        }
    }
    throw std::logic_error("run_algorithm: unhandled algorithm");
}

// ---------------------------------------------------------------- cells

std::string dataset_key(const DatasetSpec& spec) {
    std::string key = to_string(spec.family) + "_n" + std::to_string(spec.n_per_cluster) + "_";
    key += spec.noise_sigma ? "s" + fmt(*spec.noise_sigma) : to_string(spec.noise_level);
    key += "_" + to_string(spec.embedding);
    if (spec.embed_noise_sigma) key += "_e" + fmt(*spec.embed_noise_sigma);
    return key;
}

std::uint64_t realization_seed(std::uint64_t base_seed, const DatasetSpec& dataset, std::size_t index) {
    return derive_seed(base_seed, dataset_key(dataset), index);
}

void aggregate(CellResult& cell) {
    double sum = 0.0;
    std::size_t ok = 0;
    cell.failures = 0;
    for (const auto& r : cell.runs) {
        if (r.accuracy) {
            sum += *r.accuracy;
            ++ok;
        } else {
            ++cell.failures;
        }
    }
    cell.mean = ok ? sum / static_cast<double>(ok) : 0.0;
    double ss = 0.0;
    for (const auto& r : cell.runs) {
        if (r.accuracy) ss += (*r.accuracy - cell.mean) * (*r.accuracy - cell.mean);
    }
    cell.sd = ok > 1 ? std::sqrt(ss / static_cast<double>(ok - 1)) : 0.0;
}

CellResult run_cell(const DatasetSpec& dataset, const MethodSpec& method, std::size_t realizations,
                    std::uint64_t base_seed, const DataConstants& constants, std::optional<int> k_clusters) {
    if (realizations < 1) throw std::invalid_argument("run_cell: realizations must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    CellResult cell;
    cell.dataset = dataset_key(dataset);
    cell.method = method.name();
    const auto k = static_cast<std::size_t>(k_clusters.value_or(class_count(dataset.family)));
    for (std::size_t r = 0; r < realizations; ++r) {
        RealizationResult run;
        run.index = r;
        run.seed = realization_seed(base_seed, dataset, r);
        try {
            DatasetSpec spec = dataset;
            spec.seed = run.seed;
            PointSet ps = generate(spec, constants);
            DissimilarityMatrix d = compute_metric(ps, method);
            ClusterAssignment a = run_algorithm(d, k, method, run.seed);
            run.accuracy = accuracy(a.labels, ps.labels());
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        cell.runs.push_back(std::move(run));
    }
    aggregate(cell);
    cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

// ---------------------------------------------------------------- persistence

void write_realizations_csv(std::ostream& out, const std::vector<CellResult>& cells) {
    out << "dataset,method,realization,seed,accuracy,error\n";
    for (const auto& c : cells) {
        for (const auto& r : c.runs) {
            out << c.dataset << ',' << c.method << ',' << r.index << ',' << r.seed << ','
                << (r.accuracy ? fmt(*r.accuracy) : std::string()) << ',' << sanitize_field(r.error) << '\n';
        }
    }
}

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& cells) {
    out << "dataset,method,realizations,failures,mean,sd\n";
    for (const auto& c : cells) {
        out << c.dataset << ',' << c.method << ',' << c.runs.size() << ',' << c.failures << ',' << fmt(c.mean) << ','
            << fmt(c.sd) << '\n';
    }
}

std::vector<CellResult> read_realizations_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("realizations CSV: missing header");
    std::vector<CellResult> cells;
    std::map<std::pair<std::string, std::string>, std::size_t> where;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 6) throw std::runtime_error("realizations CSV: malformed row '" + line + "'");
        auto key = std::make_pair(f[0], f[1]);
        auto it = where.find(key);
        if (it == where.end()) {
            it = where.emplace(key, cells.size()).first;
            cells.push_back(CellResult{f[0], f[1], {}, 0.0, 0.0, 0, 0.0});
        }
        RealizationResult r;
        r.index = std::stoul(f[2]);
        r.seed = std::stoull(f[3]);
        if (!f[4].empty()) r.accuracy = parse_double(f[4]);
        r.error = f[5];
        cells[it->second].runs.push_back(std::move(r));
    }
    for (auto& c : cells) aggregate(c);
    return cells;
}

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const DataConstants& c) {
    return {
        {"version", c.version},
        {"arcs_radius", c.arcs_radius},
        {"arcs_noise", c.arcs_noise},
        {"spiral_a", c.spiral_a},
        {"spiral_theta_min", c.spiral_theta_min},
        {"spiral_theta_max", c.spiral_theta_max},
        {"spiral_noise", c.spiral_noise},
        {"ring_r0", c.ring_r0},
        {"ring_r1", c.ring_r1},
        {"ring_r2", c.ring_r2},
        {"ring_noise", c.ring_noise},
        {"ring_gap", c.ring_gap},
        {"gauss_separation", c.gauss_separation},
        {"gauss_sigma_small", c.gauss_sigma_small},
        {"gauss_sigma_ratio", c.gauss_sigma_ratio},
        {"swiss_span", c.swiss_span},
        {"swiss_start", c.swiss_start},
        {"embed_noise_fraction", c.embed_noise_fraction},
    };
}

DataConstants constants_from_json(const nlohmann::json& j) {
    DataConstants c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("version", c.version);
    get("arcs_radius", c.arcs_radius);
    get("arcs_noise", c.arcs_noise);
    get("spiral_a", c.spiral_a);
    get("spiral_theta_min", c.spiral_theta_min);
    get("spiral_theta_max", c.spiral_theta_max);
    get("spiral_noise", c.spiral_noise);
    get("ring_r0", c.ring_r0);
    get("ring_r1", c.ring_r1);
    get("ring_r2", c.ring_r2);
    get("ring_noise", c.ring_noise);
    get("ring_gap", c.ring_gap);
    get("gauss_separation", c.gauss_separation);
    get("gauss_sigma_small", c.gauss_sigma_small);
    get("gauss_sigma_ratio", c.gauss_sigma_ratio);
    get("swiss_span", c.swiss_span);
    get("swiss_start", c.swiss_start);
    get("embed_noise_fraction", c.embed_noise_fraction);
    return c;
}

nlohmann::json to_json(const MethodSpec& m) {
    nlohmann::json j = {{"name", m.name()}};
    switch (m.metric) {
        case MetricKind::Euclidean: j["metric"] = "euclidean"; break;
        case MetricKind::MinKConnected: j["metric"] = "min-k"; break;
        case MetricKind::Pknng:
            j["metric"] = "pknng";
            j["scheme"] = to_string(m.connector.scheme);
            j["penalty"] = to_string(m.connector.penalty);
            j["mu_source"] = "post-prune-mean";
            j["k"] = m.k_neighbors;
            break;
    }
    switch (m.algorithm) {
        case Algorithm::Pam: j["algorithm"] = "pam"; break;
        case Algorithm::Hierarchical:
            j["algorithm"] = "hc";
            j["linkage"] = to_string(m.linkage);
            break;
        case Algorithm::Mst: j["algorithm"] = "mst"; break;
        case Algorithm::Spectral:
            j["algorithm"] = "spectral";
            j["sigma_factor"] = m.sigma_factor;
            break;
    }
    return j;
}

MethodSpec method_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_method(j.get<std::string>());
    MethodSpec m;
    const std::string metric = j.value("metric", "pknng");
    parse_metric_part(metric, m);
    if (j.contains("scheme")) m.connector.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (j.contains("penalty")) m.connector.penalty = parse_penalty(j.at("penalty").get<std::string>());
    if (j.contains("mu_source") && j.at("mu_source").get<std::string>() != "post-prune-mean") {
        throw std::invalid_argument("unsupported mu_source '" + j.at("mu_source").get<std::string>() + "'");
    }
    if (j.contains("k")) m.k_neighbors = j.at("k").get<std::size_t>();
    if (!parse_algorithm_part(j.value("algorithm", "pam"), m)) {
        throw std::invalid_argument("unknown algorithm '" + j.value("algorithm", "") + "'");
    }
    if (j.contains("linkage")) m.linkage = parse_linkage(j.at("linkage").get<std::string>());
    if (j.contains("sigma_factor")) m.sigma_factor = j.at("sigma_factor").get<double>();
    return m;
}

namespace {

nlohmann::json dataset_to_json(const DatasetSpec& d) {
    nlohmann::json j = {{"family", to_string(d.family)},
                        {"n_per_cluster", d.n_per_cluster},
                        {"noise_level", to_string(d.noise_level)},
                        {"embedding", to_string(d.embedding)}};
    if (d.noise_sigma) j["noise_sigma"] = *d.noise_sigma;
    if (d.embed_noise_sigma) j["embed_noise_sigma"] = *d.embed_noise_sigma;
    return j;
}

DatasetSpec dataset_from_json(const nlohmann::json& j) {
    DatasetSpec d;
    d.family = parse_family(j.at("family").get<std::string>());
    d.n_per_cluster = j.value("n_per_cluster", d.n_per_cluster);
    if (j.contains("noise_level")) d.noise_level = parse_noise_level(j.at("noise_level").get<std::string>());
    if (j.contains("noise_sigma")) d.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("embedding")) d.embedding = parse_embedding(j.at("embedding").get<std::string>());
    if (j.contains("embed_noise_sigma")) d.embed_noise_sigma = j.at("embed_noise_sigma").get<double>();
    return d;
}

}  // namespace

nlohmann::json to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["realizations"] = spec.realizations;
    j["base_seed"] = spec.base_seed;
    if (spec.k_clusters) j["k_clusters"] = *spec.k_clusters;
    j["constants"] = to_json(spec.constants);
    j["datasets"] = nlohmann::json::array();
    for (const auto& d : spec.datasets) j["datasets"].push_back(dataset_to_json(d));
    j["methods"] = nlohmann::json::array();
    for (const auto& m : spec.methods) j["methods"].push_back(to_json(m));
    return j;
}

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    spec.realizations = j.value("realizations", spec.realizations);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    if (j.contains("k_clusters")) spec.k_clusters = j.at("k_clusters").get<int>();
    if (j.contains("constants")) spec.constants = constants_from_json(j.at("constants"));
    if (j.contains("datasets")) {
        for (const auto& d : j.at("datasets")) spec.datasets.push_back(dataset_from_json(d));
    }
    if (j.contains("grid")) {  // cartesian product shorthand
        const auto& g = j.at("grid");
        const auto n = g.value("n_per_cluster", DatasetSpec{}.n_per_cluster);
        for (const auto& fam : g.at("families")) {
            for (const auto& noise : g.value("noise_levels", nlohmann::json::array({"low"}))) {
                for (const auto& emb : g.value("embeddings", nlohmann::json::array({"2d"}))) {
                    DatasetSpec d;
                    d.family = parse_family(fam.get<std::string>());
                    d.n_per_cluster = n;
                    d.noise_level = parse_noise_level(noise.get<std::string>());
                    d.embedding = parse_embedding(emb.get<std::string>());
                    spec.datasets.push_back(d);
                }
            }
        }
    }
    for (const auto& m : j.at("methods")) spec.methods.push_back(method_from_json(m));
    if (spec.methods.empty()) throw std::invalid_argument("methods must not be empty");
    if (spec.datasets.empty()) throw std::invalid_argument("no datasets: give \"datasets\" or \"grid\"");
    if (spec.realizations < 1) throw std::invalid_argument("realizations must be >= 1");
    return spec;
}

// ---------------------------------------------------------------- grid

ExperimentResult run_grid(const ExperimentSpec& spec, const GridOptions& options) {
    ExperimentResult result;
    const std::size_t nm = spec.methods.size();
    const std::size_t cells = spec.datasets.size() * nm;
    result.cells.resize(cells);
    if (cells == 0) return result;

    namespace fs = std::filesystem;
    std::optional<fs::path> cell_dir;
    if (options.out_dir) {
        fs::create_directories(*options.out_dir / "cells");
        cell_dir = *options.out_dir / "cells";
        const fs::path cfg = *options.out_dir / "config.json";
        const std::string text = to_json(spec).dump(2) + "\n";
        if (fs::exists(cfg)) {
            std::ifstream in(cfg);
            std::stringstream existing;
            existing << in.rdbuf();
            if (existing.str() != text) {
                throw std::runtime_error(options.out_dir->string() + " holds results of a different config");
            }
        } else {
            std::ofstream out(cfg);
            out << text;
            if (!out) throw std::runtime_error("cannot write " + cfg.string());
        }
    }

    detail::parallel_for(cells, options.jobs, [&](std::size_t c) {
        const DatasetSpec& dataset = spec.datasets[c / nm];
        const MethodSpec& method = spec.methods[c % nm];
        if (cell_dir) {
            fs::path file = *cell_dir / cell_file_name(dataset_key(dataset), method.name());
            if (fs::exists(file)) {
                std::ifstream in(file);
                auto loaded = read_realizations_csv(in);
                if (loaded.size() == 1 && loaded[0].runs.size() == spec.realizations) {
                    result.cells[c] = std::move(loaded[0]);
                    return;
                }
            }
            result.cells[c] = run_cell(dataset, method, spec.realizations, spec.base_seed, spec.constants, spec.k_clusters);
            fs::path tmp = file;
            tmp += ".tmp";
            {
                std::ofstream out(tmp);
                write_realizations_csv(out, {result.cells[c]});
                if (!out) throw std::runtime_error("cannot write " + tmp.string());
            }
            fs::rename(tmp, file);
        } else {
            result.cells[c] = run_cell(dataset, method, spec.realizations, spec.base_seed, spec.constants, spec.k_clusters);
        }
    });

    if (options.out_dir) {
        std::ofstream runs(*options.out_dir / "realizations.csv");
        write_realizations_csv(runs, result.cells);
        std::ofstream summary(*options.out_dir / "summary.csv");
        write_summary_csv(summary, result.cells);
        if (!runs || !summary) throw std::runtime_error("cannot write result files in " + options.out_dir->string());
    }
    return result;
}

// ---------------------------------------------------------------- MNIST

std::vector<MnistRow> run_mnist(const MnistData& data, const MnistSpec& spec, unsigned jobs) {
    Rng rng(spec.seed, 0);
    const auto subsets =
        sample_digit_subsets(data.images, data.digits, spec.digits, spec.per_class, spec.repeats, rng);
    const std::size_t nm = spec.methods.size();
    const std::size_t k = spec.digits.size();

    // acc[r * nm + m]; methods sharing a metric reuse its matrix within a subset.
    std::vector<std::optional<double>> acc(subsets.size() * nm);
    detail::parallel_for(subsets.size(), jobs, [&](std::size_t r) {
        const PointSet& ps = subsets[r].points;
        std::map<std::string, DissimilarityMatrix> cache;
        for (std::size_t m = 0; m < nm; ++m) {
            const MethodSpec& method = spec.methods[m];
            try {
                const std::string key = metric_name(method);
                auto it = cache.find(key);
                if (it == cache.end()) it = cache.emplace(key, compute_metric(ps, method)).first;
                ClusterAssignment a = run_algorithm(it->second, k, method, derive_seed(spec.seed, method.name(), r));
                acc[r * nm + m] = accuracy(a.labels, ps.labels());
            } catch (const std::exception&) {
                acc[r * nm + m] = std::nullopt;
            }
        }
    });

    std::vector<MnistRow> rows;
    for (std::size_t m = 0; m < nm; ++m) {
        CellResult tmp;
        MnistRow row;
        row.method = spec.methods[m].name();
        for (std::size_t r = 0; r < subsets.size(); ++r) {
            row.accuracies.push_back(acc[r * nm + m]);
            RealizationResult rr;
            rr.accuracy = acc[r * nm + m];
            tmp.runs.push_back(rr);
        }
        aggregate(tmp);
        row.mean = tmp.mean;
        row.sd = tmp.sd;
        row.failures = tmp.failures;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_mnist_csv(std::ostream& out, const MnistSpec& spec, const std::vector<MnistRow>& rows) {
    std::string digits;
    for (std::size_t i = 0; i < spec.digits.size(); ++i) digits += (i ? "-" : "") + std::to_string(spec.digits[i]);
    out << "method,digits,per_class,repeats,failures,mean,sd,accuracies\n";
    for (const auto& r : rows) {
        out << r.method << ',' << digits << ',' << spec.per_class << ',' << spec.repeats << ',' << r.failures << ','
            << fmt(r.mean) << ',' << fmt(r.sd) << ',';
        for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
            out << (i ? ";" : "") << (r.accuracies[i] ? fmt(*r.accuracies[i]) : std::string("nan"));
        }
        out << '\n';
    }
}

nlohmann::json to_json(const MnistSpec& spec) {
    nlohmann::json j;
    j["digits"] = spec.digits;
    j["per_class"] = spec.per_class;
    j["repeats"] = spec.repeats;
    j["seed"] = spec.seed;
    j["methods"] = nlohmann::json::array();
    for (const auto& m : spec.methods) j["methods"].push_back(to_json(m));
    return j;
}

}  // namespace pknng
