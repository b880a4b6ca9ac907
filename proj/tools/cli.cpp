#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "pknng/eval.hpp"
#include "pknng/geodesic.hpp"
#include "pknng/knn_graph.hpp"

namespace pknng::cli {

namespace {

// Thrown while resolving flags into specs; reported with the usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class F>
auto usage_guard(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void print_config(std::ostream& out, const nlohmann::json& cfg) { out << "config: " << cfg.dump() << '\n'; }

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    return f;
}

// ---------------------------------------------------------------- gen

struct GenFlags {
    std::string family = "two-arcs";
    std::string noise = "low";
    std::optional<double> noise_sigma;
    std::string embed = "2d";
    std::optional<double> embed_sigma;
    std::size_t n_per_cluster = DatasetSpec{}.n_per_cluster;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
    DatasetSpec spec = usage_guard([&] {
        DatasetSpec s;
        s.family = parse_family(f.family);
        s.noise_level = parse_noise_level(f.noise);
        s.noise_sigma = f.noise_sigma;
        s.embedding = parse_embedding(f.embed);
        s.embed_noise_sigma = f.embed_sigma;
        s.n_per_cluster = f.n_per_cluster;
        s.seed = f.seed;
        return s;
    });
    if (spec.n_per_cluster < 1) throw UsageError("--n must be positive");
    DataConstants constants;
    nlohmann::json cfg = {{"command", "gen"},
                          {"family", to_string(spec.family)},
                          {"noise", to_string(spec.noise_level)},
                          {"noise_sigma", resolved_noise_sigma(spec, constants)},
                          {"embed", to_string(spec.embedding)},
                          {"n_per_cluster", spec.n_per_cluster},
                          {"seed", spec.seed},
                          {"constants", to_json(constants)},
                          {"out", f.out}};
    if (spec.embed_noise_sigma) cfg["embed_sigma"] = *spec.embed_noise_sigma;
    print_config(out, cfg);
    PointSet ps = generate(spec, constants);
    auto file = open_out(f.out);
    write_pointset_csv(file, ps);
    if (!file) throw std::runtime_error("write failed: " + f.out);
    out << "n=" << ps.size() << " D=" << ps.dim() << " C=" << ps.class_count() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- metric

struct MetricFlags {
    std::string in;
    std::string out;
    std::string metric = "pknng";
    std::size_t k = 5;
    std::string scheme = "minspan";
    std::string penalty = "exponential";
    std::string csv;
    std::string dump_graph;
};

int cmd_metric(const MetricFlags& f, std::ostream& out) {
    MethodSpec method = usage_guard([&] {
        MethodSpec m;
        if (f.metric == "euclidean") {
            m.metric = MetricKind::Euclidean;
        } else if (f.metric == "pknng") {
            m.metric = MetricKind::Pknng;
        } else if (f.metric == "min-k") {
            m.metric = MetricKind::MinKConnected;
        } else {
            throw std::invalid_argument("unknown metric '" + f.metric + "'");
        }
        m.k_neighbors = f.k;
        m.connector.scheme = parse_scheme(f.scheme);
        m.connector.penalty = parse_penalty(f.penalty);
        return m;
    });
    if (method.metric == MetricKind::Pknng && method.k_neighbors < 1) throw UsageError("--k must be positive");
    if (!f.dump_graph.empty() && method.metric == MetricKind::Euclidean) {
        throw UsageError("--dump-graph needs a graph metric");
    }

    nlohmann::json cfg = {{"command", "metric"}, {"in", f.in}, {"out", f.out}, {"metric", f.metric}};
    if (method.metric == MetricKind::Pknng) {
        cfg["k"] = method.k_neighbors;
        cfg["scheme"] = to_string(method.connector.scheme);
        cfg["penalty"] = to_string(method.connector.penalty);
        cfg["mu_source"] = "post-prune-mean";
    }
    print_config(out, cfg);

    PointSet ps = read_pointset_csv(f.in);
    DissimilarityMatrix d = [&] {
        if (f.dump_graph.empty()) return compute_metric(ps, method);
        WeightedGraph g = method.metric == MetricKind::Pknng
                              ? pknng_graphs(ps, method.k_neighbors, method.connector).connected
                              : min_k_connected_graph(ps).graph;
        auto gf = open_out(f.dump_graph);
        write_edge_list(gf, g);
        return apsp(g);
    }();
    write_matrix_binary(f.out, d);
    if (!f.csv.empty()) write_matrix_csv(f.csv, d);
    out << "n=" << d.size() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- cluster

struct ClusterFlags {
    std::string matrix;
    std::string algo = "pam";
    std::size_t k = 2;
    std::string linkage = "average";
    double sigma_factor = 1.0;
    std::uint64_t seed = 1;
    std::string out;
    std::string truth;
};

int cmd_cluster(const ClusterFlags& f, std::ostream& out) {
    MethodSpec method = usage_guard([&] {
        MethodSpec m;
        if (f.algo == "pam") {
            m.algorithm = Algorithm::Pam;
        } else if (f.algo == "hc") {
            m.algorithm = Algorithm::Hierarchical;
        } else if (f.algo == "mst") {
            m.algorithm = Algorithm::Mst;
        } else if (f.algo == "spectral") {
            m.algorithm = Algorithm::Spectral;
        } else {
            throw std::invalid_argument("unknown algorithm '" + f.algo + "'");
        }
        m.linkage = parse_linkage(f.linkage);
        m.sigma_factor = f.sigma_factor;
        return m;
    });
    if (f.k < 1) throw UsageError("--k must be positive");

    nlohmann::json cfg = {{"command", "cluster"}, {"matrix", f.matrix}, {"algo", f.algo}, {"k", f.k}, {"out", f.out}};
    if (method.algorithm == Algorithm::Hierarchical) cfg["linkage"] = to_string(method.linkage);
    if (method.algorithm == Algorithm::Spectral) {
        cfg["sigma_factor"] = method.sigma_factor;
        cfg["seed"] = f.seed;
        cfg["kmeans_restarts"] = 10;
        cfg["kmeans_max_iter"] = 300;
    }
    print_config(out, cfg);

    DissimilarityMatrix d = read_matrix_binary(f.matrix);
    ClusterAssignment a = run_algorithm(d, f.k, method, f.seed);
    auto file = open_out(f.out);
    write_assignment_csv(file, a);
    if (!file) throw std::runtime_error("write failed: " + f.out);
    out << "clusters=" << a.cluster_count();
    if (a.objective) out << " objective=" << *a.objective;
    if (!f.truth.empty()) {
        PointSet truth = read_pointset_csv(f.truth);
        if (!truth.has_labels()) throw std::runtime_error(f.truth + " has no label column");
        out << " accuracy=" << accuracy(a.labels, truth.labels());
    }
    out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchFlags {
    std::string config;
    unsigned jobs = 1;
    std::string out = "bench-out";
};

int cmd_bench(const BenchFlags& f, std::ostream& out) {
    std::ifstream in(f.config);
    if (!in) throw std::runtime_error("cannot open " + f.config);
    nlohmann::json raw;
    try {
        raw = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(f.config + ": " + e.what());
    }
    ExperimentSpec spec = [&] {
        try {
            return experiment_from_json(raw);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(f.config + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw UsageError(f.config + ": " + e.what());
        }
    }();
    if (f.jobs < 1) throw UsageError("--jobs must be positive");

    nlohmann::json cfg = to_json(spec);
    cfg["command"] = "bench";
    cfg["jobs"] = f.jobs;
    cfg["out"] = f.out;
    print_config(out, cfg);

    GridOptions options;
    options.jobs = f.jobs;
    options.out_dir = f.out;
    ExperimentResult result = run_grid(spec, options);

    std::ofstream timings(std::filesystem::path(f.out) / "timings.csv");
    timings << "dataset,method,wall_seconds\n";
    for (const auto& c : result.cells) timings << c.dataset << ',' << c.method << ',' << c.wall_seconds << '\n';
    write_summary_csv(out, result.cells);
    return kExitOk;
}

// ---------------------------------------------------------------- mnist

struct MnistFlags {
    std::string digits = "0,1,2,3,4,5,6,7,8,9";
    std::size_t per_class = 500;
    std::size_t repeats = 10;
    std::vector<std::string> methods;
    std::uint64_t seed = 1;
    std::string images;
    std::string labels;
    unsigned jobs = 1;
    std::string out;
};

std::string mnist_path(const std::string& flag, const char* file) {
    if (!flag.empty()) return flag;
    const char* dir = std::getenv("PKNNG_MNIST_DIR");
    if (!dir || !*dir) throw UsageError(std::string("no MNIST location: pass --images/--labels or set PKNNG_MNIST_DIR"));
    return (std::filesystem::path(dir) / file).string();
}

int cmd_mnist(const MnistFlags& f, std::ostream& out) {
    MnistSpec spec;
    spec.digits.clear();
    std::stringstream ss(f.digits);
    for (std::string tok; std::getline(ss, tok, ',');) {
        std::size_t used = 0;
        int d = -1;
        try {
            d = std::stoi(tok, &used);
        } catch (const std::exception&) {
        }
        if (used != tok.size() || d < 0 || d > 9) throw UsageError("bad digit '" + tok + "'");
        if (std::find(spec.digits.begin(), spec.digits.end(), d) != spec.digits.end()) {
            throw UsageError("digit " + tok + " listed twice");
        }
        spec.digits.push_back(d);
    }
    if (spec.digits.empty()) throw UsageError("--digits is empty");
    if (f.per_class < 1 || f.repeats < 1) throw UsageError("--per-class and --repeats must be positive");
    spec.per_class = f.per_class;
    spec.repeats = f.repeats;
    spec.seed = f.seed;
    std::vector<std::string> names = f.methods;
    if (names.empty()) names = {"pknng-pam", "euclidean-pam", "spectral", "mst"};
    for (const auto& n : names) spec.methods.push_back(usage_guard([&] { return parse_method(n); }));
    const std::string images = mnist_path(f.images, "train-images-idx3-ubyte");
    const std::string labels = mnist_path(f.labels, "train-labels-idx1-ubyte");

    nlohmann::json cfg = to_json(spec);
    cfg["command"] = "mnist";
    cfg["images"] = images;
    cfg["labels"] = labels;
    cfg["jobs"] = f.jobs;
    print_config(out, cfg);

    MnistData data = load_mnist_idx(images, labels);
    auto rows = run_mnist(data, spec, std::max(1u, f.jobs));
    if (!f.out.empty()) {
        auto file = open_out(f.out);
        write_mnist_csv(file, spec, rows);
    }
    write_mnist_csv(out, spec, rows);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"PKNNG geodesic metric and clustering benchmark"};
    app.require_subcommand(1);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic dataset as CSV");
    g->add_option("--family", gen.family, "two-arcs | three-spirals | three-rings | four-gaussians");
    g->add_option("--noise", gen.noise, "low | medium | high");
    g->add_option("--noise-sigma", gen.noise_sigma, "Explicit noise sigma (overrides --noise)");
    g->add_option("--embed", gen.embed, "2d | 3d | 3d-noise | 10d-noise");
    g->add_option("--embed-sigma", gen.embed_sigma, "Explicit embedding noise sigma");
    g->add_option("--n", gen.n_per_cluster, "Points per cluster");
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out)->required();

    MetricFlags metric;
    auto* m = app.add_subcommand("metric", "Compute a dissimilarity matrix from a point CSV");
    m->add_option("--in", metric.in)->required();
    m->add_option("--out", metric.out, "Binary matrix output")->required();
    m->add_option("--metric", metric.metric, "euclidean | pknng | min-k");
    m->add_option("--k", metric.k, "Neighbors per point");
    m->add_option("--scheme", metric.scheme, "minspan | allsubgraphs | alledges | medoids");
    m->add_option("--penalty", metric.penalty, "exponential | exponential-shifted | plain");
    m->add_option("--csv", metric.csv, "Also write the matrix as CSV");
    m->add_option("--dump-graph", metric.dump_graph, "Write the final graph as an edge list");

    ClusterFlags cluster;
    auto* c = app.add_subcommand("cluster", "Cluster a binary dissimilarity matrix");
    c->add_option("--matrix", cluster.matrix)->required();
    c->add_option("--algo", cluster.algo, "pam | hc | mst | spectral");
    c->add_option("--k", cluster.k, "Number of clusters");
    c->add_option("--linkage", cluster.linkage, "single | complete | average");
    c->add_option("--sigma-factor", cluster.sigma_factor, "Spectral kernel width over the mean distance");
    c->add_option("--seed", cluster.seed);
    c->add_option("--out", cluster.out)->required();
    c->add_option("--truth", cluster.truth, "Labeled point CSV to score against");

    BenchFlags bench;
    auto* b = app.add_subcommand("bench", "Run an experiment grid from a JSON config");
    b->add_option("--config", bench.config)->required();
    b->add_option("--jobs", bench.jobs);
    b->add_option("--out", bench.out, "Output directory");

    MnistFlags mnist;
    auto* x = app.add_subcommand("mnist", "Cluster MNIST digit subsets");
    x->add_option("--digits", mnist.digits, "Comma-separated digit list");
    x->add_option("--per-class", mnist.per_class);
    x->add_option("--repeats", mnist.repeats);
    x->add_option("--method", mnist.methods, "Method name; repeatable")->delimiter(',');
    x->add_option("--seed", mnist.seed);
    x->add_option("--images", mnist.images, "IDX image file (default: $PKNNG_MNIST_DIR)");
    x->add_option("--labels", mnist.labels, "IDX label file (default: $PKNNG_MNIST_DIR)");
    x->add_option("--jobs", mnist.jobs);
    x->add_option("--out", mnist.out, "Result CSV");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (g->parsed()) return cmd_gen(gen, out);
        if (m->parsed()) return cmd_metric(metric, out);
        if (c->parsed()) return cmd_cluster(cluster, out);
        if (b->parsed()) return cmd_bench(bench, out);
        return cmd_mnist(mnist, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace pknng::cli
