// Acceptance checks. Prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "pknng/cluster.hpp"
#include "pknng/connect.hpp"
#include "pknng/eval.hpp"
#include "pknng/geodesic.hpp"

using namespace pknng;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [violated: " << what << "]";
        }
    }
};

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

MethodSpec pknng_method(ConnectScheme scheme, Penalty penalty, Algorithm algo = Algorithm::Pam) {
    MethodSpec m;
    m.connector.scheme = scheme;
    m.connector.penalty = penalty;
    m.algorithm = algo;
    return m;
}

MethodSpec euclidean_pam() { return parse_method("euclidean+pam"); }

std::vector<DatasetSpec> low_noise_cells(const std::vector<Embedding>& embeddings) {
    std::vector<DatasetSpec> out;
    for (auto f : {DatasetFamily::TwoArcs, DatasetFamily::ThreeSpirals, DatasetFamily::ThreeRings}) {
        for (auto e : embeddings) {
            DatasetSpec d;
            d.family = f;
            d.noise_level = NoiseLevel::Low;
            d.embedding = e;
            out.push_back(d);
        }
    }
    return out;
}

const std::vector<Embedding> kAllEmbeddings{Embedding::Plane2d, Embedding::Swiss3d, Embedding::Swiss3dNoise,
                                            Embedding::Rot10dNoise};

/// Runs the grid and returns mean accuracy indexed by [dataset][method].
std::map<std::string, std::map<std::string, double>> grid_means(const ExperimentSpec& spec, std::size_t& failures) {
    auto res = run_grid(spec, {jobs(), std::nullopt});
    std::map<std::string, std::map<std::string, double>> out;
    failures = 0;
    for (const auto& c : res.cells) {
        out[c.dataset][c.method] = c.mean;
        failures += c.failures;
    }
    return out;
}

// ---------------------------------------------------------------- 1, 2

Verdict mnist_criterion(const std::vector<int>& digits, double floor) {
    Verdict v;
    const char* env = std::getenv("PKNNG_MNIST_DIR");
    if (!env || !*env) {
        v.require(false, "PKNNG_MNIST_DIR is not set");
        return v;
    }
    const std::filesystem::path dir(env);
    MnistData data = load_mnist_idx((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string());
    MnistSpec spec;
    spec.digits = digits;
    spec.per_class = 300;
    spec.repeats = 3;
    spec.seed = 1;
    spec.methods = {parse_method("pknng-pam"), parse_method("spectral"), parse_method("euclidean-pam"), parse_method("mst")};
    auto rows = run_mnist(data, spec, jobs());
    const double ours = rows[0].mean;
    v.detail << "per-class 300, repeats 3;";
    for (const auto& r : rows) v.detail << ' ' << r.method << '=' << fixed(r.mean);
    v.require(rows[0].failures == 0, "pknng runs failed");
    v.require(ours >= floor, "pknng mean >= " + fixed(floor, 2));
    for (std::size_t i = 1; i < rows.size(); ++i) v.require(ours > rows[i].mean, "pknng > " + rows[i].method);
    return v;
}

// ---------------------------------------------------------------- 3

Verdict scheme_comparison() {
    Verdict v;
    ExperimentSpec spec;
    spec.datasets = low_noise_cells(kAllEmbeddings);
    spec.methods = {pknng_method(ConnectScheme::MinSpan, Penalty::Exponential),
                    pknng_method(ConnectScheme::AllSubGraphs, Penalty::Exponential),
                    pknng_method(ConnectScheme::AllEdges, Penalty::Exponential),
                    pknng_method(ConnectScheme::Medoids, Penalty::Exponential), euclidean_pam()};
    spec.realizations = 20;
    std::size_t failures = 0;
    auto means = grid_means(spec, failures);
    const std::string eu = euclidean_pam().name();
    double worst_gap = 1e9, worst_medoid = 0.0;
    std::size_t medoid_violations = 0;
    for (const auto& [dataset, row] : means) {
        v.detail << "\n  " << dataset << ':';
        for (std::size_t i = 0; i < 4; ++i)
            v.detail << ' ' << to_string(spec.methods[i].connector.scheme) << '=' << fixed(row.at(spec.methods[i].name()));
        v.detail << " euclidean=" << fixed(row.at(eu));
        for (std::size_t i = 0; i < 3; ++i) {
            const double gap = row.at(spec.methods[i].name()) - row.at(eu);
            worst_gap = std::min(worst_gap, gap);
            v.require(gap >= 0.10, dataset + " " + to_string(spec.methods[i].connector.scheme) + " - euclidean >= 0.10");
        }
        const double md = std::abs(row.at(spec.methods[3].name()) - row.at(eu));
        worst_medoid = std::max(worst_medoid, md);
        if (md > 0.05) ++medoid_violations;
    }
    v.require(medoid_violations == 0, "|medoids - euclidean| <= 0.05 on " + std::to_string(medoid_violations) + " of " +
                                          std::to_string(means.size()) + " cells");
    v.require(failures == 0, "failed runs");
    v.detail << "\n  smallest scheme gap " << fixed(worst_gap) << ", largest |medoids - euclidean| " << fixed(worst_medoid);
    return v;
}

// ---------------------------------------------------------------- 4

Verdict penalization_ablation() {
    Verdict v;
    ExperimentSpec spec;
    spec.datasets = low_noise_cells(kAllEmbeddings);
    spec.methods = {pknng_method(ConnectScheme::MinSpan, Penalty::Exponential),
                    pknng_method(ConnectScheme::MinSpan, Penalty::Plain)};
    spec.realizations = 20;
    std::size_t failures = 0;
    auto means = grid_means(spec, failures);
    std::size_t wide = 0;
    for (const auto& [dataset, row] : means) {
        const double e = row.at(spec.methods[0].name()), p = row.at(spec.methods[1].name());
        v.detail << "\n  " << dataset << ": exponential=" << fixed(e) << " plain=" << fixed(p);
        v.require(e >= p, dataset + " exponential >= plain");
        wide += e - p >= 0.05;
    }
    v.require(2 * wide >= means.size(), "gap >= 0.05 on at least half the cells");
    v.require(failures == 0, "failed runs");
    v.detail << "\n  cells with gap >= 0.05: " << wide << " of " << means.size();

    // identity: AllEdges-Plain against Euclidean on every realization of every cell
    const ConnectorConfig plain{ConnectScheme::AllEdges, Penalty::Plain, MuSource::PostPruneMean};
    double worst = 0.0;
    std::size_t partition_mismatch = 0, matrices = 0;
    for (const auto& cell : spec.datasets) {
        for (std::size_t r = 0; r < spec.realizations; ++r) {
            DatasetSpec d = cell;
            d.seed = realization_seed(spec.base_seed, cell, r);
            PointSet ps = generate(d, spec.constants);
            auto eu = euclidean_matrix(ps);
            auto pk = pknng_metric(ps, 5, plain, jobs());
            worst = std::max(worst, pk.max_abs_diff(eu));
            const auto k = static_cast<std::size_t>(class_count(cell.family));
            partition_mismatch += !oracle::same_partition(pam(pk, k).labels, pam(eu, k).labels);
            ++matrices;
        }
    }
    v.detail << "\n  alledges-plain vs euclidean over " << matrices << " matrices: max |diff| " << worst
             << ", PAM partitions differing " << partition_mismatch;
    v.require(worst <= 1e-9, "alledges-plain matrix within 1e-9 of euclidean");
    v.require(partition_mismatch == 0, "alledges-plain + PAM reproduces euclidean + PAM");
    return v;
}

// ---------------------------------------------------------------- 5

Verdict algorithm_independence() {
    Verdict v;
    ExperimentSpec spec;
    spec.datasets = low_noise_cells({Embedding::Plane2d});
    MethodSpec hc = pknng_method(ConnectScheme::MinSpan, Penalty::Exponential, Algorithm::Hierarchical);
    hc.linkage = Linkage::Average;
    spec.methods = {pknng_method(ConnectScheme::MinSpan, Penalty::Exponential), hc,
                    pknng_method(ConnectScheme::MinSpan, Penalty::Exponential, Algorithm::Mst)};
    spec.realizations = 20;
    std::size_t failures = 0;
    auto means = grid_means(spec, failures);
    for (const auto& [dataset, row] : means) {
        double lo = 1.0, hi = 0.0;
        v.detail << "\n  " << dataset << ':';
        for (const auto& m : spec.methods) {
            const double a = row.at(m.name());
            v.detail << ' ' << m.name() << '=' << fixed(a);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        v.require(hi - lo <= 0.05, dataset + " spread <= 0.05");
    }
    v.require(failures == 0, "failed runs");
    return v;
}

// ---------------------------------------------------------------- 6

Verdict compact_clouds() {
    Verdict v;
    ExperimentSpec spec;
    DatasetSpec d;
    d.family = DatasetFamily::FourGaussians;
    spec.datasets = {d};
    spec.methods = {parse_method("pknng-pam"), euclidean_pam()};
    spec.realizations = 20;
    std::size_t failures = 0;
    auto means = grid_means(spec, failures);
    for (const auto& [dataset, row] : means) {
        for (const auto& m : spec.methods) {
            v.detail << ' ' << m.name() << '=' << fixed(row.at(m.name()));
            v.require(row.at(m.name()) >= 0.99, m.name() + " >= 0.99");
        }
    }
    v.require(failures == 0, "failed runs");
    return v;
}

// ---------------------------------------------------------------- 7

Verdict oracle_suite() {
    Verdict v;
    auto report = [&](const std::string& name, std::size_t bad, std::size_t total, const std::string& extra = "") {
        v.detail << "\n  " << name << ": " << (total - bad) << '/' << total << " agree" << extra;
        v.require(bad == 0, name);
    };

    std::size_t bad = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto g = oracle::random_connected_graph(5 + s % 56, 5 + s % 56, 10'000 + s);
        bad += apsp_dijkstra(g).max_abs_diff(apsp_floyd_warshall(g)) > 1e-9;
    }
    report("Dijkstra vs Floyd-Warshall (50 graphs, n <= 60)", bad, 50);

    bad = 0;
    for (std::uint64_t s = 0; s < 30; ++s) {
        const std::size_t n = 2 + s % 7;
        auto g = oracle::random_connected_graph(n, n / 2 + s % 4, 20'000 + s);
        auto fw = apsp_floyd_warshall(g);
        auto ref = oracle::path_enumeration(g);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) ok = ok && std::abs(fw(i, j) - ref[i * n + j]) <= 1e-9;
        bad += !ok;
    }
    report("Floyd-Warshall vs simple-path enumeration (30 graphs, n <= 8)", bad, 30);

    bad = 0;
    double worst_gap = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t k = 1 + s % 3;
        auto d = oracle::random_matrix(12, 30'000 + s);
        const double gap = pam(d, k).objective.value() - oracle::exhaustive_medoid_objective(d, k);
        worst_gap = std::max(worst_gap, gap);
        bad += gap > 1e-9;
    }
    report("PAM vs exhaustive medoid search (20 matrices, n = 12, k <= 3)", bad, 20,
           ", largest objective excess " + fixed(worst_gap, 6));

    bad = 0;
    std::size_t total = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t n = 4 + s % 7;
        auto d = oracle::random_matrix(n, 40'000 + s);
        for (std::size_t k = 1; k <= n; ++k, ++total)
            bad += !oracle::same_partition(hierarchical(d, k, Linkage::Single).labels, mst_cluster(d, k).labels);
    }
    report("single linkage vs MST cut (20 matrices, every k)", bad, total);

    bad = 0;
    std::mt19937_64 gen(50'000);
    for (int t = 0; t < 200; ++t) {
        const int cp = 1 + t % 5, ct = 1 + (t / 5) % 5;
        std::vector<int> p(30), q(30);
        for (int i = 0; i < 30; ++i) {
            p[static_cast<std::size_t>(i)] = i < cp ? i : static_cast<int>(gen() % static_cast<unsigned>(cp));
            q[static_cast<std::size_t>(i)] = i < ct ? i : static_cast<int>(gen() % static_cast<unsigned>(ct));
        }
        bad += std::abs(accuracy(p, q) - oracle::brute_accuracy(p, q)) > 1e-15;
    }
    report("accuracy vs brute-force matching (200 labelings, C <= 5)", bad, 200);

    bad = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto ps = oracle::random_points(20 + s, 2 + s % 4, 60'000 + s);
        bad += nearest_neighbors(ps, 1 + s % 6) != oracle::brute_knn(ps, 1 + s % 6);
    }
    report("knn vs brute-force neighbor sort (50 point sets)", bad, 50);
    return v;
}

// ---------------------------------------------------------------- 8

Verdict metric_axioms() {
    Verdict v;
    std::size_t matrices = 0, bad_sym = 0, bad_diag = 0, bad_tri = 0;
    for (std::uint64_t s = 0; s < 30; ++s) {
        const std::size_t dim = 2 + s % 4;
        PointSet ps = s % 2 == 0 ? oracle::blob_field(70'000 + s, 2 + s % 5, 60 / (2 + s % 5), dim)
                                 : oracle::random_points(20 + 2 * (s % 21), dim, 70'000 + s);
        const std::size_t n = ps.size(), k = 3 + s % 4;
        for (auto scheme : {ConnectScheme::MinSpan, ConnectScheme::AllSubGraphs, ConnectScheme::AllEdges, ConnectScheme::Medoids}) {
            for (auto pen : {Penalty::Exponential, Penalty::ExponentialShifted, Penalty::Plain}) {
                auto d = pknng_metric(ps, k, ConnectorConfig{scheme, pen, MuSource::PostPruneMean});
                ++matrices;
                bool sym = true, diag = true, tri = true;
                for (std::size_t i = 0; i < n; ++i) {
                    diag = diag && d(i, i) == 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        sym = sym && d(i, j) == d(j, i);
                        for (std::size_t m = 0; m < n; ++m) tri = tri && d(i, j) <= d(i, m) + d(m, j) + 1e-12 * d(i, j);
                    }
                }
                bad_sym += !sym;
                bad_diag += !diag;
                bad_tri += !tri;
            }
        }
    }
    v.detail << matrices << " matrices from 30 inputs (n <= 60, every scheme and penalty): asymmetric " << bad_sym
             << ", nonzero diagonal " << bad_diag << ", triangle violations " << bad_tri;
    v.require(bad_sym == 0, "symmetry");
    v.require(bad_diag == 0, "zero diagonal");
    v.require(bad_tri == 0, "triangle inequality");
    return v;
}

// ---------------------------------------------------------------- 9

Verdict structural_invariants() {
    Verdict v;
    using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;
    auto added = [](const WeightedGraph& g) {
        EdgeSet s;
        for (const auto& e : g.edges())
            if (e.kind == EdgeKind::Added) s.emplace(e.i, e.j);
        return s;
    };
    std::size_t bad_count = 0, bad_subset = 0, bad_connected = 0, graphs = 0, min_c = 1000, max_c = 0;
    for (std::uint64_t s = 0; s < 30; ++s) {
        PointSet ps = oracle::blob_field(80'000 + s, 3 + s % 5, 6 + s % 5, 2 + s % 2);
        auto g = prune_outlier_edges(build_knn_graph(ps, 3));
        const std::size_t c = components(g).count;
        if (c < 2) continue;
        ++graphs;
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
        ConnectorConfig cfg;
        auto ms = connect_graph(g, ps, cfg);
        cfg.scheme = ConnectScheme::AllSubGraphs;
        auto as = connect_graph(g, ps, cfg);
        cfg.scheme = ConnectScheme::AllEdges;
        auto ae = connect_graph(g, ps, cfg);
        cfg.scheme = ConnectScheme::Medoids;
        auto md = connect_graph(g, ps, cfg);
        auto ms_set = added(ms), as_set = added(as);
        bad_count += ms_set.size() != c - 1;
        bad_subset += !std::includes(as_set.begin(), as_set.end(), ms_set.begin(), ms_set.end());
        for (const auto* h : {&ms, &as, &ae, &md}) bad_connected += oracle::count_of(oracle::bfs_components(*h, false)) != 1;
    }
    v.detail << graphs << " disconnected graphs (" << min_c << ".." << max_c << " components): wrong MinSpan count "
             << bad_count << ", MinSpan not within AllSubGraphs " << bad_subset << ", disconnected outputs " << bad_connected;
    v.require(graphs == 30, "30 disconnected inputs");
    v.require(bad_count == 0, "MinSpan adds C-1 edges");
    v.require(bad_subset == 0, "MinSpan within AllSubGraphs");
    v.require(bad_connected == 0, "outputs connected");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> which;
    app.add_option("--criterion", which, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9};

    const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria{
        {1, {"MNIST 3-5-8", [] { return mnist_criterion({3, 5, 8}, 0.58); }}},
        {2, {"MNIST 4-7-9", [] { return mnist_criterion({4, 7, 9}, 0.48); }}},
        {3, {"connection schemes vs Euclidean", scheme_comparison}},
        {4, {"penalization ablation", penalization_ablation}},
        {5, {"algorithm independence", algorithm_independence}},
        {6, {"compact-cloud equivalence", compact_clouds}},
        {7, {"oracle equivalences", oracle_suite}},
        {8, {"metric axioms", metric_axioms}},
        {9, {"structural invariants", structural_invariants}},
    };

    bool all = true;
    for (int c : which) {
        const auto& [title, fn] = criteria.at(c);
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c << ": " << title << " (" << fixed(secs, 1) << " s) "
                  << v.detail.str() << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
