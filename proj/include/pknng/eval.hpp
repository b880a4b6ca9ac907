#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pknng/cluster.hpp"
#include "pknng/connect.hpp"
#include "pknng/core.hpp"
#include "pknng/data.hpp"

namespace pknng {

enum class MetricKind { Euclidean, Pknng, MinKConnected };
enum class Algorithm { Pam, Hierarchical, Mst, Spectral };

/// One way of turning a point set into a partition: a dissimilarity plus a clusterer.
struct MethodSpec {
    MetricKind metric = MetricKind::Pknng;
    ConnectorConfig connector;   // PKNNG only
    std::size_t k_neighbors = 5;  // PKNNG only
    Algorithm algorithm = Algorithm::Pam;
    Linkage linkage = Linkage::Average;  // hierarchical only
    double sigma_factor = 1.0;           // spectral only

    /// Canonical, fully explicit name, e.g. "pknng-minspan-exponential-k5+pam".
    std::string name() const;
};

/// Parses canonical names and the shorthands pknng-pam, pknng-hc, pknng-mst,
/// euclidean-pam, euclidean-hc, min-k-pam, spectral and mst.
MethodSpec parse_method(std::string_view text);

DissimilarityMatrix compute_metric(const PointSet& ps, const MethodSpec& method, unsigned threads = 1);

/// Clusters with the method's algorithm; `seed` feeds the randomized parts (spectral k-means).
ClusterAssignment run_algorithm(const DissimilarityMatrix& d, std::size_t k, const MethodSpec& method,
                                std::uint64_t seed);

/// Stable identity of a dataset configuration; realization seeds derive from it,
/// so every method sees the same realizations.
std::string dataset_key(const DatasetSpec& spec);

struct RealizationResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::optional<double> accuracy;  // empty when the run failed
    std::string error;
};

struct CellResult {
    std::string dataset;
    std::string method;
    std::vector<RealizationResult> runs;
    double mean = 0.0;  // over successful runs
    double sd = 0.0;    // sample standard deviation; 0 for a single run
    std::size_t failures = 0;
    double wall_seconds = 0.0;  // not persisted in result files
};

/// Mean and sample standard deviation of the successful runs, in run order.
void aggregate(CellResult& cell);

struct ExperimentSpec {
    std::vector<DatasetSpec> datasets;  // seeds are ignored; each realization derives its own
    std::vector<MethodSpec> methods;
    std::size_t realizations = 20;
    std::uint64_t base_seed = 1;
    std::optional<int> k_clusters;  // defaults to the family's class count
    DataConstants constants;
};

struct ExperimentResult {
    std::vector<CellResult> cells;  // datasets major, methods minor
};

std::uint64_t realization_seed(std::uint64_t base_seed, const DatasetSpec& dataset, std::size_t index);

CellResult run_cell(const DatasetSpec& dataset, const MethodSpec& method, std::size_t realizations,
                    std::uint64_t base_seed, const DataConstants& constants = {},
                    std::optional<int> k_clusters = std::nullopt);

struct GridOptions {
    unsigned jobs = 1;
    /// When set, each finished cell is written to out_dir/cells/ at once and the
    /// aggregated CSVs at the end; cells already on disk are loaded, not rerun.
    std::optional<std::filesystem::path> out_dir;
};

ExperimentResult run_grid(const ExperimentSpec& spec, const GridOptions& options = {});

// Result files. Realization rows: dataset,method,realization,seed,accuracy,error.
// Summary rows: dataset,method,realizations,failures,mean,sd.
void write_realizations_csv(std::ostream& out, const std::vector<CellResult>& cells);
void write_summary_csv(std::ostream& out, const std::vector<CellResult>& cells);
std::vector<CellResult> read_realizations_csv(std::istream& in);

// Experiment config (JSON). Every data constant and default is written out.
nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MethodSpec& m);
MethodSpec method_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DataConstants& c);
DataConstants constants_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- MNIST

struct MnistSpec {
    std::vector<int> digits{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t per_class = 500;
    std::size_t repeats = 10;
    std::vector<MethodSpec> methods;
    std::uint64_t seed = 1;
};

struct MnistRow {
    std::string method;
    std::vector<std::optional<double>> accuracies;  // one per repeat
    double mean = 0.0;
    double sd = 0.0;
    std::size_t failures = 0;
};

/// Draws the disjoint digit subsets once and scores every method on each of them.
std::vector<MnistRow> run_mnist(const MnistData& data, const MnistSpec& spec, unsigned jobs = 1);

/// Columns: method,digits,per_class,repeats,failures,mean,sd,accuracies (';'-separated).
void write_mnist_csv(std::ostream& out, const MnistSpec& spec, const std::vector<MnistRow>& rows);

nlohmann::json to_json(const MnistSpec& spec);

}  // namespace pknng
