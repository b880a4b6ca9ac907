#include "catch_amalgamated.hpp"

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pknng/cluster.hpp"

using namespace pknng;
using Catch::Matchers::WithinAbs;

namespace {

DissimilarityMatrix two_pairs() {
    return DissimilarityMatrix(4, {0, 1, 100, 100,  //
                                   1, 0, 100, 100,  //
                                   100, 100, 0, 1,  //
                                   100, 100, 1, 0});
}

DissimilarityMatrix chain(const std::vector<double>& xs) {
    return euclidean_matrix(PointSet(1, xs));
}

// Agglomeration that recomputes every linkage from the raw matrix at each step.
std::vector<int> naive_agglomerative(const DissimilarityMatrix& d, std::size_t k, Linkage linkage) {
    const std::size_t n = d.size();
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
    auto link = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
        for (auto i : a)
            for (auto j : b) {
                lo = std::min(lo, d(i, j));
                hi = std::max(hi, d(i, j));
                sum += d(i, j);
            }
        if (linkage == Linkage::Single) return lo;
        if (linkage == Linkage::Complete) return hi;
        return sum / static_cast<double>(a.size() * b.size());
    };
    while (clusters.size() > k) {
        std::size_t ba = 0, bb = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a)
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                const double v = link(clusters[a], clusters[b]);
                if (v < best) {
                    best = v;
                    ba = a;
                    bb = b;
                }
            }
        clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
        clusters.erase(clusters.begin() + static_cast<long>(bb));
    }
    std::vector<int> labels(n);
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (auto i : clusters[c]) labels[i] = static_cast<int>(c);
    return labels;
}

}  // namespace

TEST_CASE("PAM basics", "[cluster][pam]") {
    SECTION("k = n") {
        auto d = oracle::random_matrix(6, 1);
        auto a = pam(d, 6);
        CHECK(a.objective.value() == 0.0);
        CHECK(a.medoids == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
        CHECK(a.cluster_count() == 6);
    }
    SECTION("two pairs") {
        auto a = pam(two_pairs(), 2);
        CHECK(a.objective.value() == 2.0);
        REQUIRE(a.medoids.size() == 2);
        CHECK(a.medoids[0] < 2);
        CHECK(a.medoids[1] >= 2);
        CHECK(a.labels[0] == a.labels[1]);
        CHECK(a.labels[2] == a.labels[3]);
        CHECK(a.labels[0] != a.labels[2]);
    }
    SECTION("k = 1 picks the overall medoid") {
        auto d = chain({0, 1, 2, 3, 10});
        auto a = pam(d, 1);
        CHECK(a.medoids == std::vector<std::size_t>{2});
        CHECK(a.objective.value() == Catch::Approx(2 + 1 + 0 + 1 + 8));
    }
    SECTION("parameter errors") {
        auto d = oracle::random_matrix(4, 2);
        CHECK_THROWS_AS(pam(d, 5), std::invalid_argument);
        CHECK_THROWS_AS(pam(d, 0), std::invalid_argument);
    }
}

TEST_CASE("PAM finds the exhaustive optimum on clustered data", "[cluster][pam][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t k = 1 + seed % 3;
        std::vector<double> xs;
        auto base = oracle::random_points(12, 2, 40 + seed);
        for (std::size_t i = 0; i < 12; ++i) {
            xs.push_back(base.point(i)[0] + 50.0 * static_cast<double>(i % k));
            xs.push_back(base.point(i)[1]);
        }
        auto d = euclidean_matrix(PointSet(2, xs));
        auto a = pam(d, k);
        CHECK_THAT(a.objective.value(), WithinAbs(oracle::exhaustive_medoid_objective(d, k), 1e-9));
        CHECK_THAT(medoid_objective(d, a.medoids), WithinAbs(a.objective.value(), 1e-12));
        for (std::size_t i = 0; i < 12; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (auto m : a.medoids) best = std::min(best, d(i, m));
            CHECK(d(i, a.medoids[static_cast<std::size_t>(a.labels[i])]) == best);
        }
    }
}

TEST_CASE("PAM on arbitrary matrices is swap-locally optimal", "[cluster][pam][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 12, k = 1 + seed % 3;
        auto d = oracle::random_matrix(n, 40 + seed);
        auto a = pam(d, k);
        const double obj = a.objective.value();
        CHECK(obj >= oracle::exhaustive_medoid_objective(d, k) - 1e-9);
        for (std::size_t m = 0; m < k; ++m) {
            for (std::size_t c = 0; c < n; ++c) {
                if (std::find(a.medoids.begin(), a.medoids.end(), c) != a.medoids.end()) continue;
                auto trial = a.medoids;
                trial[m] = c;
                CHECK(medoid_objective(d, trial) >= obj - 1e-12);
            }
        }
    }
}

TEST_CASE("hierarchical clustering", "[cluster][hc]") {
    auto d = oracle::random_matrix(7, 3);
    for (auto l : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
        auto all = hierarchical(d, 7, l);
        CHECK(all.cluster_count() == 7);
        auto one = hierarchical(d, 1, l);
        CHECK(one.cluster_count() == 1);
        CHECK_THROWS_AS(hierarchical(d, 8, l), std::invalid_argument);
    }
    CHECK(parse_linkage("Average") == Linkage::Average);
    CHECK(parse_linkage(to_string(Linkage::Complete)) == Linkage::Complete);
    CHECK_THROWS_AS(parse_linkage("ward"), std::invalid_argument);

    SECTION("chain splits at the widest gap") {
        auto a = hierarchical(chain({0, 1, 2, 10, 11, 12}), 2, Linkage::Average);
        CHECK(a.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
    }
    SECTION("Lance-Williams matches naive recomputation") {
        for (std::uint64_t seed = 0; seed < 15; ++seed) {
            auto m = oracle::random_matrix(10, 200 + seed);
            for (auto l : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
                for (std::size_t k = 1; k <= 10; ++k) {
                    CHECK(oracle::same_partition(hierarchical(m, k, l).labels, naive_agglomerative(m, k, l)));
                }
            }
        }
    }
}

TEST_CASE("MST clustering", "[cluster][mst]") {
    CHECK(mst_cluster(oracle::random_matrix(5, 1), 1).cluster_count() == 1);
    auto a = mst_cluster(chain({0, 1, 2, 10, 11, 12}), 2);
    CHECK(a.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK(mst_cluster(oracle::random_matrix(5, 1), 5).cluster_count() == 5);
    CHECK_THROWS_AS(mst_cluster(oracle::random_matrix(5, 1), 6), std::invalid_argument);
}

TEST_CASE("single linkage equals the MST cut for every k", "[cluster][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 4 + seed % 7;
        auto d = oracle::random_matrix(n, 900 + seed);
        for (std::size_t k = 1; k <= n; ++k) {
            CHECK(oracle::same_partition(hierarchical(d, k, Linkage::Single).labels, mst_cluster(d, k).labels));
        }
    }
}

TEST_CASE("spectral clustering", "[cluster][spectral]") {
    SECTION("block-diagonal affinity recovers the blocks") {
        auto d = chain({0, 0.1, 0.2, 0.3, 50, 50.1, 50.2});
        Rng rng(1);
        auto a = spectral(d, 2, 0.2, rng);
        CHECK(oracle::same_partition(a.labels, {0, 0, 0, 0, 1, 1, 1}));
    }
    SECTION("k = 1") {
        Rng rng(1);
        auto a = spectral(oracle::random_matrix(6, 4), 1, 1.0, rng);
        CHECK(a.cluster_count() == 1);
    }
    SECTION("k > n") {
        Rng rng(1);
        CHECK_THROWS_AS(spectral(oracle::random_matrix(3, 4), 4, 1.0, rng), std::invalid_argument);
    }
    SECTION("affinity definition") {
        auto d = chain({0, 1, 3});
        auto a = normalized_affinity(d, 1.0);
        const double sigma = (1.0 + 3.0 + 2.0) / 3.0;
        auto raw = [&](double x) { return std::exp(-x * x / (2 * sigma * sigma)); };
        const double deg0 = raw(1) + raw(3), deg1 = raw(1) + raw(2);
        CHECK_THAT(a(0, 1), WithinAbs(raw(1) / std::sqrt(deg0 * deg1), 1e-14));
        CHECK(a(0, 0) == 0.0);
    }
    SECTION("3x3 eigenvectors match the Jacobi oracle") {
        auto d = chain({0, 0.7, 2.0});
        auto m = normalized_affinity(d, 1.0);
        double in[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) in[i][j] = m(i, j);
        auto ref = oracle::jacobi3(in);
        for (std::size_t k : {2u, 3u}) {
            auto emb = spectral_embedding(d, k, 1.0);
            for (std::size_t c = 0; c < k; ++c) CHECK_THAT(emb.eigenvalues(c), WithinAbs(ref.values[c], 1e-8));
            for (int i = 0; i < 3; ++i) {
                double norm = 0.0;
                for (std::size_t c = 0; c < k; ++c) norm += ref.vectors[i][c] * ref.vectors[i][c];
                norm = std::sqrt(norm);
                for (std::size_t c = 0; c < k; ++c) {
                    const double sign = (emb.rows(0, c) * ref.vectors[0][c] >= 0) ? 1.0 : -1.0;
                    CHECK_THAT(emb.rows(i, c), WithinAbs(sign * ref.vectors[i][c] / norm, 1e-8));
                }
            }
        }
    }
    SECTION("embedding rows have unit norm") {
        auto d = euclidean_matrix(oracle::random_points(40, 3, 12));
        auto emb = spectral_embedding(d, 4, 1.0);
        for (Eigen::Index i = 0; i < emb.rows.rows(); ++i) CHECK_THAT(emb.rows.row(i).norm(), WithinAbs(1.0, 1e-9));
    }
    SECTION("seeded runs are reproducible") {
        auto d = euclidean_matrix(oracle::random_points(30, 2, 13));
        Rng r1(5), r2(5);
        CHECK(spectral(d, 3, 1.0, r1).labels == spectral(d, 3, 1.0, r2).labels);
    }
}

TEST_CASE("k-means", "[cluster]") {
    Eigen::MatrixXd x(6, 2);
    x << 0, 0, 0.1, 0, 0, 0.1, 5, 5, 5.1, 5, 5, 5.1;
    Rng rng(3);
    auto r = kmeans(x, 2, rng);
    CHECK(oracle::same_partition(r.labels, {0, 0, 0, 1, 1, 1}));
    CHECK_THAT(r.inertia, WithinAbs(4 * (0.1 * 0.1 * 2.0 / 3.0), 1e-12));
}

TEST_CASE("Hungarian assignment", "[cluster][accuracy]") {
    std::vector<double> cost{4, 1, 3,  //
                             2, 0, 5,  //
                             3, 2, 2};
    auto col = hungarian_min_cost(cost, 3);
    double total = 0.0;
    for (std::size_t r = 0; r < 3; ++r) total += cost[r * 3 + col[r]];
    CHECK(total == 5.0);
}

TEST_CASE("clustering accuracy", "[cluster][accuracy]") {
    std::vector<int> truth{0, 0, 1, 1, 2, 2};
    CHECK(accuracy(truth, truth) == 1.0);
    CHECK(accuracy(std::vector<int>{2, 2, 0, 0, 1, 1}, truth) == 1.0);
    CHECK_THROWS_AS(accuracy(std::vector<int>{0, 1}, truth), std::invalid_argument);

    SECTION("confusion [[5,1],[2,4]]") {
        std::vector<int> pred, tr;
        auto add = [&](int p, int t, int c) {
            for (int i = 0; i < c; ++i) {
                pred.push_back(p);
                tr.push_back(t);
            }
        };
        add(0, 0, 5);
        add(0, 1, 1);
        add(1, 0, 2);
        add(1, 1, 4);
        CHECK(accuracy(pred, tr) == 0.75);
        CHECK(oracle::brute_accuracy(pred, tr) == 0.75);
    }
    SECTION("different cluster and class counts") {
        CHECK(accuracy(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 0, 1, 1}) == 0.5);
        CHECK(accuracy(std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 0, 1, 1}) == 0.5);
    }
    SECTION("random labelings match brute force and are permutation invariant") {
        std::mt19937_64 gen(4);
        for (int trial = 0; trial < 200; ++trial) {
            const int cp = 1 + trial % 5, ct = 1 + (trial / 5) % 5;
            std::vector<int> p(40), t(40);
            for (int i = 0; i < 40; ++i) {
                p[static_cast<std::size_t>(i)] = i < cp ? i : static_cast<int>(gen() % static_cast<unsigned>(cp));
                t[static_cast<std::size_t>(i)] = i < ct ? i : static_cast<int>(gen() % static_cast<unsigned>(ct));
            }
            const double acc = accuracy(p, t);
            REQUIRE_THAT(acc, WithinAbs(oracle::brute_accuracy(p, t), 1e-15));
            std::vector<int> perm(static_cast<std::size_t>(cp));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), gen);
            std::vector<int> q(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) q[i] = perm[static_cast<std::size_t>(p[i])];
            REQUIRE(accuracy(q, t) == acc);
        }
    }
}

TEST_CASE("assignment CSV", "[cluster][io]") {
    ClusterAssignment a;
    a.labels = {1, 0, 1};
    std::stringstream s;
    write_assignment_csv(s, a);
    CHECK(s.str() == "point_index,cluster_id\n0,1\n1,0\n2,1\n");
}
