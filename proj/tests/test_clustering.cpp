#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "dcct/clustering.hpp"
#include "dcct/rng.hpp"

using namespace dcct;

namespace {

Matrix dist_from_points_1d(const std::vector<double>& x) {
    int n = static_cast<int>(x.size());
    Matrix d(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = std::abs(x[i] - x[j]);
    return d;
}

// ---- brute-force DBSCAN oracle -------------------------------------------
// Cores by neighborhood count (self included), core components by union-find,
// labels in ascending order of each component's smallest core, border points
// to the smallest-label adjacent core cluster.
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

ClusterResult oracle_dbscan(const Matrix& d, double eps, int min_pts) {
    int n = static_cast<int>(d.rows());
    std::vector<bool> core(n, false);
    for (int i = 0; i < n; ++i) {
        int cnt = 0;
        for (int j = 0; j < n; ++j)
            if (d(i, j) <= eps) ++cnt;
        core[i] = cnt >= min_pts;
    }
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (core[i] && core[j] && d(i, j) <= eps) uf.unite(i, j);

    ClusterResult res;
    res.assignment.assign(n, -1);
    std::vector<int> root_label;
    for (int i = 0; i < n; ++i) {
        if (!core[i]) continue;
        int r = uf.find(i);
        auto it = std::find(root_label.begin(), root_label.end(), r);
        int label;
        if (it == root_label.end()) {
            label = static_cast<int>(root_label.size());
            root_label.push_back(r);
        } else {
            label = static_cast<int>(it - root_label.begin());
        }
        res.assignment[i] = label;
    }
    for (int i = 0; i < n; ++i) {
        if (core[i]) continue;
        int best = -1;
        for (int j = 0; j < n; ++j)
            if (core[j] && d(i, j) <= eps)
                best = best < 0 ? res.assignment[j]
                                : std::min(best, res.assignment[j]);
        res.assignment[i] = best;
    }
    res.num_clusters = static_cast<int>(root_label.size());
    return res;
}

bool same_up_to_permutation(const std::vector<int>& a,
                            const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::vector<int> fwd, bwd;
    for (size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0)) return false;
        if (a[i] < 0) continue;
        if (a[i] >= static_cast<int>(fwd.size())) fwd.resize(a[i] + 1, -1);
        if (b[i] >= static_cast<int>(bwd.size())) bwd.resize(b[i] + 1, -1);
        if (fwd[a[i]] == -1) fwd[a[i]] = b[i];
        if (bwd[b[i]] == -1) bwd[b[i]] = a[i];
        if (fwd[a[i]] != b[i] || bwd[b[i]] != a[i]) return false;
    }
    return true;
}

// ---- independent two-level map equation scorer ----------------------------
double oracle_map_equation(const Matrix& adj, const std::vector<int>& part) {
    int n = static_cast<int>(adj.rows());
    double total = adj.sum();
    if (total <= 0) return 0.0;
    auto h = [](double x) { return x > 0 ? -x * std::log2(x) : 0.0; };

    int K = *std::max_element(part.begin(), part.end()) + 1;
    std::vector<double> exit_w(K, 0), inside_p(K, 0);
    double node_entropy = 0;
    for (int i = 0; i < n; ++i) {
        double s = adj.row(i).sum();
        node_entropy += h(s / total);
        if (part[i] < 0) continue;
        inside_p[part[i]] += s / total;
        for (int j = 0; j < n; ++j)
            if (part[j] != part[i]) exit_w[part[i]] += adj(i, j);
    }
    double q_tot = 0, index_terms = 0, module_terms = 0;
    for (int m = 0; m < K; ++m) {
        double q = exit_w[m] / total;
        q_tot += q;
        index_terms += h(q);
        module_terms += h(q + inside_p[m]);
    }
    // codelength = index codebook + module codebooks
    return -h(q_tot) + 2 * index_terms + node_entropy - module_terms;
}

// All partitions of {0..n-1} via restricted growth strings.
void all_partitions(int n, std::vector<std::vector<int>>& out) {
    std::vector<int> s(n, 0);
    std::function<void(int, int)> rec = [&](int i, int maxv) {
        if (i == n) {
            out.push_back(s);
            return;
        }
        for (int v = 0; v <= maxv + 1; ++v) {
            s[i] = v;
            rec(i + 1, std::max(maxv, v));
        }
    };
    rec(0, -1);
}

}  // namespace

TEST_CASE("dbscan: two 1-D blobs") {
    auto d = dist_from_points_1d({0, 0.1, 0.2, 10, 10.1, 10.2});
    auto r = dbscan(d, 0.3, 2);
    CHECK(r.num_clusters == 2);
    CHECK(r.num_outliers() == 0);
    CHECK(r.assignment == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("dbscan: eps below all distances leaves everything outlier") {
    auto d = dist_from_points_1d({0, 1, 2, 3});
    auto r = dbscan(d, 0.5, 2);
    CHECK(r.num_clusters == 0);
    CHECK(r.num_outliers() == 4);
}

TEST_CASE("dbscan matches the reachability oracle on random instances") {
    Rng rng(321);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 4 + rng.uniform_int(9);  // n <= 12
        std::vector<double> pts(n);
        for (auto& p : pts) p = 4.0 * rng.uniform();
        auto d = dist_from_points_1d(pts);
        double eps = 0.1 + 0.8 * rng.uniform();
        int min_pts = 1 + rng.uniform_int(4);
        auto got = dbscan(d, eps, min_pts);
        auto want = oracle_dbscan(d, eps, min_pts);
        CHECK(got.num_clusters == want.num_clusters);
        CHECK(same_up_to_permutation(got.assignment, want.assignment));
    }
}

TEST_CASE("dbscan monotonicity: larger eps never adds outliers") {
    Rng rng(44);
    std::vector<double> pts(20);
    for (auto& p : pts) p = 3.0 * rng.uniform();
    auto d = dist_from_points_1d(pts);
    int prev = 1 << 30;
    for (double eps = 0.05; eps < 1.0; eps += 0.05) {
        auto r = dbscan(d, eps, 3);
        CHECK(r.num_outliers() <= prev);
        prev = r.num_outliers();
    }
}

TEST_CASE("kmeans: k = n gives singletons, k = 1 gives the mean") {
    Rng rng(15);
    Matrix e(6, 2);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) e(i, j) = rng.normal();
    auto singles = kmeans(e, 6, 1);
    CHECK(singles.num_clusters == 6);
    std::vector<int> sorted = singles.assignment;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5});

    auto one = kmeans(e, 1, 1);
    CHECK(one.num_clusters == 1);
    CHECK(one.num_outliers() == 0);
}

TEST_CASE("kmeans recovers two separated blobs") {
    Rng rng(91);
    Matrix e(20, 2);
    for (int i = 0; i < 20; ++i) {
        e(i, 0) = (i < 10 ? 0.0 : 10.0) + 0.2 * rng.normal();
        e(i, 1) = 0.2 * rng.normal();
    }
    auto r = kmeans(e, 2, 7);
    CHECK(r.num_clusters == 2);
    for (int i = 1; i < 10; ++i) CHECK(r.assignment[i] == r.assignment[0]);
    for (int i = 11; i < 20; ++i) CHECK(r.assignment[i] == r.assignment[10]);
    CHECK(r.assignment[0] != r.assignment[10]);
    CHECK_THROWS(kmeans(e, 21, 0));
}

TEST_CASE("infomap: psi below all distances leaves all outliers") {
    Matrix d(4, 4);
    d.setConstant(0.9);
    d.diagonal().setZero();
    auto r = infomap(d, 0.5);
    CHECK(r.num_clusters == 0);
    CHECK(r.num_outliers() == 4);
}

TEST_CASE("infomap: two disconnected cliques recovered") {
    // 6 nodes, distance 0.1 inside cliques {0,1,2} and {3,4,5}, 0.99 across
    Matrix d(6, 6);
    d.setConstant(0.99);
    for (int i = 0; i < 6; ++i) d(i, i) = 0;
    for (int a : {0, 1, 2})
        for (int b : {0, 1, 2})
            if (a != b) d(a, b) = 0.1;
    for (int a : {3, 4, 5})
        for (int b : {3, 4, 5})
            if (a != b) d(a, b) = 0.1;
    auto r = infomap(d, 0.5);
    CHECK(r.num_clusters == 2);
    CHECK(same_up_to_permutation(r.assignment, {0, 0, 0, 1, 1, 1}));
}

TEST_CASE("infomap: uniform complete graph is one community") {
    Matrix d(6, 6);
    d.setConstant(0.3);
    d.diagonal().setZero();
    auto r = infomap(d, 0.5);
    CHECK(r.num_clusters == 1);
}

TEST_CASE("infomap reaches the exhaustive map-equation optimum") {
    Rng rng(606);
    std::vector<std::vector<int>> partitions;
    for (int trial = 0; trial < 50; ++trial) {
        int n = 4 + rng.uniform_int(5);  // n <= 8
        Matrix d(n, n);
        d.setZero();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                d(i, j) = d(j, i) = 0.05 + 0.9 * rng.uniform();
        double psi = 0.3 + 0.5 * rng.uniform();

        Matrix adj = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && d(i, j) < psi) adj(i, j) = 1.0 - d(i, j);

        partitions.clear();
        all_partitions(n, partitions);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : partitions)
            best = std::min(best, oracle_map_equation(adj, p));

        auto r = infomap(d, psi);
        // isolated nodes carry no flow; score the returned labels directly
        std::vector<int> labels = r.assignment;
        int next = r.num_clusters;
        for (auto& l : labels)
            if (l < 0) l = next++;  // singleton modules for outliers
        double got = oracle_map_equation(adj, labels);
        CHECK(got == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("davies-bouldin hand oracles") {
    Matrix a(2, 1);
    a << 0, 10;
    CHECK(*davies_bouldin(a, {0, 1}) == doctest::Approx(0.0));

    Matrix b(4, 1);
    b << 0, 0, 10, 10;
    CHECK(*davies_bouldin(b, {0, 0, 1, 1}) == doctest::Approx(0.0));

    Matrix c(4, 1);
    c << 0, 1, 4, 5;
    CHECK(*davies_bouldin(c, {0, 0, 1, 1}) == doctest::Approx(0.25));
}

TEST_CASE("davies-bouldin: K < 2 yields the sentinel") {
    Matrix a(3, 2);
    a.setRandom();
    CHECK_FALSE(davies_bouldin(a, {0, 0, 0}).has_value());
    CHECK_FALSE(davies_bouldin(a, {-1, -1, -1}).has_value());
}

TEST_CASE("davies-bouldin matches direct formula on random instances") {
    Rng rng(2718);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 6 + rng.uniform_int(15);  // n <= 20
        int k = 2 + rng.uniform_int(3);
        Matrix e(n, 3);
        std::vector<int> assign(n);
        for (int i = 0; i < n; ++i) {
            assign[i] = i < k ? i : rng.uniform_int(k);  // every cluster filled
            for (int j = 0; j < 3; ++j) e(i, j) = rng.normal();
        }
        int n_out = rng.uniform_int(3);
        for (int o = 0; o < n_out; ++o) assign[k + rng.uniform_int(n - k)] = -1;
        bool all_filled = true;
        for (int c = 0; c < k; ++c)
            all_filled &= std::count(assign.begin(), assign.end(), c) > 0;
        if (!all_filled) continue;

        // direct formula
        std::vector<Vector> cent(k, Vector::Zero(3));
        std::vector<int> cnt(k, 0);
        for (int i = 0; i < n; ++i)
            if (assign[i] >= 0) {
                cent[assign[i]] += e.row(i).transpose();
                ++cnt[assign[i]];
            }
        for (int c = 0; c < k; ++c) cent[c] /= cnt[c];
        std::vector<double> s(k, 0);
        for (int i = 0; i < n; ++i)
            if (assign[i] >= 0)
                s[assign[i]] += (e.row(i).transpose() - cent[assign[i]]).norm();
        for (int c = 0; c < k; ++c) s[c] /= cnt[c];
        double want = 0;
        for (int i = 0; i < k; ++i) {
            double mx = 0;
            for (int j = 0; j < k; ++j)
                if (j != i)
                    mx = std::max(mx, (s[i] + s[j]) / (cent[i] - cent[j]).norm());
            want += mx;
        }
        want /= k;

        auto got = davies_bouldin(e, assign);
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("pseudo label extraction") {
    ClusterResult r;
    r.assignment = {0, 0, -1, 1};
    r.num_clusters = 2;
    auto p = pseudo_labels(r);
    CHECK(p.kept == std::vector<int>{0, 1, 3});
    CHECK(p.labels == std::vector<int>{0, 0, 1});
    CHECK(p.num_clusters == 2);

    ClusterResult all_out;
    all_out.assignment = {-1, -1};
    all_out.num_clusters = 0;
    CHECK(pseudo_labels(all_out).empty());

    // non-contiguous input labels are compacted
    ClusterResult gappy;
    gappy.assignment = {5, -1, 2, 5};
    gappy.num_clusters = 2;
    auto q = pseudo_labels(gappy);
    CHECK(q.labels == std::vector<int>{0, 1, 0});
    CHECK(q.num_clusters == 2);
}
