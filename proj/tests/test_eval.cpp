#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "dcct/eval.hpp"
#include "dcct/rng.hpp"

using namespace dcct;

namespace {

// Direct O(n^2) reference scorer, kept deliberately naive.
RetrievalResult reference_eval(const Matrix& q, const RetrievalMeta& qm,
                               const Matrix& g, const RetrievalMeta& gm) {
    RetrievalResult out;
    double ap_sum = 0;
    int counted = 0;
    std::array<int, 3> hits{};
    for (int i = 0; i < q.rows(); ++i) {
        std::vector<std::pair<double, int>> scored;
        for (int j = 0; j < g.rows(); ++j) {
            if (gm.identity[j] == qm.identity[i] && gm.camera[j] == qm.camera[i])
                continue;
            scored.push_back({q.row(i).dot(g.row(j)), j});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](auto& a, auto& b) { return a.first > b.first; });
        int rel = 0;
        double psum = 0;
        int first = -1;
        for (size_t r = 0; r < scored.size(); ++r) {
            if (gm.identity[scored[r].second] == qm.identity[i]) {
                ++rel;
                psum += double(rel) / double(r + 1);
                if (first < 0) first = static_cast<int>(r);
            }
        }
        if (rel == 0) {
            ++out.skipped_queries;
            continue;
        }
        ++counted;
        ap_sum += psum / rel;
        if (first < 1) ++hits[0];
        if (first < 5) ++hits[1];
        if (first < 10) ++hits[2];
    }
    if (counted) {
        out.mAP = ap_sum / counted;
        for (int c = 0; c < 3; ++c) out.cmc[c] = double(hits[c]) / counted;
    }
    return out;
}

Matrix random_unit_rows(int n, int d, Rng& rng) {
    Matrix m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
        m.row(i).normalize();
    }
    return m;
}

}  // namespace

TEST_CASE("single relevant item at rank 1") {
    Matrix q(1, 2);
    q << 1, 0;
    Matrix g(2, 2);
    g << 1, 0, 0, 1;
    RetrievalMeta qm{{5}, {0}};
    RetrievalMeta gm{{5, 9}, {1, 1}};
    auto r = evaluate(q, qm, g, gm);
    CHECK(r.mAP == doctest::Approx(1.0));
    CHECK(r.cmc[0] == doctest::Approx(1.0));
}

TEST_CASE("two relevant at ranks 1 and 3") {
    Matrix q(1, 2);
    q << 1, 0;
    Matrix g(3, 2);
    g << 1, 0, 0, 1, 0.5, std::sqrt(0.75);
    g.row(2).normalize();
    RetrievalMeta qm{{5}, {0}};
    RetrievalMeta gm{{5, 9, 5}, {1, 1, 1}};
    auto r = evaluate(q, qm, g, gm);
    // ranks: g0 (rel), g2 (rel, sim 0.5), g1 -> wait g2 has sim 0.5 > g1 sim 0
    // ranking = [g0, g2, g1]: relevant at 1 and 2 -> AP = 1
    CHECK(r.mAP == doctest::Approx(1.0));
}

TEST_CASE("AP with relevant at ranks 1 and 3 exactly") {
    Matrix q(1, 2);
    q << 1, 0;
    Matrix g(3, 2);
    g << 1, 0, 0.8, 0.6, 0.2, 0.98;
    g.row(2).normalize();
    RetrievalMeta qm{{5}, {0}};
    RetrievalMeta gm{{5, 9, 5}, {1, 1, 1}};
    auto r = evaluate(q, qm, g, gm);
    CHECK(r.mAP == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("same-identity same-camera gallery entries excluded") {
    Matrix q(1, 2);
    q << 1, 0;
    Matrix g(2, 2);
    g << 1, 0, 0, 1;
    RetrievalMeta qm{{5}, {0}};
    RetrievalMeta gm{{5, 5}, {0, 1}};  // first shares the camera -> excluded
    auto r = evaluate(q, qm, g, gm);
    CHECK(r.mAP == doctest::Approx(1.0));  // only g1 remains, relevant, rank 1
}

TEST_CASE("first relevant at rank 6: top-5 misses, top-10 hits") {
    int d = 8;
    Matrix q(1, d);
    q.setZero();
    q(0, 0) = 1;
    Matrix g(10, d);
    g.setZero();
    for (int j = 0; j < 10; ++j) {
        g(j, 0) = 0.9 - 0.05 * j;
        g(j, 1) = std::sqrt(1 - g(j, 0) * g(j, 0));
    }
    RetrievalMeta qm{{1}, {0}};
    RetrievalMeta gm{{2, 2, 2, 2, 2, 1, 2, 2, 2, 2}, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1}};
    auto r = evaluate(q, qm, g, gm);
    CHECK(r.cmc[1] == doctest::Approx(0.0));
    CHECK(r.cmc[2] == doctest::Approx(1.0));
}

TEST_CASE("query with zero valid matches is skipped") {
    Matrix q(1, 2);
    q << 1, 0;
    Matrix g(1, 2);
    g << 0, 1;
    RetrievalMeta qm{{1}, {0}};
    RetrievalMeta gm{{2}, {1}};
    auto r = evaluate(q, qm, g, gm);
    CHECK(r.skipped_queries == 1);
    CHECK(r.mAP == 0.0);
}

TEST_CASE("cmc is non-decreasing and matches the reference scorer") {
    Rng rng(123);
    for (int trial = 0; trial < 30; ++trial) {
        int nq = 3 + rng.uniform_int(8);
        int ng = 10 + rng.uniform_int(40);
        Matrix q = random_unit_rows(nq, 6, rng);
        Matrix g = random_unit_rows(ng, 6, rng);
        RetrievalMeta qm, gm;
        for (int i = 0; i < nq; ++i) {
            qm.identity.push_back(rng.uniform_int(4));
            qm.camera.push_back(rng.uniform_int(3));
        }
        for (int j = 0; j < ng; ++j) {
            gm.identity.push_back(rng.uniform_int(4));
            gm.camera.push_back(rng.uniform_int(3));
        }
        auto a = evaluate(q, qm, g, gm);
        auto b = reference_eval(q, qm, g, gm);
        CHECK(a.mAP == doctest::Approx(b.mAP).epsilon(1e-9));
        for (int c = 0; c < 3; ++c)
            CHECK(a.cmc[c] == doctest::Approx(b.cmc[c]).epsilon(1e-9));
        CHECK(a.cmc[0] <= a.cmc[1] + 1e-12);
        CHECK(a.cmc[1] <= a.cmc[2] + 1e-12);
    }
}

TEST_CASE("gallery permutation invariance") {
    Rng rng(77);
    Matrix q = random_unit_rows(4, 5, rng);
    Matrix g = random_unit_rows(20, 5, rng);
    RetrievalMeta qm, gm;
    for (int i = 0; i < 4; ++i) {
        qm.identity.push_back(i % 3);
        qm.camera.push_back(0);
    }
    for (int j = 0; j < 20; ++j) {
        gm.identity.push_back(j % 3);
        gm.camera.push_back(1 + j % 2);
    }
    auto base = evaluate(q, qm, g, gm);

    std::vector<int> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix g2(20, 5);
    RetrievalMeta gm2;
    for (int j = 0; j < 20; ++j) {
        g2.row(j) = g.row(perm[j]);
        gm2.identity.push_back(gm.identity[perm[j]]);
        gm2.camera.push_back(gm.camera[perm[j]]);
    }
    auto shuffled = evaluate(q, qm, g2, gm2);
    CHECK(base.mAP == doctest::Approx(shuffled.mAP).epsilon(1e-12));
}
