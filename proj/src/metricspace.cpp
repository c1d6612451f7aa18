#include "dcct/metricspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dcct {

Matrix cosine_distance_matrix(const EmbeddingBatch& embeddings) {
    const Matrix& e = embeddings.rows;
    for (int i = 0; i < e.rows(); ++i) {
        if (std::abs(e.row(i).norm() - 1.0) > 1e-6)
            throw std::invalid_argument("row " + std::to_string(i) +
                                        " is not unit norm");
    }
    Matrix d = Matrix::Ones(e.rows(), e.rows()) - e * e.transpose();
    d = 0.5 * (d + d.transpose());
    d.diagonal().setZero();
    return d.cwiseMax(0.0);
}

namespace {

// Sparse row of soft memberships, sorted by column.
using SparseRow = std::vector<std::pair<int, double>>;

// Ranked neighbor list of i (self first); ties broken by ascending index.
std::vector<int> rank_row(const Matrix& dist, int i) {
    std::vector<int> order(dist.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dist(i, a) < dist(i, b);
    });
    return order;
}

// k-reciprocal set: j such that j is in i's top-(k+1) and i is in j's.
std::vector<int> k_reciprocal_set(const std::vector<std::vector<int>>& ranks,
                                  int i, int k) {
    std::vector<int> out;
    for (int r = 0; r <= k && r < static_cast<int>(ranks[i].size()); ++r) {
        int j = ranks[i][r];
        auto& back = ranks[j];
        int limit = std::min(k + 1, static_cast<int>(back.size()));
        if (std::find(back.begin(), back.begin() + limit, i) !=
            back.begin() + limit)
            out.push_back(j);
    }
    return out;
}

}  // namespace

Matrix k_reciprocal_jaccard(const EmbeddingBatch& embeddings, int k1, int k2,
                            double blend_weight) {
    const int n = embeddings.size();
    if (k1 >= n) throw std::invalid_argument("k1 must be < n");
    if (k2 > k1 || k2 < 1) throw std::invalid_argument("need 1 <= k2 <= k1");

    Matrix dist = cosine_distance_matrix(embeddings);
    std::vector<std::vector<int>> ranks(n);
    for (int i = 0; i < n; ++i) ranks[i] = rank_row(dist, i);

    std::vector<std::vector<int>> reciprocal(n);
    for (int i = 0; i < n; ++i) reciprocal[i] = k_reciprocal_set(ranks, i, k1);

    int k_half = static_cast<int>(std::round(k1 / 2.0));
    std::vector<SparseRow> memberships(n);
    for (int i = 0; i < n; ++i) {
        // Expand with half-size reciprocal sets of each candidate when they
        // overlap the base set by more than 2/3.
        std::vector<int> expanded = reciprocal[i];
        for (int cand : reciprocal[i]) {
            std::vector<int> half = k_reciprocal_set(ranks, cand, k_half);
            int overlap = 0;
            for (int h : half)
                if (std::find(reciprocal[i].begin(), reciprocal[i].end(), h) !=
                    reciprocal[i].end())
                    ++overlap;
            if (3 * overlap > 2 * static_cast<int>(half.size()))
                expanded.insert(expanded.end(), half.begin(), half.end());
        }
        std::sort(expanded.begin(), expanded.end());
        expanded.erase(std::unique(expanded.begin(), expanded.end()),
                       expanded.end());

        SparseRow& row = memberships[i];
        double total = 0.0;
        for (int j : expanded) {
            double w = std::exp(-dist(i, j));
            row.emplace_back(j, w);
            total += w;
        }
        for (auto& [_, w] : row) w /= total;
    }

    // Local query expansion: average the membership rows of the k2 nearest
    // neighbors (self included at rank 0).
    std::vector<SparseRow> expanded_rows(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> acc;
        std::vector<int> touched;
        acc.assign(n, 0.0);
        for (int r = 0; r < k2; ++r) {
            int j = ranks[i][r];
            for (const auto& [col, w] : memberships[j]) {
                if (acc[col] == 0.0) touched.push_back(col);
                acc[col] += w / k2;
            }
        }
        std::sort(touched.begin(), touched.end());
        for (int col : touched) expanded_rows[i].emplace_back(col, acc[col]);
    }

    // Inverted index over membership columns.
    std::vector<std::vector<std::pair<int, double>>> by_column(n);
    for (int i = 0; i < n; ++i)
        for (const auto& [col, w] : expanded_rows[i])
            by_column[col].emplace_back(i, w);

    // Rows sum to 1, so sum(max) = 2 - sum(min).
    Matrix jaccard = Matrix::Ones(n, n);
    std::vector<double> min_sum(n);
    for (int i = 0; i < n; ++i) {
        std::fill(min_sum.begin(), min_sum.end(), 0.0);
        for (const auto& [col, wi] : expanded_rows[i])
            for (const auto& [j, wj] : by_column[col])
                min_sum[j] += std::min(wi, wj);
        for (int j = 0; j < n; ++j)
            if (min_sum[j] > 0.0)
                jaccard(i, j) = 1.0 - min_sum[j] / (2.0 - min_sum[j]);
    }

    if (blend_weight != 0.0)
        jaccard = (1.0 - blend_weight) * jaccard + blend_weight * dist;
    jaccard = 0.5 * (jaccard + jaccard.transpose());
    jaccard.diagonal().setZero();
    return jaccard.cwiseMax(0.0);
}

}  // namespace dcct
