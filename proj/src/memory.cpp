#include "dcct/memory.hpp"

#include <cassert>
#include <stdexcept>

#include "dcct/clustering.hpp"

namespace dcct {

MemoryBank init_from_clusters(const EmbeddingBatch& embeddings,
                              const ClusterResult& result, double beta,
                              bool normalize) {
    const int K = result.num_clusters;
    if (K < 1) throw std::invalid_argument("need at least one cluster");
    if (static_cast<int>(result.assignment.size()) != embeddings.size())
        throw std::invalid_argument("embeddings/result misaligned");

    MemoryBank bank;
    bank.beta = beta;
    bank.normalize = normalize;
    bank.reps = Matrix::Zero(K, embeddings.dim());
    std::vector<int> counts(K, 0);
    for (int i = 0; i < embeddings.size(); ++i) {
        int k = result.assignment[i];
        if (k < 0) continue;
        bank.reps.row(k) += embeddings.rows.row(i);
        ++counts[k];
    }
    for (int k = 0; k < K; ++k) {
        assert(counts[k] > 0);
        bank.reps.row(k) /= counts[k];
        if (normalize) {
            double n = bank.reps.row(k).norm();
            if (n > 1e-12) bank.reps.row(k) /= n;
        }
    }
    return bank;
}

void momentum_update(MemoryBank& bank, int k, const Vector& q) {
    if (k < 0 || k >= bank.size())
        throw std::out_of_range("cluster id out of range");
    bank.reps.row(k) =
        bank.beta * bank.reps.row(k) + (1.0 - bank.beta) * q.transpose();
    if (bank.normalize) {
        double n = bank.reps.row(k).norm();
        if (n > 1e-12) bank.reps.row(k) /= n;
    }
}

}  // namespace dcct
