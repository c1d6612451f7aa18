#pragma once

#include "dcct/types.hpp"

namespace dcct {

struct ClusterResult;

/// Cluster-level memory bank: one unit-norm representation per cluster id.
struct MemoryBank {
    Matrix reps;  // K x d_out, unit-norm rows
    double beta = 0.1;
    bool normalize = true;

    int size() const { return static_cast<int>(reps.rows()); }
};

/// Representations start as the L2-renormalized mean of each cluster's member
/// embeddings; outliers (label -1) are skipped.
MemoryBank init_from_clusters(const EmbeddingBatch& embeddings,
                              const ClusterResult& result, double beta,
                              bool normalize = true);

/// c_k <- beta*c_k + (1-beta)*q, then renormalized when bank.normalize is set.
void momentum_update(MemoryBank& bank, int k, const Vector& q);

}  // namespace dcct
