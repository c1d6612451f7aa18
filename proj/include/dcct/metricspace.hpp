#pragma once

#include "dcct/types.hpp"

namespace dcct {

/// d(i,j) = 1 - e_i . e_j on unit-norm rows. Symmetric, zero diagonal.
Matrix cosine_distance_matrix(const EmbeddingBatch& embeddings);

/// Jaccard distance over k-reciprocal encodings (the re-ranking construction:
/// k-reciprocal neighbor sets with half-size expansion, Gaussian-weighted soft
/// membership, local query expansion over k2 neighbors). blend_weight mixes
/// the original cosine distance back in; 0 means pure Jaccard.
Matrix k_reciprocal_jaccard(const EmbeddingBatch& embeddings, int k1, int k2,
                            double blend_weight = 0.0);

}  // namespace dcct
