#pragma once

#include <array>
#include <vector>

#include "dcct/types.hpp"

namespace dcct {

struct RetrievalResult {
    double mAP = 0.0;
    std::array<double, 3> cmc{};  // top-1, top-5, top-10
    int skipped_queries = 0;      // queries with no valid gallery match
};

struct RetrievalMeta {
    std::vector<int> identity;
    std::vector<int> camera;
};

/// Rank the gallery by descending cosine similarity per query; gallery entries
/// sharing both identity and camera with the query are excluded. Similarity
/// ties break by ascending gallery position.
RetrievalResult evaluate(const Matrix& query_embeddings,
                         const RetrievalMeta& query_meta,
                         const Matrix& gallery_embeddings,
                         const RetrievalMeta& gallery_meta);

}  // namespace dcct
