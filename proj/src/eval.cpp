#include "dcct/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dcct {

RetrievalResult evaluate(const Matrix& query_embeddings,
                         const RetrievalMeta& query_meta,
                         const Matrix& gallery_embeddings,
                         const RetrievalMeta& gallery_meta) {
    const int nq = static_cast<int>(query_embeddings.rows());
    const int ng = static_cast<int>(gallery_embeddings.rows());
    if (static_cast<int>(query_meta.identity.size()) != nq ||
        static_cast<int>(gallery_meta.identity.size()) != ng)
        throw std::invalid_argument("metadata misaligned with embeddings");

    Matrix sims = query_embeddings * gallery_embeddings.transpose();

    RetrievalResult out;
    double ap_sum = 0.0;
    std::array<int, 3> cmc_hits{};
    const std::array<int, 3> cmc_ks{1, 5, 10};
    int counted = 0;

    std::vector<int> order(ng);
    for (int q = 0; q < nq; ++q) {
        order.clear();
        for (int g = 0; g < ng; ++g) {
            bool same_id = gallery_meta.identity[g] == query_meta.identity[q];
            bool same_cam = gallery_meta.camera[g] == query_meta.camera[q];
            if (same_id && same_cam) continue;  // standard re-ID exclusion
            order.push_back(g);
        }
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return sims(q, a) > sims(q, b);
        });

        int relevant = 0;
        double precision_sum = 0.0;
        int first_hit = -1;
        for (size_t r = 0; r < order.size(); ++r) {
            if (gallery_meta.identity[order[r]] == query_meta.identity[q]) {
                ++relevant;
                precision_sum += static_cast<double>(relevant) / (r + 1);
                if (first_hit < 0) first_hit = static_cast<int>(r);
            }
        }
        if (relevant == 0) {
            ++out.skipped_queries;
            continue;
        }
        ++counted;
        ap_sum += precision_sum / relevant;
        for (int c = 0; c < 3; ++c)
            if (first_hit < cmc_ks[c]) ++cmc_hits[c];
    }

    if (counted > 0) {
        out.mAP = ap_sum / counted;
        for (int c = 0; c < 3; ++c)
            out.cmc[c] = static_cast<double>(cmc_hits[c]) / counted;
    }
    return out;
}

}  // namespace dcct
