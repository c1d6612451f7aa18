#include "dcct/csm.hpp"

#include <stdexcept>

namespace dcct {

CsmResult mine(const Matrix& batch_embeddings,
               const std::vector<int>& pseudo_labels, const MemoryBank& bank,
               const std::vector<bool>* label_correct) {
    if (bank.size() == 0) throw std::invalid_argument("empty memory bank");
    const int n = static_cast<int>(batch_embeddings.rows());
    if (static_cast<int>(pseudo_labels.size()) != n)
        throw std::invalid_argument("labels/batch misaligned");

    Matrix sims = batch_embeddings * bank.reps.transpose();
    CsmResult res;
    for (int i = 0; i < n; ++i) {
        if (pseudo_labels[i] < 0 || pseudo_labels[i] >= bank.size())
            throw std::out_of_range("pseudo label out of range");
        int best = 0;
        for (int k = 1; k < bank.size(); ++k)
            if (sims(i, k) > sims(i, best)) best = k;  // ties keep smallest id
        if (best == pseudo_labels[i]) {
            res.kept.push_back(i);
            ++res.report.consistent_count;
        } else {
            ++res.report.inconsistent_count;
            if (label_correct) {
                if ((*label_correct)[i])
                    ++res.report.inconsistent_correct;
                else
                    ++res.report.inconsistent_incorrect;
            }
        }
    }
    return res;
}

bool gate(const std::optional<double>& dbi1, const std::optional<double>& dbi2,
          double gamma) {
    if (gamma <= 0) throw std::invalid_argument("gamma must be > 0");
    if (!dbi1.has_value() || !dbi2.has_value()) return false;
    return std::min(*dbi1, *dbi2) < gamma;
}

}  // namespace dcct
