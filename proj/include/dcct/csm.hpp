#pragma once

#include <optional>
#include <vector>

#include "dcct/memory.hpp"
#include "dcct/types.hpp"

namespace dcct {

/// Per-batch consistency diagnostics. The correct/incorrect split of the
/// inconsistent samples is computed against hidden ground truth and never
/// feeds back into training.
struct CsmReport {
    int consistent_count = 0;
    int inconsistent_count = 0;
    int inconsistent_correct = 0;
    int inconsistent_incorrect = 0;
};

struct CsmResult {
    std::vector<int> kept;  // positions within the batch
    CsmReport report;
};

/// Keep the batch positions whose nearest memory representation (by cosine)
/// agrees with their pseudo label. Argmax ties break toward the smallest
/// cluster id. `label_correct[i]`, when provided, says whether sample i's
/// pseudo label matches ground truth (diagnostics only).
CsmResult mine(const Matrix& batch_embeddings,
               const std::vector<int>& pseudo_labels, const MemoryBank& bank,
               const std::vector<bool>* label_correct = nullptr);

/// Mining is enabled only when both clusterings produced a defined DBI and
/// the better one beats the threshold.
bool gate(const std::optional<double>& dbi1, const std::optional<double>& dbi2,
          double gamma);

}  // namespace dcct
