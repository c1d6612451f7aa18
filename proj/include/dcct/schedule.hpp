#pragma once

#include <stdexcept>
#include <utility>

namespace dcct {

enum class ScheduleKind { dbscan_eps, infomap_psi, kmeans_k };

/// Mirrored triangular schedules around `base`: the first parameter rises to
/// base+delta at mid-training and returns; the second mirrors it below base.
struct ScheduleSpec {
    double base = 0.5;
    double delta = 0.35;
    int total_epochs = 50;
    ScheduleKind kind = ScheduleKind::dbscan_eps;

    void validate() const {
        if (delta < 0) throw std::invalid_argument("delta must be >= 0");
        if (total_epochs < 2) throw std::invalid_argument("total_epochs must be >= 2");
        if (kind == ScheduleKind::kmeans_k) {
            if (base - delta < 1)
                throw std::invalid_argument("base - delta must be >= 1 for k-means");
        } else if (base - delta <= 0) {
            throw std::invalid_argument("base - delta must be > 0");
        }
    }
};

/// Parameter pair at epoch i. For the k-means kind both values are rounded up
/// to the nearest integer.
std::pair<double, double> params_at(const ScheduleSpec& spec, int epoch);

}  // namespace dcct
