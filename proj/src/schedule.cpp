#include "dcct/schedule.hpp"

#include <cmath>

namespace dcct {

std::pair<double, double> params_at(const ScheduleSpec& spec, int epoch) {
    spec.validate();
    if (epoch < 0 || epoch > spec.total_epochs)
        throw std::out_of_range("epoch outside [0, E]");

    const double e = spec.total_epochs;
    const double slope = 2.0 * spec.delta / e;
    double p1, p2;
    if (epoch < e / 2.0) {
        p1 = spec.base + slope * epoch;
        p2 = spec.base - slope * epoch;
    } else {
        p1 = spec.base + 2.0 * spec.delta - slope * epoch;
        p2 = spec.base - 2.0 * spec.delta + slope * epoch;
    }
    if (spec.kind == ScheduleKind::kmeans_k) {
        p1 = std::ceil(p1);
        p2 = std::ceil(p2);
    }
    return {p1, p2};
}

}  // namespace dcct
