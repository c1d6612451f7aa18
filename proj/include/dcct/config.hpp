#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dcct/datagen.hpp"
#include "dcct/schedule.hpp"

namespace dcct {

enum class ClustererKind { dbscan, kmeans, infomap };

/// Every knob of a training run. Defaults follow the reference recipe scaled
/// to desk size; epochs/iterations/seed must come from the config file.
struct RunConfig {
    DatasetSpec dataset;

    int d_hidden = 64;
    int d_out = 12;

    double tau = 0.05;
    double alpha = 0.99;
    double beta = 0.1;
    double gamma = 1.3;

    double base = 0.5;    // eps / psi / k, by clusterer
    double delta = 0.35;  // its schedule half-range

    int epochs = 25;
    int iterations = 50;
    int batch_p = 8;
    int batch_k = 4;

    double lr = 0.05;
    double weight_decay = 5e-4;
    double lr_decay_factor = 0.1;

    ClustererKind clusterer = ClustererKind::dbscan;
    int min_pts = 4;
    int k1 = 30;
    int k2 = 6;
    double jaccard_blend = 0.0;

    double query_fraction = 0.25;

    std::uint64_t seed = 0;
    bool use_dcdp = true;
    bool use_csm = true;
    bool normalize_memory = true;

    void validate() const;
    ScheduleSpec schedule() const;

    /// Stepped learning rate: lr_decay_factor applied at 40% and 80% of the
    /// epoch count (the every-20-of-50 recipe, scaled proportionally).
    double lr_at(int epoch) const;
};

/// Flat key=value parse of a minimal TOML subset: comments, [section]
/// headers (flattened to section.key), strings, bools, numbers.
std::map<std::string, std::string> load_toml(const std::string& path);

/// Apply repeatable KEY=VALUE overrides on top of a parsed file.
void apply_overrides(std::map<std::string, std::string>& kv,
                     const std::vector<std::string>& overrides);

/// Build a RunConfig; unknown keys and missing required keys (epochs,
/// iterations, seed) are configuration errors naming the key.
RunConfig config_from_map(const std::map<std::string, std::string>& kv);

std::map<std::string, std::string> config_to_map(const RunConfig& cfg);

}  // namespace dcct
