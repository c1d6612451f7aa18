#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcct/types.hpp"

namespace dcct {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ground-truth identity: a unit-norm center on the sphere.
struct Identity {
    int id = 0;
    Vector center;
};

/// One data point. `identity` is hidden from training; only the harness and
/// the evaluator may look at it.
struct Sample {
    int index = 0;
    Vector input;
    int identity = 0;  // evaluation only
    int camera = 0;
};

struct DatasetSpec {
    int n_identities = 64;
    int samples_per_identity = 16;
    int d_in = 32;
    int n_cameras = 4;
    double intra_noise_sigma = 0.08;
    double confusable_fraction = 0.2;
    double confusable_gap = 0.25;
    double camera_distortion_scale = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<Identity> identities;
};

/// Deterministic synthetic dataset: identity centers on the unit sphere with a
/// confusable_fraction of identity pairs pulled to within confusable_gap of
/// each other, per-camera fixed linear distortion, then isotropic Gaussian
/// noise.
Dataset generate(const DatasetSpec& spec);

struct QueryGallerySplit {
    std::vector<int> query_indices;    // indices into the sample list
    std::vector<int> gallery_indices;
    int skipped_identities = 0;  // identities that could not yield a query
};

/// Disjoint query/gallery split. A sample is eligible as a query only if the
/// rest of its identity has at least one sample on a different camera.
QueryGallerySplit split_query_gallery(const std::vector<Sample>& samples,
                                      double query_fraction,
                                      std::uint64_t seed);

/// Flat CSV dump: index, identity, camera, then d_in feature columns.
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

}  // namespace dcct
