#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dcct/types.hpp"

namespace dcct {

/// Per-sample labels with -1 marking outliers. Non-outlier labels form a
/// contiguous range [0, K).
struct ClusterResult {
    std::vector<int> assignment;
    int num_clusters = 0;
    std::optional<double> dbi;  // empty when K < 2

    int num_outliers() const;
};

/// Density-based clustering on a precomputed distance matrix. Expansion
/// visits points in ascending index order, so the labeling is deterministic.
ClusterResult dbscan(const Matrix& dist, double eps, int min_pts);

/// Lloyd's algorithm with k-means++ seeding on raw embeddings. Empty clusters
/// are reseeded from the farthest point. No outliers.
ClusterResult kmeans(const Matrix& embeddings, int k, std::uint64_t seed);

/// Map-equation community detection on the graph whose edges link pairs with
/// distance below psi, weighted 1 - distance. Isolated nodes become outliers.
ClusterResult infomap(const Matrix& dist, double psi);

/// Davies-Bouldin index on embedding-space (Euclidean) geometry; outliers
/// excluded. Empty when fewer than two clusters remain.
std::optional<double> davies_bouldin(const Matrix& embeddings,
                                     const std::vector<int>& assignment);

/// Two-level map equation value of a partition (used by infomap and exposed
/// for scoring). modules[i] = module of node i, -1 = not in the graph.
double map_equation(const Matrix& adjacency, const std::vector<int>& modules);

/// Training view after dropping outliers: kept sample positions and their
/// relabeled contiguous pseudo labels.
struct PseudoLabels {
    std::vector<int> kept;    // positions into the clustered sample list
    std::vector<int> labels;  // contiguous [0, K)
    int num_clusters = 0;

    bool empty() const { return kept.empty(); }
};

PseudoLabels pseudo_labels(const ClusterResult& result);

}  // namespace dcct
