#ifndef BNMOE_CLUSTERING_HPP
#define BNMOE_CLUSTERING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bnmoe/common.hpp"

namespace bnmoe {

struct ClusterModel {
    std::size_t k = 0;
    MatD centroids;                    // [k x d]
    std::vector<std::size_t> assignments;  // [n], nearest centroid, ties -> lowest index
    double inertia = 0.0;              // sum of squared distances
    std::uint64_t seed = 0;
};

struct KSelection {
    enum class Mode { fixed, dynamic };
    Mode mode = Mode::dynamic;
    std::size_t k_fixed = 6;
    std::size_t k_min = 2;
    std::size_t k_max = 10;
};

/// Seeded k-means++ starting centroids.
MatD kmeans_pp_init(const MatD& S, std::size_t k, std::uint64_t seed);

/// Lloyd's iterations from k-means++ init until the assignment fixpoint or
/// 300 iterations. An emptied cluster is reseeded to the point farthest from
/// its assigned centroid.
ClusterModel kmeans(const MatD& S, std::size_t k, std::uint64_t seed);

/// Lloyd's iterations from explicit starting centroids (same fixpoint rule).
ClusterModel lloyd_from(const MatD& S, const MatD& init_centroids, std::uint64_t seed);

/// X-means: grow k from k_min by accepting BIC-improving 2-splits of
/// individual clusters (spherical-Gaussian BIC), capped at k_max, then
/// refine globally at the resulting k.
ClusterModel xmeans(const MatD& S, std::size_t k_min, std::size_t k_max, std::uint64_t seed);

/// Index of the nearest centroid; ties break to the lowest index.
std::size_t assign(const ClusterModel& model, const std::vector<double>& x);

std::string cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const std::string& text);

}  // namespace bnmoe

#endif
