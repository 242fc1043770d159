#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

namespace churnkit {

struct KMeansResult {
    int k = 0;
    Eigen::MatrixXd centers;           // k x d
    std::vector<int> assignments;      // per point, nearest-center index
    double wcss = 0.0;                 // within-cluster sum of squares
    double mean_silhouette = 0.0;      // filled by select_k_and_cluster
    std::map<int, double> per_k_scores;
};

// Lloyd's algorithm with k-means++ seeding and restarts; the run with the
// lowest WCSS wins. Empty clusters are repaired by stealing the point farthest
// from the center of the largest cluster. Deterministic given the seed.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int n_restarts = 10, int max_iter = 100);

// Mean Silhouette score, (b - a) / max(a, b) per point; singletons score 0,
// and so do points with a = b = 0. Exact up to exact_limit points, seeded
// uniform subsample beyond that.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                  std::uint64_t seed = 0, int exact_limit = 10000);

struct KRange {
    int lo = 2;
    int hi = 6;
};

// Runs kmeans for each candidate k and keeps the k with the largest mean
// Silhouette score, ties toward smaller k.
KMeansResult select_k_and_cluster(const Eigen::MatrixXd& points, KRange k_range,
                                  std::uint64_t seed);

} // namespace churnkit
