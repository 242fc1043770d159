#include "churnkit/kmeans.hpp"

#include "churnkit/errors.hpp"
#include "churnkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace churnkit {

namespace {

int nearest_center(const Eigen::MatrixXd& centers, const Eigen::RowVectorXd& p, double* dist2) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < centers.rows(); ++j) {
        const double d = (p - centers.row(j)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    if (dist2) *dist2 = best_d;
    return best;
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const int n = static_cast<int>(points.rows());
    Eigen::MatrixXd centers(k, points.cols());
    centers.row(0) = points.row(static_cast<int>(rng.uniform_int(n)));

    Eigen::VectorXd dist2(n);
    for (int i = 0; i < n; ++i) {
        dist2[i] = (points.row(i) - centers.row(0)).squaredNorm();
    }
    for (int j = 1; j < k; ++j) {
        const double total = dist2.sum();
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.uniform_int(n));
        } else {
            double u = rng.uniform() * total;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                u -= dist2[i];
                if (u <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(j) = points.row(pick);
        for (int i = 0; i < n; ++i) {
            dist2[i] = std::min(dist2[i], (points.row(i) - centers.row(j)).squaredNorm());
        }
    }
    return centers;
}

struct LloydRun {
    Eigen::MatrixXd centers;
    std::vector<int> assignments;
    double wcss = 0.0;
};

LloydRun lloyd(const Eigen::MatrixXd& points, int k, Rng rng, int max_iter) {
    const int n = static_cast<int>(points.rows());
    LloydRun run;
    run.centers = kmeanspp_seed(points, k, rng);
    run.assignments.assign(n, -1);

    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        std::vector<int> count(k, 0);
        for (int i = 0; i < n; ++i) {
            const int j = nearest_center(run.centers, points.row(i), nullptr);
            if (j != run.assignments[i]) {
                run.assignments[i] = j;
                changed = true;
            }
            count[j]++;
        }

        // Empty-cluster repair: hand the point farthest from the largest
        // cluster's center over to the empty cluster.
        for (int c = 0; c < k; ++c) {
            while (count[c] == 0) {
                const int largest = static_cast<int>(
                    std::max_element(count.begin(), count.end()) - count.begin());
                if (count[largest] <= 1) break;
                int far_i = -1;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    if (run.assignments[i] != largest) continue;
                    const double d = (points.row(i) - run.centers.row(largest)).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                run.assignments[far_i] = c;
                count[largest]--;
                count[c]++;
                changed = true;
            }
        }

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        for (int i = 0; i < n; ++i) sums.row(run.assignments[i]) += points.row(i);
        for (int c = 0; c < k; ++c) {
            if (count[c] > 0) run.centers.row(c) = sums.row(c) / count[c];
        }
        if (!changed) break;
    }

    run.wcss = 0.0;
    for (int i = 0; i < n; ++i) {
        run.wcss += (points.row(i) - run.centers.row(run.assignments[i])).squaredNorm();
    }
    return run;
}

} // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int n_restarts,
                    int max_iter) {
    const int n = static_cast<int>(points.rows());
    if (k < 1) throw ValidationError("kmeans needs k >= 1");
    if (n < k) {
        throw ValidationError("kmeans needs at least k points (n=" + std::to_string(n) +
                              ", k=" + std::to_string(k) + ")");
    }
    if (points.cols() < 1) throw ValidationError("kmeans needs at least 1 column");

    LloydRun best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_restarts; ++r) {
        LloydRun run = lloyd(points, k, Rng(mix_seed(seed, static_cast<std::uint64_t>(r))),
                             max_iter);
        if (run.wcss < best.wcss) best = std::move(run);
    }

    KMeansResult result;
    result.k = k;
    result.centers = std::move(best.centers);
    result.assignments = std::move(best.assignments);
    result.wcss = best.wcss;
    return result;
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                  std::uint64_t seed, int exact_limit) {
    const int n = static_cast<int>(points.rows());
    if (static_cast<int>(assignments.size()) != n) {
        throw ValidationError("silhouette: assignments/points size mismatch");
    }

    if (n > exact_limit) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(mix_seed(seed, 0x5174));
        rng.shuffle(idx);
        idx.resize(exact_limit);
        Eigen::MatrixXd sub(exact_limit, points.cols());
        std::vector<int> sub_assign(exact_limit);
        for (int i = 0; i < exact_limit; ++i) {
            sub.row(i) = points.row(idx[i]);
            sub_assign[i] = assignments[idx[i]];
        }
        return silhouette(sub, sub_assign, seed, exact_limit);
    }

    // Compact cluster ids.
    std::map<int, int> remap;
    for (int a : assignments) remap.emplace(a, 0);
    if (remap.size() < 2) {
        throw ValidationError("silhouette undefined for fewer than 2 clusters");
    }
    int next = 0;
    for (auto& [label, compact] : remap) compact = next++;
    const int k = next;

    std::vector<int> cluster(n);
    std::vector<int> size(k, 0);
    for (int i = 0; i < n; ++i) {
        cluster[i] = remap[assignments[i]];
        size[cluster[i]]++;
    }

    double total = 0.0;
    std::vector<double> sum_d(k);
    for (int i = 0; i < n; ++i) {
        std::fill(sum_d.begin(), sum_d.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            sum_d[cluster[j]] += (points.row(i) - points.row(j)).norm();
        }
        const int ci = cluster[i];
        if (size[ci] <= 1) continue;  // singleton scores 0
        const double a = sum_d[ci] / (size[ci] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == ci || size[c] == 0) continue;
            b = std::min(b, sum_d[c] / size[c]);
        }
        const double denom = std::max(a, b);
        total += denom == 0.0 ? 0.0 : (b - a) / denom;
    }
    return total / n;
}

KMeansResult select_k_and_cluster(const Eigen::MatrixXd& points, KRange k_range,
                                  std::uint64_t seed) {
    if (k_range.lo < 2 || k_range.hi < k_range.lo) {
        throw ValidationError("select_k_and_cluster needs 2 <= k_lo <= k_hi");
    }
    const int n = static_cast<int>(points.rows());
    KMeansResult best;
    std::map<int, double> scores;
    bool found = false;
    for (int k = k_range.lo; k <= std::min(k_range.hi, n); ++k) {
        KMeansResult run = kmeans(points, k, mix_seed(seed, static_cast<std::uint64_t>(k)));
        const double score = silhouette(points, run.assignments, seed);
        scores[k] = score;
        run.mean_silhouette = score;
        if (!found || score > best.mean_silhouette) {
            best = std::move(run);
            found = true;
        }
    }
    if (!found) {
        throw ValidationError("select_k_and_cluster: no feasible k in range for n=" +
                              std::to_string(n));
    }
    best.per_k_scores = std::move(scores);
    return best;
}

} // namespace churnkit
