#pragma once

#include "churnkit/errors.hpp"
#include "churnkit/types.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace churnkit {

inline constexpr int kFeatureParams = 4;  // mu, lag1, q, phi

// Mean daily count; the activity-volume descriptor.
template <typename Derived>
double mean_daily(const Eigen::MatrixBase<Derived>& row) {
    EIGEN_STATIC_ASSERT_VECTOR_ONLY(Derived);
    if (row.size() < 1) throw ValidationError("mean_daily needs at least 1 observation");
    return row.mean();
}

// Lag-1 sample autocorrelation; the burstiness descriptor. Zero-variance
// series return 0 by convention.
template <typename Derived>
double lag1_autocorr(const Eigen::MatrixBase<Derived>& row) {
    EIGEN_STATIC_ASSERT_VECTOR_ONLY(Derived);
    const Eigen::Index n = row.size();
    if (n < 2) throw ValidationError("lag(1) needs at least 2 observations");
    const double m = row.mean();
    const double num =
        ((row.segment(1, n - 1).array() - m) * (row.segment(0, n - 1).array() - m)).sum();
    const double den = (row.array() - m).square().sum();
    return den == 0.0 ? 0.0 : num / den;
}

struct SigmoidFit {
    double q = 0.0;        // steepness
    double phi = 0.0;      // inflection day
    double residual = 0.0; // sum of squared errors at the optimum
    bool inactive = false; // all-zero row, parameters are a convention
};

// Fits y(t) = 1 / (1 + exp(-q (t - phi))) to the cumulative counts normalized
// by their total, via a signed log-spaced grid over q and a linear sweep over
// phi, refined with damped Gauss-Newton. The refined residual never exceeds
// the best probed grid point.
SigmoidFit fit_sigmoid(const Eigen::Ref<const Eigen::VectorXd>& row);

// Per-user feature matrix: one (mu, lag1, q, phi) row per activity dimension.
struct FeatureMatrix {
    std::string user_id;
    Eigen::MatrixXd params;        // dims x 4
    std::vector<bool> inactive;    // sigmoid fit flag per dimension
    std::vector<double> residual;  // sigmoid fit residual per dimension

    int dims() const { return static_cast<int>(params.rows()); }
};

FeatureMatrix extract_features(const ActivitySeries& series);
std::vector<FeatureMatrix> extract_features(const std::vector<ActivitySeries>& series);

// CSV schema: user_id,dim,mu,lag1,q,phi,inactive_flag (dim is the dimension
// name; rows grouped by user in dimension order).
void save_features_csv(const std::string& path, const std::vector<FeatureMatrix>& features,
                       const std::vector<std::string>& dimension_names);
std::vector<FeatureMatrix> load_features_csv(const std::string& path,
                                             const std::vector<std::string>& dimension_names);

} // namespace churnkit
