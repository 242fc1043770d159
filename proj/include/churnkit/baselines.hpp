#pragma once

#include "churnkit/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace churnkit {

struct Split {
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    std::uint64_t seed = 0;
    double train_ratio = 0.8;
};

// Seeded shuffles; every compared model consumes the same splits.
std::vector<Split> make_splits(int n, double train_ratio, int n_repeats, std::uint64_t seed);

struct LogRegModel {
    Eigen::VectorXd w;
    double b = 0.0;
    double l2 = 0.0;
    Eigen::RowVectorXd feat_mean;   // training-set standardization
    Eigen::RowVectorXd feat_scale;
};

// Flattened raw counts of the first days_window days, one row per user.
Eigen::MatrixXd flatten_window(const std::vector<const ActivitySeries*>& users, int days_window);

// Full-batch gradient descent on L2-regularized log loss (bias unregularized),
// with a Lipschitz step size; stops at grad norm < tol or max_iter.
LogRegModel logreg_train(const Eigen::MatrixXd& x_raw, const std::vector<bool>& y, double l2,
                         int max_iter = 5000, double tol = 1e-6,
                         const Eigen::VectorXd* w0 = nullptr, double b0 = 0.0);

Eigen::VectorXd logreg_predict(const LogRegModel& model, const Eigen::MatrixXd& x_raw);

} // namespace churnkit
