#pragma once

#include <Eigen/Dense>

#include <vector>

namespace churnkit {

struct BinaryMetrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;  // 0 when no positive predictions
    double recall = 0.0;     // 0 when no positive labels
};

BinaryMetrics binary_metrics(const std::vector<bool>& truth, const std::vector<double>& scores,
                             double threshold = 0.5);

struct MultiClassMetrics {
    Eigen::MatrixXi confusion;        // truth x predicted
    std::vector<double> precision;    // one-vs-rest, per class
    std::vector<double> recall;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
};

MultiClassMetrics multiclass_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                                     int n_classes);

// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

} // namespace churnkit
