#include "churnkit/metrics.hpp"

#include "churnkit/errors.hpp"

#include <map>

namespace churnkit {

BinaryMetrics binary_metrics(const std::vector<bool>& truth, const std::vector<double>& scores,
                             double threshold) {
    if (truth.size() != scores.size()) {
        throw ValidationError("binary_metrics: size mismatch");
    }
    BinaryMetrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && truth[i]) ++m.tp;
        else if (pred && !truth[i]) ++m.fp;
        else if (!pred && truth[i]) ++m.fn;
        else ++m.tn;
    }
    const long n = m.tp + m.fp + m.tn + m.fn;
    m.accuracy = n == 0 ? 0.0 : static_cast<double>(m.tp + m.tn) / n;
    m.precision = (m.tp + m.fp) == 0 ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fp);
    m.recall = (m.tp + m.fn) == 0 ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fn);
    return m;
}

MultiClassMetrics multiclass_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                                     int n_classes) {
    if (truth.size() != pred.size()) {
        throw ValidationError("multiclass_metrics: size mismatch");
    }
    MultiClassMetrics m;
    m.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n_classes || pred[i] < 0 || pred[i] >= n_classes) {
            throw ValidationError("multiclass_metrics: label out of range");
        }
        m.confusion(truth[i], pred[i])++;
    }
    m.precision.resize(n_classes);
    m.recall.resize(n_classes);
    long correct = 0;
    for (int c = 0; c < n_classes; ++c) {
        correct += m.confusion(c, c);
        const long col = m.confusion.col(c).sum();
        const long row = m.confusion.row(c).sum();
        m.precision[c] = col == 0 ? 0.0 : static_cast<double>(m.confusion(c, c)) / col;
        m.recall[c] = row == 0 ? 0.0 : static_cast<double>(m.confusion(c, c)) / row;
        m.macro_precision += m.precision[c];
        m.macro_recall += m.recall[c];
    }
    m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / truth.size();
    m.macro_precision /= n_classes;
    m.macro_recall /= n_classes;
    return m;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw ValidationError("adjusted_rand_index: size mismatch or empty input");
    }
    std::map<std::pair<int, int>, long> cells;
    std::map<int, long> row_sums, col_sums;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cells[{a[i], b[i]}]++;
        row_sums[a[i]]++;
        col_sums[b[i]]++;
    }
    auto choose2 = [](long x) { return 0.5 * x * (x - 1); };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, v] : cells) sum_cells += choose2(v);
    for (const auto& [key, v] : row_sums) sum_rows += choose2(v);
    for (const auto& [key, v] : col_sums) sum_cols += choose2(v);
    const double total = choose2(static_cast<long>(a.size()));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both labelings trivial
    return (sum_cells - expected) / (max_index - expected);
}

} // namespace churnkit
