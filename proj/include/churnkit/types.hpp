#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace churnkit {

inline constexpr int kBehaviorDims = 10;
inline constexpr int kNetworkDims = 2;
inline constexpr int kDefaultDims = kBehaviorDims + kNetworkDims;
inline constexpr int kDefaultDays = 14;

// Ten in-app activity dimensions followed by daily ego-network size/density.
const std::vector<std::string>& default_dimension_names();

// One user's daily counts: dims x days matrix, day 1 = registration day.
struct ActivitySeries {
    std::string user_id;
    Eigen::MatrixXd values;
    std::vector<std::string> dimension_names;

    int dims() const { return static_cast<int>(values.rows()); }
    int days() const { return static_cast<int>(values.cols()); }

    // Entries must be finite and >= 0; a dimension named net_density must lie
    // in [0, 1]. Throws ValidationError.
    void validate() const;
};

struct ChurnLabel {
    std::string user_id;
    bool churned = false;
    int window_start_day = 8;
    int window_end_day = kDefaultDays;
};

// Churned = zero activity on every behavioral dimension over the window
// (network size/density are state, not actions, and are excluded).
// Days are 1-based and inclusive.
ChurnLabel compute_churn_label(const ActivitySeries& series, int window_start_day = 8,
                               int window_end_day = kDefaultDays);

// Indices of the behavioral (non-network) dimensions of a series.
std::vector<int> behavioral_dims(const ActivitySeries& series);

} // namespace churnkit
