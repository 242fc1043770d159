#include "churnkit/types.hpp"

#include "churnkit/errors.hpp"

#include <cmath>

namespace churnkit {

const std::vector<std::string>& default_dimension_names() {
    static const std::vector<std::string> names = {
        "chat_received", "chat_sent",   "snap_received", "snap_sent",
        "story_viewed",  "discover_viewed", "lens_posted", "lens_sent",
        "lens_saved",    "lens_swiped", "net_size",      "net_density"};
    return names;
}

void ActivitySeries::validate() const {
    if (values.rows() == 0 || values.cols() < 1) {
        throw ValidationError("activity series '" + user_id + "' is empty");
    }
    if (!dimension_names.empty() &&
        static_cast<int>(dimension_names.size()) != dims()) {
        throw ValidationError("activity series '" + user_id +
                              "': dimension_names does not match row count");
    }
    for (int r = 0; r < dims(); ++r) {
        const bool is_density = !dimension_names.empty() && dimension_names[r] == "net_density";
        for (int c = 0; c < days(); ++c) {
            const double v = values(r, c);
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError("activity series '" + user_id + "' has invalid value at dim " +
                                      std::to_string(r) + ", day " + std::to_string(c + 1));
            }
            if (is_density && v > 1.0) {
                throw ValidationError("activity series '" + user_id + "' has net_density > 1 at day " +
                                      std::to_string(c + 1));
            }
        }
    }
}

std::vector<int> behavioral_dims(const ActivitySeries& series) {
    std::vector<int> idx;
    for (int r = 0; r < series.dims(); ++r) {
        if (r < static_cast<int>(series.dimension_names.size())) {
            const std::string& name = series.dimension_names[r];
            if (name == "net_size" || name == "net_density") continue;
        }
        idx.push_back(r);
    }
    return idx;
}

ChurnLabel compute_churn_label(const ActivitySeries& series, int window_start_day,
                               int window_end_day) {
    if (window_start_day < 1 || window_end_day < window_start_day ||
        window_end_day > series.days()) {
        throw ValidationError("churn window [" + std::to_string(window_start_day) + ", " +
                              std::to_string(window_end_day) + "] outside series of length " +
                              std::to_string(series.days()));
    }
    ChurnLabel label;
    label.user_id = series.user_id;
    label.window_start_day = window_start_day;
    label.window_end_day = window_end_day;
    label.churned = true;
    for (int dim : behavioral_dims(series)) {
        for (int day = window_start_day; day <= window_end_day; ++day) {
            if (series.values(dim, day - 1) != 0.0) {
                label.churned = false;
                return label;
            }
        }
    }
    return label;
}

} // namespace churnkit
