#pragma once

#include "churnkit/graph.hpp"
#include "churnkit/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace churnkit {

enum class TrendShape { Flat, Decaying, Growing, Bursty, Zero };

TrendShape trend_shape_from_string(const std::string& name);
std::string to_string(TrendShape shape);

struct DimensionProfile {
    double base_rate = 0.0;
    TrendShape shape = TrendShape::Zero;
};

struct ArchetypeSpec {
    std::string name;
    std::vector<DimensionProfile> activity;  // one per behavioral dimension
    double churn_probability = 0.0;
    int ego_size_min = 1;   // ego-network size, ego included
    int ego_size_max = 1;
    double ego_density_min = 0.0;
    double ego_density_max = 0.0;
    double proportion = 0.0;
};

struct SyntheticSpec {
    std::vector<ArchetypeSpec> archetypes;
    std::uint64_t seed = 0;
    int days = kDefaultDays;

    void validate() const;
};

// Six planted archetypes patterned after typical new-user cohorts
// (stable all-round actives, chat-centric users, bursty users, inactives,
// lens-only users, invited users), with distinct churn rates and ego shapes.
SyntheticSpec default_six_archetype_spec(std::uint64_t seed = 20180819);

struct GroundTruth {
    std::string user_id;
    std::string archetype;
    int archetype_index = 0;
    bool churned = false;
};

struct TimedEdge {
    std::string a, b;
    int day = 1;  // first day the friendship exists
};

struct SyntheticDataset {
    std::vector<ActivitySeries> series;
    std::vector<GroundTruth> truth;
    SocialGraph graph;             // state at the final day
    std::vector<TimedEdge> edges;

    // One cumulative edge-list file per day: <prefix>.day01 .. .dayNN.
    void write_snapshots(const std::string& prefix, int days) const;
};

// Plants archetype ground truth: Poisson daily counts shaped per dimension,
// churned users silent in week two, ego-networks hitting each archetype's
// size/density ranges. Identical (spec, n_users) always yields identical
// output. Users selected to stay are guaranteed at least one week-two event
// so planted flags agree exactly with compute_churn_label.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec, int n_users);

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

} // namespace churnkit
