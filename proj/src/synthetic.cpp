#include "churnkit/synthetic.hpp"

#include "churnkit/errors.hpp"
#include "churnkit/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace churnkit {

TrendShape trend_shape_from_string(const std::string& name) {
    if (name == "flat") return TrendShape::Flat;
    if (name == "decaying") return TrendShape::Decaying;
    if (name == "growing") return TrendShape::Growing;
    if (name == "bursty") return TrendShape::Bursty;
    if (name == "zero") return TrendShape::Zero;
    throw ValidationError("unknown trend shape '" + name + "'");
}

std::string to_string(TrendShape shape) {
    switch (shape) {
        case TrendShape::Flat: return "flat";
        case TrendShape::Decaying: return "decaying";
        case TrendShape::Growing: return "growing";
        case TrendShape::Bursty: return "bursty";
        case TrendShape::Zero: return "zero";
    }
    return "zero";
}

void SyntheticSpec::validate() const {
    if (archetypes.empty()) throw ValidationError("spec has no archetypes");
    if (days < 2) throw ValidationError("spec needs at least 2 days");
    double total = 0.0;
    for (const auto& a : archetypes) {
        if (a.activity.size() != static_cast<std::size_t>(kBehaviorDims)) {
            throw ValidationError("archetype '" + a.name + "' must profile all " +
                                  std::to_string(kBehaviorDims) + " behavioral dimensions");
        }
        for (const auto& p : a.activity) {
            if (!(p.base_rate >= 0.0) || !std::isfinite(p.base_rate)) {
                throw ValidationError("archetype '" + a.name + "' has invalid base rate");
            }
        }
        if (a.churn_probability < 0.0 || a.churn_probability > 1.0) {
            throw ValidationError("archetype '" + a.name + "' churn probability outside [0,1]");
        }
        if (a.ego_size_min < 1 || a.ego_size_max < a.ego_size_min) {
            throw ValidationError("archetype '" + a.name + "' has invalid ego size range");
        }
        if (a.ego_density_min < 0.0 || a.ego_density_max > 1.0 ||
            a.ego_density_max < a.ego_density_min) {
            throw ValidationError("archetype '" + a.name + "' has invalid ego density range");
        }
        if (a.proportion < 0.0) {
            throw ValidationError("archetype '" + a.name + "' has negative proportion");
        }
        total += a.proportion;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("archetype proportions sum to " + std::to_string(total) +
                              ", expected 1");
    }
}

namespace {

// Activity dimension ids, matching default_dimension_names() order.
enum Dim {
    kChatRecv = 0, kChatSent, kSnapRecv, kSnapSent, kStoryViewed,
    kDiscoverViewed, kLensPosted, kLensSent, kLensSaved, kLensSwiped
};

ArchetypeSpec make_archetype(const std::string& name, double churn_prob, int size_lo,
                             int size_hi, double dens_lo, double dens_hi, double proportion) {
    ArchetypeSpec a;
    a.name = name;
    a.activity.assign(kBehaviorDims, DimensionProfile{});
    a.churn_probability = churn_prob;
    a.ego_size_min = size_lo;
    a.ego_size_max = size_hi;
    a.ego_density_min = dens_lo;
    a.ego_density_max = dens_hi;
    a.proportion = proportion;
    return a;
}

void set_dim(ArchetypeSpec& a, int dim, double rate, TrendShape shape) {
    a.activity[dim] = DimensionProfile{rate, shape};
}

} // namespace

SyntheticSpec default_six_archetype_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const double p = 1.0 / 6.0;

    // Stable heavy use of every app function; large, loosely knit ego-network.
    ArchetypeSpec all_star = make_archetype("All-star", 0.02, 30, 38, 0.10, 0.18, p);
    set_dim(all_star, kChatRecv, 8.0, TrendShape::Flat);
    set_dim(all_star, kChatSent, 7.0, TrendShape::Flat);
    set_dim(all_star, kSnapRecv, 6.0, TrendShape::Flat);
    set_dim(all_star, kSnapSent, 6.0, TrendShape::Flat);
    set_dim(all_star, kStoryViewed, 4.0, TrendShape::Flat);
    set_dim(all_star, kDiscoverViewed, 2.5, TrendShape::Flat);
    set_dim(all_star, kLensPosted, 1.2, TrendShape::Flat);
    set_dim(all_star, kLensSent, 1.5, TrendShape::Flat);
    set_dim(all_star, kLensSaved, 0.8, TrendShape::Flat);
    set_dim(all_star, kLensSwiped, 2.5, TrendShape::Flat);

    // Steady chat and snap, little else.
    ArchetypeSpec chatter = make_archetype("Chatter", 0.12, 16, 22, 0.22, 0.32, p);
    set_dim(chatter, kChatRecv, 7.0, TrendShape::Flat);
    set_dim(chatter, kChatSent, 6.0, TrendShape::Flat);
    set_dim(chatter, kSnapRecv, 5.0, TrendShape::Flat);
    set_dim(chatter, kSnapSent, 5.0, TrendShape::Flat);
    set_dim(chatter, kStoryViewed, 1.0, TrendShape::Flat);
    set_dim(chatter, kDiscoverViewed, 0.3, TrendShape::Decaying);

    // Chat and snap in short first-week bursts separated by silence.
    ArchetypeSpec bumper = make_archetype("Bumper", 0.58, 9, 14, 0.35, 0.50, p);
    set_dim(bumper, kChatRecv, 18.0, TrendShape::Bursty);
    set_dim(bumper, kChatSent, 15.0, TrendShape::Bursty);
    set_dim(bumper, kSnapRecv, 12.0, TrendShape::Bursty);
    set_dim(bumper, kSnapSent, 11.0, TrendShape::Bursty);
    set_dim(bumper, kStoryViewed, 0.2, TrendShape::Decaying);

    // Registers, barely acts, nearly friendless.
    ArchetypeSpec sleeper = make_archetype("Sleeper", 0.72, 1, 3, 0.0, 0.10, p);
    set_dim(sleeper, kChatRecv, 1.2, TrendShape::Decaying);
    set_dim(sleeper, kChatSent, 0.8, TrendShape::Decaying);

    // Invited by friends; receives messages from a small dense clique but
    // rarely responds.
    ArchetypeSpec invitee = make_archetype("Invitee", 0.84, 6, 9, 0.55, 0.75, p);
    set_dim(invitee, kChatRecv, 4.0, TrendShape::Decaying);
    set_dim(invitee, kSnapRecv, 2.5, TrendShape::Decaying);
    set_dim(invitee, kChatSent, 0.3, TrendShape::Decaying);
    set_dim(invitee, kStoryViewed, 1.2, TrendShape::Decaying);

    // Tries out lenses heavily, touches nothing else.
    ArchetypeSpec swiper = make_archetype("Swiper", 0.95, 3, 5, 0.40, 0.60, p);
    set_dim(swiper, kLensSwiped, 10.0, TrendShape::Flat);
    set_dim(swiper, kLensSaved, 1.5, TrendShape::Decaying);
    set_dim(swiper, kStoryViewed, 0.3, TrendShape::Decaying);

    spec.archetypes = {all_star, chatter, bumper, sleeper, swiper, invitee};
    return spec;
}

namespace {

// Daily rate multipliers for one (user, dimension); bursty shapes realize
// their burst runs from the per-user stream.
std::vector<double> shape_profile(TrendShape shape, int days, Rng& rng) {
    std::vector<double> s(days, 0.0);
    switch (shape) {
        case TrendShape::Flat:
            std::fill(s.begin(), s.end(), 1.0);
            break;
        case TrendShape::Decaying:
            for (int t = 0; t < days; ++t) s[t] = std::exp(-t / 4.0);
            break;
        case TrendShape::Growing:
            for (int t = 0; t < days; ++t) s[t] = 1.0 - std::exp(-t / 4.0);
            break;
        case TrendShape::Bursty: {
            // Burst runs land in the first week so that week-two silence (the
            // churn signature) barely moves a bursty user's features.
            std::fill(s.begin(), s.end(), 0.03);
            const int window = std::min(7, days);
            const int runs = 2;
            for (int r = 0; r < runs; ++r) {
                const int len = static_cast<int>(rng.uniform_int(2, std::min(4, window)));
                const int start = static_cast<int>(rng.uniform_int(0, window - len));
                for (int t = start; t < start + len; ++t) s[t] = 1.0;
            }
            break;
        }
        case TrendShape::Zero:
            break;
    }
    return s;
}

// Quota allocation: floor(n * proportion) each, remainder by largest
// fractional part (ties toward lower index).
std::vector<int> archetype_quota(const SyntheticSpec& spec, int n_users) {
    const int k = static_cast<int>(spec.archetypes.size());
    std::vector<int> counts(k, 0);
    std::vector<std::pair<double, int>> frac(k);
    int assigned = 0;
    for (int a = 0; a < k; ++a) {
        const double exact = spec.archetypes[a].proportion * n_users;
        counts[a] = static_cast<int>(std::floor(exact));
        assigned += counts[a];
        frac[a] = {exact - counts[a], a};
    }
    std::stable_sort(frac.begin(), frac.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (int i = 0; i < n_users - assigned; ++i) {
        counts[frac[i % k].second]++;
    }
    return counts;
}

std::string padded_id(char prefix, int index, int width) {
    std::string num = std::to_string(index);
    if (static_cast<int>(num.size()) < width) {
        num.insert(0, width - num.size(), '0');
    }
    return prefix + num;
}

} // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, int n_users) {
    spec.validate();
    if (n_users < 1) throw ValidationError("n_users must be >= 1");

    const int days = spec.days;
    const int week2_start = days / 2 + 1;  // 1-based; day 8 for a 14-day window

    // Deterministic archetype assignment: quotas, then a seeded shuffle.
    std::vector<int> assignment;
    {
        const std::vector<int> quota = archetype_quota(spec, n_users);
        for (int a = 0; a < static_cast<int>(quota.size()); ++a) {
            assignment.insert(assignment.end(), quota[a], a);
        }
        Rng shuffle_rng(mix_seed(spec.seed, 0xa551));
        shuffle_rng.shuffle(assignment);
    }

    const int id_width = std::max(4, static_cast<int>(std::to_string(n_users - 1).size()));

    SyntheticDataset out;
    out.series.reserve(n_users);
    out.truth.reserve(n_users);

    long friend_counter = 0;
    for (int i = 0; i < n_users; ++i) {
        const ArchetypeSpec& arch = spec.archetypes[assignment[i]];
        Rng rng(mix_seed(mix_seed(spec.seed, 0x5eed), static_cast<std::uint64_t>(i)));

        ActivitySeries s;
        s.user_id = padded_id('u', i, id_width);
        s.dimension_names = default_dimension_names();
        s.values = Eigen::MatrixXd::Zero(kDefaultDims, days);

        const bool churn_intent = rng.uniform() < arch.churn_probability;

        // Per-user enthusiasm: scales all activity rates so users of one
        // archetype differ in volume, not just Poisson noise.
        const double intensity = std::exp(rng.normal(0.0, 0.4));

        // Behavioral counts.
        double expected_week2 = 0.0;
        std::vector<std::vector<double>> rates(kBehaviorDims);
        for (int d = 0; d < kBehaviorDims; ++d) {
            const DimensionProfile& prof = arch.activity[d];
            std::vector<double> shape = shape_profile(prof.shape, days, rng);
            rates[d].resize(days);
            for (int t = 0; t < days; ++t) {
                rates[d][t] = intensity * prof.base_rate * shape[t];
                if (t + 1 >= week2_start) expected_week2 += rates[d][t];
            }
        }
        for (int d = 0; d < kBehaviorDims; ++d) {
            for (int t = 0; t < days; ++t) {
                const bool silent = churn_intent && (t + 1 >= week2_start);
                s.values(d, t) = silent ? 0.0 : static_cast<double>(rng.poisson(rates[d][t]));
            }
        }

        // A user whose archetype cannot act in week two is churned by
        // definition; otherwise stayers get at least one week-two event so the
        // planted flag always matches compute_churn_label.
        bool churned = churn_intent;
        if (!churn_intent) {
            if (expected_week2 <= 0.0) {
                churned = true;
            } else {
                double week2_total = 0.0;
                for (int d = 0; d < kBehaviorDims; ++d) {
                    for (int t = week2_start - 1; t < days; ++t) week2_total += s.values(d, t);
                }
                if (week2_total == 0.0) {
                    int best_d = 0, best_t = week2_start - 1;
                    double best_rate = -1.0;
                    for (int d = 0; d < kBehaviorDims; ++d) {
                        for (int t = week2_start - 1; t < days; ++t) {
                            if (rates[d][t] > best_rate) {
                                best_rate = rates[d][t];
                                best_d = d;
                                best_t = t;
                            }
                        }
                    }
                    s.values(best_d, best_t) = 1.0;
                }
            }
        }

        // Ego-network: fresh friend nodes per user, friend-friend edges chosen
        // to hit the target density, arrivals spread over the active window.
        const int target_size =
            static_cast<int>(rng.uniform_int(arch.ego_size_min, arch.ego_size_max));
        const double target_density = rng.uniform(arch.ego_density_min, arch.ego_density_max);
        const int n_friends = target_size - 1;
        const int last_arrival_day = churned ? std::min(days, week2_start - 1) : days;

        std::vector<std::string> friends(n_friends);
        std::vector<int> arrival(n_friends);
        for (int f = 0; f < n_friends; ++f) {
            friends[f] = padded_id('f', static_cast<int>(friend_counter++), 6);
            arrival[f] = static_cast<int>(rng.uniform_int(1, last_arrival_day));
        }

        std::vector<TimedEdge> user_edges;
        for (int f = 0; f < n_friends; ++f) {
            user_edges.push_back({s.user_id, friends[f], arrival[f]});
        }
        if (n_friends >= 2) {
            const double possible = static_cast<double>(target_size) * (target_size - 1) / 2.0;
            const long want = std::lround(target_density * possible);
            std::vector<std::pair<int, int>> pairs;
            for (int a = 0; a < n_friends; ++a) {
                for (int b = a + 1; b < n_friends; ++b) pairs.emplace_back(a, b);
            }
            const long extra = std::clamp<long>(want - n_friends, 0,
                                                static_cast<long>(pairs.size()));
            rng.shuffle(pairs);
            for (long e = 0; e < extra; ++e) {
                const auto [a, b] = pairs[e];
                user_edges.push_back({friends[a], friends[b], std::max(arrival[a], arrival[b])});
            }
        }

        // Daily network dimensions from the realized edge timeline.
        for (int t = 1; t <= days; ++t) {
            int present = 0;
            for (int f = 0; f < n_friends; ++f) {
                if (arrival[f] <= t) ++present;
            }
            long edges_now = 0;
            for (const auto& e : user_edges) {
                if (e.day <= t) ++edges_now;
            }
            const int size_now = present + 1;
            s.values(kBehaviorDims, t - 1) = size_now;
            s.values(kBehaviorDims + 1, t - 1) =
                size_now <= 1 ? 0.0
                              : static_cast<double>(edges_now) /
                                    (static_cast<double>(size_now) * (size_now - 1) / 2.0);
        }

        out.edges.insert(out.edges.end(), user_edges.begin(), user_edges.end());
        out.graph.add_node(s.user_id);
        out.series.push_back(std::move(s));
        out.truth.push_back({out.series.back().user_id, arch.name, assignment[i], churned});
    }

    for (const auto& e : out.edges) {
        out.graph.add_edge(e.a, e.b);
    }
    return out;
}

void SyntheticDataset::write_snapshots(const std::string& prefix, int days) const {
    for (int day = 1; day <= days; ++day) {
        std::ofstream out(snapshot_path(prefix, day));
        if (!out) {
            throw ValidationError("cannot write snapshot '" + snapshot_path(prefix, day) + "'");
        }
        for (const auto& e : edges) {
            if (e.day <= day) out << e.a << ' ' << e.b << '\n';
        }
    }
}

void to_json(nlohmann::json& j, const SyntheticSpec& spec) {
    j = nlohmann::json::object();
    j["seed"] = spec.seed;
    j["days"] = spec.days;
    auto arr = nlohmann::json::array();
    const auto& dims = default_dimension_names();
    for (const auto& a : spec.archetypes) {
        nlohmann::json ja;
        ja["name"] = a.name;
        ja["churn_probability"] = a.churn_probability;
        ja["proportion"] = a.proportion;
        ja["ego_size"] = {a.ego_size_min, a.ego_size_max};
        ja["ego_density"] = {a.ego_density_min, a.ego_density_max};
        nlohmann::json act = nlohmann::json::object();
        for (int d = 0; d < kBehaviorDims; ++d) {
            if (a.activity[d].shape == TrendShape::Zero && a.activity[d].base_rate == 0.0) continue;
            act[dims[d]] = {{"rate", a.activity[d].base_rate},
                            {"shape", to_string(a.activity[d].shape)}};
        }
        ja["activity"] = act;
        arr.push_back(ja);
    }
    j["archetypes"] = arr;
}

void from_json(const nlohmann::json& j, SyntheticSpec& spec) {
    spec = SyntheticSpec{};
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.days = j.value("days", kDefaultDays);
    const auto& dims = default_dimension_names();
    if (!j.contains("archetypes")) throw ValidationError("generator spec missing 'archetypes'");
    for (const auto& ja : j.at("archetypes")) {
        ArchetypeSpec a;
        a.name = ja.at("name").get<std::string>();
        a.churn_probability = ja.at("churn_probability").get<double>();
        a.proportion = ja.at("proportion").get<double>();
        a.ego_size_min = ja.at("ego_size").at(0).get<int>();
        a.ego_size_max = ja.at("ego_size").at(1).get<int>();
        a.ego_density_min = ja.at("ego_density").at(0).get<double>();
        a.ego_density_max = ja.at("ego_density").at(1).get<double>();
        a.activity.assign(kBehaviorDims, DimensionProfile{});
        if (ja.contains("activity")) {
            for (const auto& [name, jp] : ja.at("activity").items()) {
                const auto it = std::find(dims.begin(), dims.end(), name);
                const int d = static_cast<int>(it - dims.begin());
                if (it == dims.end() || d >= kBehaviorDims) {
                    throw ValidationError("archetype '" + a.name +
                                          "': unknown activity dimension '" + name + "'");
                }
                a.activity[d].base_rate = jp.at("rate").get<double>();
                a.activity[d].shape = trend_shape_from_string(jp.at("shape").get<std::string>());
            }
        }
        spec.archetypes.push_back(std::move(a));
    }
    spec.validate();
}

} // namespace churnkit
