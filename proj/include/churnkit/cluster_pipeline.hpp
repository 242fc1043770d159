#pragma once

#include "churnkit/features.hpp"
#include "churnkit/kmeans.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace churnkit {

// Per-column z-scoring; zero-variance columns keep scale 1 so they contribute
// nothing to distances after centering.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& x) const;
};

// Step 1: k-means with Silhouette-selected k on one dimension's n x 4 feature
// slice, standardized per column. Centers are reported in original units.
KMeansResult single_feature_clustering(const std::vector<FeatureMatrix>& features, int dim,
                                       KRange k_range, std::uint64_t seed,
                                       Standardizer* standardizer_out = nullptr);

// Step 2: replace every user's per-dimension feature vector by its assigned
// cluster center and concatenate in dimension order (n x 4D, original units).
Eigen::MatrixXd combine_features(const std::vector<FeatureMatrix>& features,
                                 const std::vector<KMeansResult>& per_dim);

struct TypeAssignment {
    std::string user_id;
    int type_index = 0;
    Eigen::VectorXd soft_weights;
};

// Student-t kernel (one degree of freedom) similarity of each point to each
// center, normalized per row. Points and centers must live in the same
// standardized space.
Eigen::MatrixXd soft_typing_targets(const Eigen::MatrixXd& points_std,
                                    const Eigen::MatrixXd& centers_std);

struct MultiFeatureClustering {
    KMeansResult result;        // centers in original combined units
    Standardizer standardizer;
    Eigen::MatrixXd soft_targets;  // n x k
};

// Step 3: k-means with Silhouette-selected k on the standardized combinations.
MultiFeatureClustering multi_feature_clustering(const Eigen::MatrixXd& combined, KRange k_range,
                                                std::uint64_t seed);

enum class EgoLayer { Tendril, Outsider, Disconnected };

struct EgoLayerThresholds {
    double tendril_min_overlap = 0.4;   // tendrils keep most friends in the core
    double outsider_min_overlap = 0.05; // outsiders keep a few
};

std::string to_string(EgoLayer layer);

// Places a user in the jellyfish picture of the whole network by the fraction
// of her friends inside the degree core.
EgoLayer classify_ego_layer(int ego_size, double ego_density, double core_overlap,
                            const EgoLayerThresholds& thresholds = {});

// The fitted three-step pipeline; enough state to type unseen users.
struct ClusterPipelineModel {
    std::vector<std::string> dimension_names;
    std::vector<Standardizer> dim_standardizers;
    std::vector<KMeansResult> dim_clusters;
    Standardizer combined_standardizer;
    KMeansResult multi;
    std::vector<std::string> type_names;  // optional operator-assigned names

    int k_types() const { return multi.k; }
    std::string type_name(int index) const;

    static ClusterPipelineModel fit(const std::vector<FeatureMatrix>& features, KRange k_range,
                                    std::uint64_t seed,
                                    const std::vector<std::string>& dimension_names);

    // Quantized feature combination of one user (original units).
    Eigen::RowVectorXd combine(const FeatureMatrix& features) const;
    TypeAssignment assign(const FeatureMatrix& features) const;
    std::vector<TypeAssignment> assign(const std::vector<FeatureMatrix>& features) const;
    // Soft typing targets Q for a set of users (rows sum to 1).
    Eigen::MatrixXd soft_targets(const std::vector<FeatureMatrix>& features) const;

    nlohmann::json to_json() const;
    static ClusterPipelineModel from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static ClusterPipelineModel load(const std::string& path);
};

// CSV schema: user_id,type_index,soft_w0..soft_w{K-1}
void save_type_assignments_csv(const std::string& path,
                               const std::vector<TypeAssignment>& assignments);

} // namespace churnkit
