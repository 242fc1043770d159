#include "churnkit/cluster_pipeline.hpp"

#include "churnkit/errors.hpp"
#include "churnkit/io.hpp"
#include "churnkit/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace churnkit {

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - s.mean;
    s.scale = (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index c = 0; c < s.scale.size(); ++c) {
        if (s.scale[c] == 0.0) s.scale[c] = 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& x) const {
    return (x.array().rowwise() * scale.array()).matrix().rowwise() + mean;
}

namespace {

Eigen::MatrixXd dim_slice(const std::vector<FeatureMatrix>& features, int dim) {
    if (features.empty()) throw ValidationError("no feature matrices given");
    Eigen::MatrixXd slice(features.size(), kFeatureParams);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (dim < 0 || dim >= features[i].dims()) {
            throw ValidationError("feature dimension index " + std::to_string(dim) +
                                  " out of range");
        }
        slice.row(static_cast<Eigen::Index>(i)) = features[i].params.row(dim);
    }
    return slice;
}

} // namespace

KMeansResult single_feature_clustering(const std::vector<FeatureMatrix>& features, int dim,
                                       KRange k_range, std::uint64_t seed,
                                       Standardizer* standardizer_out) {
    const Eigen::MatrixXd slice = dim_slice(features, dim);
    const Standardizer std_ = Standardizer::fit(slice);
    KMeansResult result = select_k_and_cluster(std_.transform(slice), k_range, seed);
    result.centers = std_.inverse(result.centers);
    if (standardizer_out) *standardizer_out = std_;
    return result;
}

Eigen::MatrixXd combine_features(const std::vector<FeatureMatrix>& features,
                                 const std::vector<KMeansResult>& per_dim) {
    const int n = static_cast<int>(features.size());
    const int dims = static_cast<int>(per_dim.size());
    if (n == 0) throw ValidationError("combine_features: no users");
    Eigen::MatrixXd combined(n, dims * kFeatureParams);
    for (int d = 0; d < dims; ++d) {
        if (static_cast<int>(per_dim[d].assignments.size()) != n) {
            throw ValidationError("combine_features: dimension " + std::to_string(d) +
                                  " has assignments for a different user count");
        }
        for (int i = 0; i < n; ++i) {
            combined.block(i, d * kFeatureParams, 1, kFeatureParams) =
                per_dim[d].centers.row(per_dim[d].assignments[i]);
        }
    }
    return combined;
}

Eigen::MatrixXd soft_typing_targets(const Eigen::MatrixXd& points_std,
                                    const Eigen::MatrixXd& centers_std) {
    if (points_std.cols() != centers_std.cols()) {
        throw ValidationError("soft_typing_targets: point/center width mismatch");
    }
    const Eigen::Index n = points_std.rows();
    const Eigen::Index k = centers_std.rows();
    Eigen::MatrixXd q(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            q(i, j) = 1.0 / (1.0 + (points_std.row(i) - centers_std.row(j)).squaredNorm());
        }
        q.row(i) /= q.row(i).sum();
    }
    return q;
}

MultiFeatureClustering multi_feature_clustering(const Eigen::MatrixXd& combined, KRange k_range,
                                                std::uint64_t seed) {
    MultiFeatureClustering out;
    out.standardizer = Standardizer::fit(combined);
    const Eigen::MatrixXd x = out.standardizer.transform(combined);
    out.result = select_k_and_cluster(x, k_range, seed);
    out.soft_targets = soft_typing_targets(x, out.result.centers);
    out.result.centers = out.standardizer.inverse(out.result.centers);
    return out;
}

std::string to_string(EgoLayer layer) {
    switch (layer) {
        case EgoLayer::Tendril: return "tendril";
        case EgoLayer::Outsider: return "outsider";
        case EgoLayer::Disconnected: return "disconnected";
    }
    return "disconnected";
}

EgoLayer classify_ego_layer(int ego_size, double ego_density, double core_overlap,
                            const EgoLayerThresholds& thresholds) {
    (void)ego_size;
    (void)ego_density;
    if (core_overlap >= thresholds.tendril_min_overlap) return EgoLayer::Tendril;
    if (core_overlap >= thresholds.outsider_min_overlap) return EgoLayer::Outsider;
    return EgoLayer::Disconnected;
}

std::string ClusterPipelineModel::type_name(int index) const {
    if (index >= 0 && index < static_cast<int>(type_names.size())) return type_names[index];
    return "type" + std::to_string(index);
}

ClusterPipelineModel ClusterPipelineModel::fit(const std::vector<FeatureMatrix>& features,
                                               KRange k_range, std::uint64_t seed,
                                               const std::vector<std::string>& dimension_names) {
    if (features.empty()) throw ValidationError("cluster pipeline: no users");
    const int dims = features[0].dims();
    for (const auto& f : features) {
        if (f.dims() != dims) {
            throw ValidationError("cluster pipeline: inconsistent feature dimensions");
        }
    }

    ClusterPipelineModel model;
    model.dimension_names = dimension_names;
    model.dim_standardizers.resize(dims);
    model.dim_clusters.reserve(dims);
    for (int d = 0; d < dims; ++d) {
        model.dim_clusters.push_back(
            single_feature_clustering(features, d, k_range, mix_seed(seed, 100 + d),
                                      &model.dim_standardizers[d]));
    }

    const Eigen::MatrixXd combined = combine_features(features, model.dim_clusters);
    MultiFeatureClustering multi = multi_feature_clustering(combined, k_range, mix_seed(seed, 7));
    model.combined_standardizer = multi.standardizer;
    model.multi = std::move(multi.result);
    return model;
}

Eigen::RowVectorXd ClusterPipelineModel::combine(const FeatureMatrix& features) const {
    const int dims = static_cast<int>(dim_clusters.size());
    if (features.dims() != dims) {
        throw ValidationError("combine: user has " + std::to_string(features.dims()) +
                              " dimensions, model expects " + std::to_string(dims));
    }
    Eigen::RowVectorXd combined(dims * kFeatureParams);
    for (int d = 0; d < dims; ++d) {
        const Standardizer& std_ = dim_standardizers[d];
        const Eigen::MatrixXd centers_std = std_.transform(dim_clusters[d].centers);
        const Eigen::MatrixXd row_std = std_.transform(features.params.row(d));
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centers_std.rows(); ++c) {
            const double dist = (row_std.row(0) - centers_std.row(c)).squaredNorm();
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        combined.segment(d * kFeatureParams, kFeatureParams) = dim_clusters[d].centers.row(best);
    }
    return combined;
}

TypeAssignment ClusterPipelineModel::assign(const FeatureMatrix& features) const {
    const Eigen::MatrixXd x = combined_standardizer.transform(combine(features));
    const Eigen::MatrixXd centers_std = combined_standardizer.transform(multi.centers);
    const Eigen::MatrixXd q = soft_typing_targets(x, centers_std);
    TypeAssignment t;
    t.user_id = features.user_id;
    t.soft_weights = q.row(0);
    q.row(0).maxCoeff(&t.type_index);
    return t;
}

std::vector<TypeAssignment> ClusterPipelineModel::assign(
    const std::vector<FeatureMatrix>& features) const {
    std::vector<TypeAssignment> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(assign(f));
    return out;
}

Eigen::MatrixXd ClusterPipelineModel::soft_targets(
    const std::vector<FeatureMatrix>& features) const {
    Eigen::MatrixXd combined(features.size(), dim_clusters.size() * kFeatureParams);
    for (std::size_t i = 0; i < features.size(); ++i) {
        combined.row(static_cast<Eigen::Index>(i)) = combine(features[i]);
    }
    const Eigen::MatrixXd centers_std = combined_standardizer.transform(multi.centers);
    return soft_typing_targets(combined_standardizer.transform(combined), centers_std);
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

nlohmann::json standardizer_to_json(const Standardizer& s) {
    return {{"mean", std::vector<double>(s.mean.begin(), s.mean.end())},
            {"scale", std::vector<double>(s.scale.begin(), s.scale.end())}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
    Standardizer s;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto scale = j.at("scale").get<std::vector<double>>();
    s.mean = Eigen::Map<const Eigen::RowVectorXd>(mean.data(), mean.size());
    s.scale = Eigen::Map<const Eigen::RowVectorXd>(scale.data(), scale.size());
    return s;
}

nlohmann::json result_to_json(const KMeansResult& r) {
    nlohmann::json j;
    j["k"] = r.k;
    j["mean_silhouette"] = r.mean_silhouette;
    j["centers"] = matrix_to_json(r.centers);
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [k, score] : r.per_k_scores) scores[std::to_string(k)] = score;
    j["per_k_scores"] = scores;
    return j;
}

KMeansResult result_from_json(const nlohmann::json& j) {
    KMeansResult r;
    r.k = j.at("k").get<int>();
    r.mean_silhouette = j.at("mean_silhouette").get<double>();
    r.centers = matrix_from_json(j.at("centers"));
    for (const auto& [key, score] : j.at("per_k_scores").items()) {
        r.per_k_scores[std::stoi(key)] = score.get<double>();
    }
    return r;
}

constexpr int kModelFormatVersion = 1;

} // namespace

nlohmann::json ClusterPipelineModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["dimension_names"] = dimension_names;
    j["type_names"] = type_names;
    nlohmann::json per_dim = nlohmann::json::array();
    for (std::size_t d = 0; d < dim_clusters.size(); ++d) {
        nlohmann::json jd = result_to_json(dim_clusters[d]);
        jd["standardizer"] = standardizer_to_json(dim_standardizers[d]);
        per_dim.push_back(std::move(jd));
    }
    j["per_dimension"] = per_dim;
    nlohmann::json jm = result_to_json(multi);
    jm["standardizer"] = standardizer_to_json(combined_standardizer);
    j["multi"] = jm;
    return j;
}

ClusterPipelineModel ClusterPipelineModel::from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kModelFormatVersion) {
        throw ValidationError("cluster model: unsupported format version");
    }
    ClusterPipelineModel m;
    m.dimension_names = j.at("dimension_names").get<std::vector<std::string>>();
    m.type_names = j.value("type_names", std::vector<std::string>{});
    for (const auto& jd : j.at("per_dimension")) {
        m.dim_clusters.push_back(result_from_json(jd));
        m.dim_standardizers.push_back(standardizer_from_json(jd.at("standardizer")));
    }
    m.multi = result_from_json(j.at("multi"));
    m.combined_standardizer = standardizer_from_json(j.at("multi").at("standardizer"));
    return m;
}

void ClusterPipelineModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << to_json().dump(2) << '\n';
}

ClusterPipelineModel ClusterPipelineModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return from_json(j);
}

void save_type_assignments_csv(const std::string& path,
                               const std::vector<TypeAssignment>& assignments) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    const int k = assignments.empty() ? 0 : static_cast<int>(assignments[0].soft_weights.size());
    out << "user_id,type_index";
    for (int j = 0; j < k; ++j) out << ",soft_w" << j;
    out << '\n';
    for (const auto& a : assignments) {
        out << a.user_id << ',' << a.type_index;
        for (int j = 0; j < k; ++j) out << ',' << format_double(a.soft_weights[j]);
        out << '\n';
    }
}

} // namespace churnkit
