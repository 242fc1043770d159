#include "churnkit/cli.hpp"

#include "churnkit/cluster_pipeline.hpp"
#include "churnkit/baselines.hpp"
#include "churnkit/errors.hpp"
#include "churnkit/features.hpp"
#include "churnkit/io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

namespace churnkit {

namespace fs = std::filesystem;

std::string PipelineConfig::activities_file() const {
    if (!activities_path.empty()) return activities_path;
    return out_dir + "/activities." + activities_format;
}

std::string PipelineConfig::cluster_model_file() const {
    return cluster_model_path.empty() ? out_dir + "/cluster_model.json" : cluster_model_path;
}

std::string PipelineConfig::checkpoint_file() const {
    return checkpoint_path.empty() ? out_dir + "/checkpoint.json" : checkpoint_path;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }

    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.activities_path = j.value("activities", cfg.activities_path);
    cfg.activities_format = j.value("format", cfg.activities_format);
    cfg.cluster_model_path = j.value("cluster_model", cfg.cluster_model_path);
    cfg.checkpoint_path = j.value("checkpoint", cfg.checkpoint_path);

    if (j.contains("generator")) {
        const auto& jg = j.at("generator");
        cfg.n_users = jg.value("n_users", cfg.n_users);
        if (jg.contains("spec")) {
            cfg.generator = jg.at("spec").get<SyntheticSpec>();
        }
        if (jg.contains("seed")) cfg.generator.seed = jg.at("seed").get<std::uint64_t>();
    }
    if (j.contains("clustering")) {
        const auto& jc = j.at("clustering");
        cfg.k_range.lo = jc.value("k_min", cfg.k_range.lo);
        cfg.k_range.hi = jc.value("k_max", cfg.k_range.hi);
        cfg.cluster_seed = jc.value("seed", cfg.cluster_seed);
        cfg.type_names = jc.value("type_names", cfg.type_names);
    }
    if (j.contains("train")) cfg.train = j.at("train").get<TrainConfig>();
    if (j.contains("evaluate")) {
        const auto& je = j.at("evaluate");
        cfg.eval_days = je.value("days", cfg.eval_days);
        cfg.eval_repeats = je.value("repeats", cfg.eval_repeats);
        cfg.eval_ratio = je.value("ratio", cfg.eval_ratio);
        cfg.eval_seed = je.value("seed", cfg.eval_seed);
        cfg.eval_logreg = je.value("logreg", cfg.eval_logreg);
        cfg.eval_ablation = je.value("ablation", cfg.eval_ablation);
        cfg.logreg_l2 = je.value("logreg_l2", cfg.logreg_l2);
    }
    cfg.core_percentile = j.value("core_percentile", cfg.core_percentile);
    return cfg;
}

namespace {

FileFormat config_format(const PipelineConfig& cfg) {
    return file_format_from_string(cfg.activities_format);
}

std::vector<ActivitySeries> load_dataset(const PipelineConfig& cfg) {
    return load_activities(cfg.activities_file(), config_format(cfg));
}

std::vector<bool> churn_labels_for(const std::vector<ActivitySeries>& series) {
    std::vector<bool> labels;
    labels.reserve(series.size());
    for (const auto& s : series) labels.push_back(compute_churn_label(s).churned);
    return labels;
}

void ensure_out_dir(const PipelineConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + cfg.out_dir + "'");
}

struct MeanMetrics {
    double accuracy = 0.0, precision = 0.0, recall = 0.0;
    int count = 0;

    void add(const BinaryMetrics& m) {
        accuracy += m.accuracy;
        precision += m.precision;
        recall += m.recall;
        ++count;
    }
};

void write_metrics_csv(const std::string& path, const std::map<int, MeanMetrics>& by_day) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "d,accuracy,precision,recall\n";
    for (const auto& [d, m] : by_day) {
        out << d << ',' << format_double(m.accuracy / m.count) << ','
            << format_double(m.precision / m.count) << ',' << format_double(m.recall / m.count)
            << '\n';
    }
}

} // namespace

void cmd_generate(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    const SyntheticDataset ds = generate_synthetic(cfg.generator, cfg.n_users);
    save_activities(cfg.activities_file(), ds.series, config_format(cfg));
    save_ground_truth_csv(cfg.out_dir + "/labels.csv", ds.truth);
    ds.write_snapshots(cfg.out_dir + "/edges", cfg.generator.days);
    {
        nlohmann::json j = cfg.generator;
        std::ofstream out(cfg.out_dir + "/generator_spec.json");
        if (!out) throw ValidationError("cannot write generator spec");
        out << j.dump(2) << '\n';
    }
    std::cout << "generated " << ds.series.size() << " users, " << ds.graph.node_count()
              << " graph nodes, " << ds.graph.edge_count() << " edges\n";
}

void cmd_extract(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    const std::vector<ActivitySeries> series = load_dataset(cfg);
    const std::vector<FeatureMatrix> features = extract_features(series);
    const auto& names =
        series.empty() || series[0].dimension_names.empty() ? default_dimension_names()
                                                            : series[0].dimension_names;
    save_features_csv(cfg.out_dir + "/features.csv", features, names);
    std::cout << "extracted features for " << features.size() << " users\n";
}

void cmd_cluster(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    const std::vector<ActivitySeries> series = load_dataset(cfg);
    const std::vector<FeatureMatrix> features = extract_features(series);
    const auto& names =
        series.empty() || series[0].dimension_names.empty() ? default_dimension_names()
                                                            : series[0].dimension_names;

    ClusterPipelineModel model =
        ClusterPipelineModel::fit(features, cfg.k_range, cfg.cluster_seed, names);
    model.type_names = cfg.type_names;
    model.save(cfg.cluster_model_file());

    const std::vector<TypeAssignment> assignments = model.assign(features);
    save_type_assignments_csv(cfg.out_dir + "/assignments.csv", assignments);

    // Churn rate per discovered type.
    const std::vector<bool> churned = churn_labels_for(series);
    std::vector<long> count(model.k_types(), 0), churn_count(model.k_types(), 0);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        count[assignments[i].type_index]++;
        if (churned[i]) churn_count[assignments[i].type_index]++;
    }
    std::ofstream table(cfg.out_dir + "/churn_by_type.csv");
    if (!table) throw ValidationError("cannot write churn_by_type.csv");
    table << "type_index,type_name,n_users,churn_rate\n";
    for (int t = 0; t < model.k_types(); ++t) {
        const double rate = count[t] == 0 ? 0.0 : static_cast<double>(churn_count[t]) / count[t];
        table << t << ',' << model.type_name(t) << ',' << count[t] << ',' << format_double(rate)
              << '\n';
    }
    std::cout << "clustered " << series.size() << " users into " << model.k_types()
              << " types (silhouette " << format_double(model.multi.mean_silhouette) << ")\n";
}

void cmd_train(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    const std::vector<ActivitySeries> series = load_dataset(cfg);
    if (!fs::exists(cfg.cluster_model_file())) {
        throw ValidationError("cluster model '" + cfg.cluster_model_file() +
                              "' not found; run the cluster command first");
    }
    const ClusterPipelineModel cluster_model = ClusterPipelineModel::load(cfg.cluster_model_file());
    const std::vector<FeatureMatrix> features = extract_features(series);
    const Eigen::MatrixXd targets = cluster_model.soft_targets(features);

    TrainConfig tc = cfg.train;
    if (tc.k_types == 0) tc.k_types = cluster_model.k_types();
    const TrainResult result = train(series_pointers(series), churn_labels_for(series), targets, tc);

    save_checkpoint(cfg.checkpoint_file(), result.model, tc, tc.epochs);
    std::ofstream trace(cfg.out_dir + "/loss_trace.csv");
    if (!trace) throw ValidationError("cannot write loss_trace.csv");
    trace << "epoch,total_loss,churn_loss,typing_loss\n";
    for (const auto& e : result.trace) {
        trace << e.epoch << ',' << format_double(e.total) << ',' << format_double(e.churn) << ','
              << format_double(e.typing) << '\n';
    }
    std::cout << "trained " << tc.epochs << " epochs; final loss "
              << format_double(result.trace.back().total) << '\n';
}

void cmd_evaluate(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    const std::vector<ActivitySeries> series = load_dataset(cfg);
    const std::vector<bool> churned = churn_labels_for(series);
    const std::vector<FeatureMatrix> features = extract_features(series);
    const auto& names =
        series[0].dimension_names.empty() ? default_dimension_names() : series[0].dimension_names;

    std::vector<int> days = cfg.eval_days;
    if (days.empty()) {
        days.resize(kDefaultDays);
        std::iota(days.begin(), days.end(), 1);
    }
    const std::vector<Split> splits =
        make_splits(static_cast<int>(series.size()), cfg.eval_ratio, cfg.eval_repeats,
                    cfg.eval_seed);

    std::map<int, MeanMetrics> plstm_plus, plstm, logreg;
    std::ofstream type_csv(cfg.out_dir + "/type_metrics.csv");
    if (!type_csv) throw ValidationError("cannot write type_metrics.csv");
    type_csv << "d,split,type,precision,recall\n";

    for (std::size_t si = 0; si < splits.size(); ++si) {
        const Split& split = splits[si];
        std::vector<const ActivitySeries*> train_users, test_users;
        std::vector<bool> train_y, test_y;
        std::vector<FeatureMatrix> train_features, test_features;
        for (int idx : split.train_idx) {
            train_users.push_back(&series[idx]);
            train_y.push_back(churned[idx]);
            train_features.push_back(features[idx]);
        }
        for (int idx : split.test_idx) {
            test_users.push_back(&series[idx]);
            test_y.push_back(churned[idx]);
            test_features.push_back(features[idx]);
        }

        // Types come from the clustering of full two-week training features.
        const ClusterPipelineModel cluster_model = ClusterPipelineModel::fit(
            train_features, cfg.k_range, mix_seed(cfg.cluster_seed, si), names);
        const Eigen::MatrixXd train_targets = cluster_model.soft_targets(train_features);
        std::vector<int> test_types;
        test_types.reserve(test_features.size());
        for (const auto& f : test_features) test_types.push_back(cluster_model.assign(f).type_index);

        for (int d : days) {
            TrainConfig tc = cfg.train;
            tc.days_window = d;
            tc.k_types = cluster_model.k_types();
            tc.seed = mix_seed(cfg.train.seed, mix_seed(si, static_cast<std::uint64_t>(d)));

            const TrainResult joint = train(train_users, train_y, train_targets, tc);
            const EvalResult joint_eval = evaluate(joint.model, test_users, test_y, test_types, d);
            plstm_plus[d].add(joint_eval.churn);
            for (int t = 0; t < cluster_model.k_types(); ++t) {
                type_csv << d << ',' << si << ',' << t << ','
                         << format_double(joint_eval.types.precision[t]) << ','
                         << format_double(joint_eval.types.recall[t]) << '\n';
            }
            type_csv << d << ',' << si << ",macro,"
                     << format_double(joint_eval.types.macro_precision) << ','
                     << format_double(joint_eval.types.macro_recall) << '\n';

            if (cfg.eval_ablation) {
                TrainConfig ablation = tc;
                ablation.lambda = 0.0;
                const TrainResult flat = train(train_users, train_y, Eigen::MatrixXd(), ablation);
                plstm[d].add(evaluate(flat.model, test_users, test_y, {}, d).churn);
            }
            if (cfg.eval_logreg) {
                const LogRegModel lr =
                    logreg_train(flatten_window(train_users, d), train_y, cfg.logreg_l2);
                const Eigen::VectorXd prob = logreg_predict(lr, flatten_window(test_users, d));
                logreg[d].add(binary_metrics(
                    test_y, std::vector<double>(prob.begin(), prob.end()), 0.5));
            }
        }
        std::cout << "split " << si + 1 << "/" << splits.size() << " done\n";
    }

    write_metrics_csv(cfg.out_dir + "/metrics_plstm_plus.csv", plstm_plus);
    if (cfg.eval_ablation) write_metrics_csv(cfg.out_dir + "/metrics_plstm.csv", plstm);
    if (cfg.eval_logreg) write_metrics_csv(cfg.out_dir + "/metrics_logreg.csv", logreg);
}

void cmd_predict(const PipelineConfig& cfg, const std::string& input_path,
                 std::optional<int> days_override) {
    ensure_out_dir(cfg);
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_file());
    const std::vector<ActivitySeries> series =
        load_activities(input_path, config_format(cfg));
    const int d = days_override.value_or(ckpt.config.days_window);

    std::vector<std::string> type_names;
    if (fs::exists(cfg.cluster_model_file())) {
        type_names = ClusterPipelineModel::load(cfg.cluster_model_file()).type_names;
    }
    auto name_of = [&type_names](int index) {
        if (index >= 0 && index < static_cast<int>(type_names.size())) return type_names[index];
        return "type" + std::to_string(index);
    };

    const std::string out_path = cfg.out_dir + "/predictions.csv";
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write '" + out_path + "'");
    out << "user_id,churn_prob,type_index,type_name";
    for (int k = 0; k < ckpt.model.config.k_types; ++k) out << ",w" << k;
    out << '\n';
    for (const auto& s : series) {
        const Prediction p = predict(ckpt.model, s, d);
        out << s.user_id << ',' << format_double(p.churn_prob) << ',' << p.type_index << ','
            << name_of(p.type_index);
        for (Eigen::Index k = 0; k < p.type_weights.size(); ++k) {
            out << ',' << format_double(p.type_weights[k]);
        }
        out << '\n';
    }
    std::cout << "predicted " << series.size() << " users at d=" << d << '\n';
}

} // namespace churnkit
