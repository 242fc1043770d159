#pragma once

#include "churnkit/kmeans.hpp"
#include "churnkit/synthetic.hpp"
#include "churnkit/train.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace churnkit {

struct PipelineConfig {
    std::string out_dir = "out";
    std::string activities_path;          // defaults to <out_dir>/activities.<format>
    std::string activities_format = "csv";
    std::string cluster_model_path;       // defaults to <out_dir>/cluster_model.json
    std::string checkpoint_path;          // defaults to <out_dir>/checkpoint.json

    SyntheticSpec generator = default_six_archetype_spec();
    int n_users = 600;

    KRange k_range;
    std::uint64_t cluster_seed = 7;
    std::vector<std::string> type_names;

    TrainConfig train;

    std::vector<int> eval_days;  // default 1..14
    int eval_repeats = 10;
    double eval_ratio = 0.8;
    std::uint64_t eval_seed = 11;
    bool eval_logreg = true;
    bool eval_ablation = true;   // lambda = 0 run with the same K
    double logreg_l2 = 1.0;

    double core_percentile = 0.05;

    std::string activities_file() const;
    std::string cluster_model_file() const;
    std::string checkpoint_file() const;
};

PipelineConfig load_pipeline_config(const std::string& path);

// Subcommand bodies; each validates inputs, writes artifacts under out_dir and
// is byte-deterministic given config and seeds.
void cmd_generate(const PipelineConfig& config);
void cmd_extract(const PipelineConfig& config);
void cmd_cluster(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
void cmd_evaluate(const PipelineConfig& config);
void cmd_predict(const PipelineConfig& config, const std::string& input_path,
                 std::optional<int> days_override);

} // namespace churnkit
