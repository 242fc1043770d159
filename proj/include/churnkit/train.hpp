#pragma once

#include "churnkit/metrics.hpp"
#include "churnkit/model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace churnkit {

struct TrainConfig {
    double lambda = 0.1;        // typing-loss weight; 0 disables joint training
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 100;
    int days_window = kDefaultDays;  // days of input the model sees
    std::uint64_t seed = 0;
    double dropout = 0.2;
    int k_types = 0;  // 0 = take K from the typing targets
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int hidden_size = 64;
    std::vector<int> embedding_dims = {16};
    int lstm_layers = 1;

    void validate() const;
    ModelConfig model_config(int input_dim, int k) const;
};

struct EpochStats {
    int epoch = 0;
    double total = 0.0;
    double churn = 0.0;
    double typing = 0.0;
};

struct TrainResult {
    ChurnModel model;
    std::vector<EpochStats> trace;  // full-train-set loss per epoch, dropout off
};

// Mini-batch Adam on the joint loss. Bit-reproducible given the seed.
TrainResult train(const std::vector<const ActivitySeries*>& users,
                  const std::vector<bool>& churned, const Eigen::MatrixXd& typing_targets,
                  const TrainConfig& config);

struct EvalResult {
    BinaryMetrics churn;       // threshold 0.5
    MultiClassMetrics types;   // argmax attention vs provided type labels
    bool has_types = false;
};

EvalResult evaluate(const ChurnModel& model, const std::vector<const ActivitySeries*>& users,
                    const std::vector<bool>& churned, const std::vector<int>& type_labels,
                    int days_window);

std::vector<const ActivitySeries*> series_pointers(const std::vector<ActivitySeries>& series);

// Versioned JSON checkpoint: every parameter block with shapes, the training
// config, epoch and seed. Loading an unknown version fails loudly.
void save_checkpoint(const std::string& path, const ChurnModel& model, const TrainConfig& config,
                     int epoch);

struct Checkpoint {
    ChurnModel model;
    TrainConfig config;
    int epoch = 0;
};

Checkpoint load_checkpoint(const std::string& path);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

} // namespace churnkit
