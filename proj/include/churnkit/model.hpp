#pragma once

#include "churnkit/rng.hpp"
#include "churnkit/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace churnkit {

struct ModelConfig {
    int input_dim = kDefaultDims;
    std::vector<int> embedding_dims = {16};  // output width per embedding layer
    int hidden_size = 64;
    int lstm_layers = 1;
    int k_types = 6;  // number of parallel sub-LSTMs
    double dropout = 0.2;
    bool log1p_inputs = true;  // tame the skew of raw counts

    int embedding_output_dim() const {
        return embedding_dims.empty() ? input_dim : embedding_dims.back();
    }
    void validate() const;
};

struct DenseLayer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;
};

// One LSTM layer; gate weights map the [h_{t-1}, x_t] concatenation to the
// hidden size.
struct LstmLayer {
    Eigen::MatrixXd w_i, w_f, w_c, w_o;  // hidden x (hidden + input)
    Eigen::VectorXd b_i, b_f, b_c, b_o;

    int hidden_size() const { return static_cast<int>(w_i.rows()); }
    int input_size() const { return static_cast<int>(w_i.cols() - w_i.rows()); }
};

// Embedding stack, K parallel sub-LSTMs, typing vector, churn head.
struct ChurnModel {
    ModelConfig config;
    std::vector<DenseLayer> embedding;
    std::vector<std::vector<LstmLayer>> sub_lstms;  // K x layers
    Eigen::VectorXd typing_vector;
    Eigen::RowVectorXd churn_w;
    double churn_b = 0.0;

    // Uniform +-1/sqrt(fan_in) weights, zero biases except forget gates at +1.
    static ChurnModel init(const ModelConfig& config, std::uint64_t seed);
};

// ---- single-sample building blocks ----

// Per-layer dropout -> affine -> ReLU over one day's activity vector.
// Dropout only fires when training, with inverted scaling.
Eigen::VectorXd embed_day(const std::vector<DenseLayer>& layers, const Eigen::VectorXd& activity,
                          double dropout, bool training, Rng* rng);

struct LstmOutput {
    Eigen::VectorXd final_h;                 // top layer, last step
    std::vector<Eigen::VectorXd> hidden_seq; // top layer, every step
};

// Exact gate recurrence with h_0 = c_0 = 0; inter-layer dropout when training.
LstmOutput lstm_forward(const std::vector<LstmLayer>& layers,
                        const std::vector<Eigen::VectorXd>& inputs, double dropout = 0.0,
                        bool training = false, Rng* rng = nullptr);

struct AttentionResult {
    Eigen::VectorXd weights;  // softmax over typed-sequence scores
    Eigen::VectorXd pooled;   // weighted sum of typed sequences
};

AttentionResult typed_attention(const Eigen::VectorXd& typing_vector,
                                const std::vector<Eigen::VectorXd>& typed_sequences);

// ---- batched path (training and bulk inference) ----

// One matrix per day, batch x input_dim, raw counts.
using DaySequence = std::vector<Eigen::MatrixXd>;

DaySequence make_batch(const std::vector<const ActivitySeries*>& users, int days_window);

struct LstmStepCache {
    Eigen::MatrixXd z;  // [h_{t-1}, x_t]
    Eigen::MatrixXd i, f, g, o, c, tanh_c;
};

struct ForwardCache {
    DaySequence x;                                       // model inputs (post transform)
    std::vector<std::vector<Eigen::MatrixXd>> emb_in;    // layer x day, post dropout
    std::vector<std::vector<Eigen::MatrixXd>> emb_pre;   // layer x day, pre ReLU
    std::vector<std::vector<Eigen::MatrixXd>> emb_mask;  // layer x day, empty if unused
    std::vector<Eigen::MatrixXd> embedded;               // day
    std::vector<std::vector<std::vector<LstmStepCache>>> lstm;       // k x layer x step
    std::vector<std::vector<std::vector<Eigen::MatrixXd>>> lstm_mask;  // k x layer x step
    std::vector<Eigen::MatrixXd> s;  // k: batch x hidden
    Eigen::MatrixXd scores, weights; // batch x K
    Eigen::MatrixXd pooled;          // batch x hidden
    Eigen::VectorXd logits, probs;   // batch
};

struct ForwardResult {
    Eigen::VectorXd churn_prob;
    Eigen::MatrixXd type_weights;
};

ForwardResult forward(const ChurnModel& model, const DaySequence& raw_days, bool training,
                      Rng* rng, ForwardCache* cache = nullptr);

struct Prediction {
    double churn_prob = 0.5;
    Eigen::VectorXd type_weights;
    int type_index = 0;
};

// Deterministic inference on the first days_window days of one user.
Prediction predict(const ChurnModel& model, const ActivitySeries& series, int days_window);

struct LossParts {
    double total = 0.0;
    double churn = 0.0;   // summed binary log loss
    double typing = 0.0;  // summed cross entropy of targets vs attention
};

// Probabilities are clamped to [1e-12, 1 - 1e-12] before logs.
LossParts compute_loss(const Eigen::VectorXd& churn_prob, const std::vector<bool>& churned,
                       const Eigen::MatrixXd& type_weights, const Eigen::MatrixXd& typing_targets,
                       double lambda);

struct Gradients {
    std::vector<DenseLayer> embedding;
    std::vector<std::vector<LstmLayer>> sub_lstms;
    Eigen::VectorXd typing_vector;
    Eigen::RowVectorXd churn_w;
    double churn_b = 0.0;

    static Gradients zeros_like(const ChurnModel& model);
};

// Exact gradients of compute_loss via backpropagation through time, honoring
// the dropout masks recorded in the cache. Throws NumericalError naming the
// first parameter block with a non-finite gradient.
Gradients backward(const ChurnModel& model, const ForwardCache& cache,
                   const std::vector<bool>& churned, const Eigen::MatrixXd& typing_targets,
                   double lambda);

// Flat views over every parameter block, in a fixed order shared between a
// model and its gradients.
struct ParamBlock {
    std::string name;
    double* data = nullptr;
    std::ptrdiff_t size = 0;
};

std::vector<ParamBlock> param_blocks(ChurnModel& model);
std::vector<ParamBlock> param_blocks(Gradients& grads);

} // namespace churnkit
