#include "churnkit/train.hpp"

#include "churnkit/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>

namespace churnkit {

void TrainConfig::validate() const {
    if (lambda < 0.0) throw ValidationError("train config: lambda must be >= 0");
    if (learning_rate <= 0.0) throw ValidationError("train config: learning rate must be > 0");
    if (batch_size < 1) throw ValidationError("train config: batch size must be >= 1");
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (days_window < 1 || days_window > kDefaultDays) {
        throw ValidationError("train config: days_window must be in [1, " +
                              std::to_string(kDefaultDays) + "]");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ValidationError("train config: dropout must be in [0, 1)");
    }
}

ModelConfig TrainConfig::model_config(int input_dim, int k) const {
    ModelConfig mc;
    mc.input_dim = input_dim;
    mc.embedding_dims = embedding_dims;
    mc.hidden_size = hidden_size;
    mc.lstm_layers = lstm_layers;
    mc.k_types = k;
    mc.dropout = dropout;
    return mc;
}

std::vector<const ActivitySeries*> series_pointers(const std::vector<ActivitySeries>& series) {
    std::vector<const ActivitySeries*> ptrs;
    ptrs.reserve(series.size());
    for (const auto& s : series) ptrs.push_back(&s);
    return ptrs;
}

namespace {

struct AdamState {
    Eigen::VectorXd m, v;
    long t = 0;
};

void adam_step(std::vector<ParamBlock>& params, std::vector<ParamBlock>& grads, AdamState& state,
               const TrainConfig& cfg) {
    ++state.t;
    const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    std::ptrdiff_t offset = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::ptrdiff_t i = 0; i < params[b].size; ++i, ++offset) {
            const double g = grads[b].data[i];
            double& m = state.m[offset];
            double& v = state.v[offset];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m / correction1;
            const double v_hat = v / correction2;
            params[b].data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

} // namespace

TrainResult train(const std::vector<const ActivitySeries*>& users,
                  const std::vector<bool>& churned, const Eigen::MatrixXd& typing_targets,
                  const TrainConfig& config) {
    config.validate();
    const int n = static_cast<int>(users.size());
    if (n == 0) throw ValidationError("train: no users");
    if (static_cast<int>(churned.size()) != n) throw ValidationError("train: label count mismatch");

    int k = config.k_types;
    if (k == 0) k = static_cast<int>(typing_targets.cols());
    if (k < 1) throw ValidationError("train: k_types unset and no typing targets given");
    if (config.lambda > 0.0 &&
        (typing_targets.rows() != n || typing_targets.cols() != k)) {
        throw ValidationError("train: typing targets must be n x k when lambda > 0");
    }

    TrainResult result;
    result.model = ChurnModel::init(config.model_config(users[0]->dims(), k), config.seed);

    std::vector<ParamBlock> params = param_blocks(result.model);
    const std::ptrdiff_t total_size = std::accumulate(
        params.begin(), params.end(), std::ptrdiff_t{0},
        [](std::ptrdiff_t acc, const ParamBlock& b) { return acc + b.size; });
    AdamState adam;
    adam.m = Eigen::VectorXd::Zero(total_size);
    adam.v = Eigen::VectorXd::Zero(total_size);

    Rng shuffle_rng(mix_seed(config.seed, 0xba7c4));
    Rng dropout_rng(mix_seed(config.seed, 0xd407));

    const DaySequence full_batch = make_batch(users, config.days_window);
    const Eigen::MatrixXd empty_targets;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (int start = 0; start < n; start += config.batch_size) {
            const int size = std::min(config.batch_size, n - start);
            std::vector<const ActivitySeries*> batch_users(size);
            std::vector<bool> batch_labels(size);
            Eigen::MatrixXd batch_targets;
            if (config.lambda > 0.0) batch_targets.resize(size, k);
            for (int i = 0; i < size; ++i) {
                const int idx = order[start + i];
                batch_users[i] = users[idx];
                batch_labels[i] = churned[idx];
                if (config.lambda > 0.0) batch_targets.row(i) = typing_targets.row(idx);
            }

            ForwardCache cache;
            forward(result.model, make_batch(batch_users, config.days_window), true, &dropout_rng,
                    &cache);
            Gradients grads =
                backward(result.model, cache, batch_labels, batch_targets, config.lambda);
            std::vector<ParamBlock> grad_blocks = param_blocks(grads);
            adam_step(params, grad_blocks, adam, config);
        }

        const ForwardResult eval = forward(result.model, full_batch, false, nullptr);
        const LossParts losses =
            compute_loss(eval.churn_prob, churned,
                         eval.type_weights, config.lambda > 0.0 ? typing_targets : empty_targets,
                         config.lambda);
        result.trace.push_back({epoch, losses.total, losses.churn, losses.typing});
    }
    return result;
}

EvalResult evaluate(const ChurnModel& model, const std::vector<const ActivitySeries*>& users,
                    const std::vector<bool>& churned, const std::vector<int>& type_labels,
                    int days_window) {
    if (users.empty()) throw ValidationError("evaluate: no users");
    if (churned.size() != users.size()) throw ValidationError("evaluate: label count mismatch");

    const ForwardResult res = forward(model, make_batch(users, days_window), false, nullptr);
    EvalResult out;
    std::vector<double> scores(res.churn_prob.begin(), res.churn_prob.end());
    out.churn = binary_metrics(churned, scores, 0.5);

    if (!type_labels.empty()) {
        if (type_labels.size() != users.size()) {
            throw ValidationError("evaluate: type label count mismatch");
        }
        std::vector<int> pred(users.size());
        for (std::size_t i = 0; i < users.size(); ++i) {
            int arg = 0;
            res.type_weights.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
            pred[i] = arg;
        }
        out.types = multiclass_metrics(type_labels, pred, model.config.k_types);
        out.has_types = true;
    }
    return out;
}

namespace {

constexpr int kCheckpointVersion = 1;

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
    const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j.at(r).size()) != cols) {
            throw ParseError("checkpoint: ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

std::vector<double> vector_to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

void to_json_model_config(nlohmann::json& j, const ModelConfig& c) {
    j = {{"input_dim", c.input_dim},     {"embedding_dims", c.embedding_dims},
         {"hidden_size", c.hidden_size}, {"lstm_layers", c.lstm_layers},
         {"k_types", c.k_types},         {"dropout", c.dropout},
         {"log1p_inputs", c.log1p_inputs}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.input_dim = j.at("input_dim").get<int>();
    c.embedding_dims = j.at("embedding_dims").get<std::vector<int>>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.lstm_layers = j.at("lstm_layers").get<int>();
    c.k_types = j.at("k_types").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.log1p_inputs = j.at("log1p_inputs").get<bool>();
    return c;
}

} // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"lambda", c.lambda},
         {"learning_rate", c.learning_rate},
         {"batch_size", c.batch_size},
         {"epochs", c.epochs},
         {"days_window", c.days_window},
         {"seed", c.seed},
         {"dropout", c.dropout},
         {"k_types", c.k_types},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"adam_eps", c.adam_eps},
         {"hidden_size", c.hidden_size},
         {"embedding_dims", c.embedding_dims},
         {"lstm_layers", c.lstm_layers}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c = TrainConfig{};
    c.lambda = j.value("lambda", c.lambda);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.days_window = j.value("days_window", c.days_window);
    c.seed = j.value("seed", c.seed);
    c.dropout = j.value("dropout", c.dropout);
    c.k_types = j.value("k_types", c.k_types);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.hidden_size = j.value("hidden_size", c.hidden_size);
    c.embedding_dims = j.value("embedding_dims", c.embedding_dims);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
}

void save_checkpoint(const std::string& path, const ChurnModel& model, const TrainConfig& config,
                     int epoch) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["epoch"] = epoch;
    j["seed"] = config.seed;
    nlohmann::json jt;
    to_json(jt, config);
    j["train_config"] = jt;
    nlohmann::json jm;
    to_json_model_config(jm, model.config);
    j["model_config"] = jm;

    nlohmann::json emb = nlohmann::json::array();
    for (const auto& layer : model.embedding) {
        emb.push_back({{"w", matrix_to_json(layer.w)}, {"b", vector_to_std(layer.b)}});
    }
    j["embedding"] = emb;

    nlohmann::json lstms = nlohmann::json::array();
    for (const auto& sub : model.sub_lstms) {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& layer : sub) {
            layers.push_back({{"w_i", matrix_to_json(layer.w_i)},
                              {"w_f", matrix_to_json(layer.w_f)},
                              {"w_c", matrix_to_json(layer.w_c)},
                              {"w_o", matrix_to_json(layer.w_o)},
                              {"b_i", vector_to_std(layer.b_i)},
                              {"b_f", vector_to_std(layer.b_f)},
                              {"b_c", vector_to_std(layer.b_c)},
                              {"b_o", vector_to_std(layer.b_o)}});
        }
        lstms.push_back(std::move(layers));
    }
    j["sub_lstms"] = lstms;
    j["typing_vector"] = vector_to_std(model.typing_vector);
    j["churn_w"] = vector_to_std(model.churn_w.transpose());
    j["churn_b"] = model.churn_b;

    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write checkpoint '" + path + "'");
    out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!j.contains("format_version") ||
        j.at("format_version").get<int>() != kCheckpointVersion) {
        throw ValidationError("checkpoint '" + path + "': unsupported format version");
    }

    Checkpoint ckpt;
    ckpt.epoch = j.at("epoch").get<int>();
    from_json(j.at("train_config"), ckpt.config);
    ckpt.model.config = model_config_from_json(j.at("model_config"));

    for (const auto& jl : j.at("embedding")) {
        DenseLayer layer;
        layer.w = matrix_from_json(jl.at("w"));
        layer.b = vector_from_json(jl.at("b"));
        ckpt.model.embedding.push_back(std::move(layer));
    }
    for (const auto& js : j.at("sub_lstms")) {
        std::vector<LstmLayer> sub;
        for (const auto& jl : js) {
            LstmLayer layer;
            layer.w_i = matrix_from_json(jl.at("w_i"));
            layer.w_f = matrix_from_json(jl.at("w_f"));
            layer.w_c = matrix_from_json(jl.at("w_c"));
            layer.w_o = matrix_from_json(jl.at("w_o"));
            layer.b_i = vector_from_json(jl.at("b_i"));
            layer.b_f = vector_from_json(jl.at("b_f"));
            layer.b_c = vector_from_json(jl.at("b_c"));
            layer.b_o = vector_from_json(jl.at("b_o"));
            sub.push_back(std::move(layer));
        }
        ckpt.model.sub_lstms.push_back(std::move(sub));
    }
    ckpt.model.typing_vector = vector_from_json(j.at("typing_vector"));
    ckpt.model.churn_w = vector_from_json(j.at("churn_w")).transpose();
    ckpt.model.churn_b = j.at("churn_b").get<double>();

    // Shape audit against the declared config.
    const ModelConfig& cfg = ckpt.model.config;
    if (static_cast<int>(ckpt.model.sub_lstms.size()) != cfg.k_types) {
        throw ValidationError("checkpoint '" + path + "': sub-LSTM count does not match config");
    }
    for (const auto& sub : ckpt.model.sub_lstms) {
        if (static_cast<int>(sub.size()) != cfg.lstm_layers) {
            throw ValidationError("checkpoint '" + path + "': LSTM layer count mismatch");
        }
        for (const auto& layer : sub) {
            if (layer.hidden_size() != cfg.hidden_size) {
                throw ValidationError("checkpoint '" + path + "': hidden size mismatch");
            }
        }
    }
    if (ckpt.model.typing_vector.size() != cfg.hidden_size ||
        ckpt.model.churn_w.size() != cfg.hidden_size) {
        throw ValidationError("checkpoint '" + path + "': head size mismatch");
    }
    return ckpt;
}

} // namespace churnkit
