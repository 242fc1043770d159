#include "churnkit/model.hpp"

#include "churnkit/errors.hpp"

#include <cmath>

namespace churnkit {

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) {
    return std::min(1.0 - kProbFloor, std::max(kProbFloor, p));
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

Eigen::MatrixXd affine(const Eigen::MatrixXd& x, const DenseLayer& layer) {
    return (x * layer.w.transpose()).rowwise() + layer.b.transpose();
}

// Explicit fill order keeps mask generation deterministic.
Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double keep, Rng& rng) {
    Eigen::MatrixXd mask(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
    }
    return mask;
}

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = rng.uniform(-bound, bound);
        }
    }
}

LstmLayer init_lstm_layer(int hidden, int input, Rng& rng) {
    LstmLayer layer;
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
    for (auto* w : {&layer.w_i, &layer.w_f, &layer.w_c, &layer.w_o}) {
        w->resize(hidden, hidden + input);
        fill_uniform(*w, bound, rng);
    }
    layer.b_i = Eigen::VectorXd::Zero(hidden);
    layer.b_f = Eigen::VectorXd::Ones(hidden);  // forget gate starts open
    layer.b_c = Eigen::VectorXd::Zero(hidden);
    layer.b_o = Eigen::VectorXd::Zero(hidden);
    return layer;
}

} // namespace

void ModelConfig::validate() const {
    if (input_dim < 1) throw ValidationError("model config: input_dim must be >= 1");
    if (hidden_size < 1) throw ValidationError("model config: hidden_size must be >= 1");
    if (lstm_layers < 1) throw ValidationError("model config: lstm_layers must be >= 1");
    if (k_types < 1) throw ValidationError("model config: k_types must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ValidationError("model config: dropout must be in [0, 1)");
    }
    for (int d : embedding_dims) {
        if (d < 1) throw ValidationError("model config: embedding dims must be >= 1");
    }
}

ChurnModel ChurnModel::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(mix_seed(seed, 0x1017));

    ChurnModel model;
    model.config = config;
    int in = config.input_dim;
    for (int out : config.embedding_dims) {
        DenseLayer layer;
        layer.w.resize(out, in);
        fill_uniform(layer.w, 1.0 / std::sqrt(static_cast<double>(in)), rng);
        layer.b = Eigen::VectorXd::Zero(out);
        model.embedding.push_back(std::move(layer));
        in = out;
    }

    model.sub_lstms.resize(config.k_types);
    for (int k = 0; k < config.k_types; ++k) {
        int layer_in = config.embedding_output_dim();
        for (int l = 0; l < config.lstm_layers; ++l) {
            model.sub_lstms[k].push_back(init_lstm_layer(config.hidden_size, layer_in, rng));
            layer_in = config.hidden_size;
        }
    }

    model.typing_vector.resize(config.hidden_size);
    fill_uniform(model.typing_vector, 1.0 / std::sqrt(static_cast<double>(config.hidden_size)),
                 rng);
    model.churn_w.resize(config.hidden_size);
    fill_uniform(model.churn_w, 1.0 / std::sqrt(static_cast<double>(config.hidden_size)), rng);
    model.churn_b = 0.0;
    return model;
}

Eigen::VectorXd embed_day(const std::vector<DenseLayer>& layers, const Eigen::VectorXd& activity,
                          double dropout, bool training, Rng* rng) {
    Eigen::VectorXd cur = activity;
    for (std::size_t h = 0; h < layers.size(); ++h) {
        const DenseLayer& layer = layers[h];
        if (cur.size() != layer.w.cols()) {
            throw ValidationError("embedding layer " + std::to_string(h) + " expects input of size " +
                                  std::to_string(layer.w.cols()) + ", got " +
                                  std::to_string(cur.size()));
        }
        if (training && dropout > 0.0) {
            if (!rng) throw ValidationError("embed_day: training dropout needs an rng");
            const double keep = 1.0 - dropout;
            for (Eigen::Index i = 0; i < cur.size(); ++i) {
                cur[i] = rng->uniform() < keep ? cur[i] / keep : 0.0;
            }
        }
        cur = ((layer.w * cur + layer.b).array().max(0.0)).matrix();
    }
    return cur;
}

LstmOutput lstm_forward(const std::vector<LstmLayer>& layers,
                        const std::vector<Eigen::VectorXd>& inputs, double dropout, bool training,
                        Rng* rng) {
    if (layers.empty()) throw ValidationError("lstm_forward: no layers");
    if (inputs.empty()) throw ValidationError("lstm_forward: empty input sequence");

    std::vector<Eigen::VectorXd> seq = inputs;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LstmLayer& layer = layers[l];
        const int hidden = layer.hidden_size();
        Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
        for (std::size_t t = 0; t < seq.size(); ++t) {
            Eigen::VectorXd x = seq[t];
            if (x.size() != layer.input_size()) {
                throw ValidationError("lstm layer " + std::to_string(l) + " expects input of size " +
                                      std::to_string(layer.input_size()) + ", got " +
                                      std::to_string(x.size()));
            }
            if (l > 0 && training && dropout > 0.0) {
                if (!rng) throw ValidationError("lstm_forward: training dropout needs an rng");
                const double keep = 1.0 - dropout;
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    x[i] = rng->uniform() < keep ? x[i] / keep : 0.0;
                }
            }
            Eigen::VectorXd z(hidden + x.size());
            z << h, x;
            const Eigen::VectorXd i_g =
                (1.0 / (1.0 + (-(layer.w_i * z + layer.b_i)).array().exp())).matrix();
            const Eigen::VectorXd f_g =
                (1.0 / (1.0 + (-(layer.w_f * z + layer.b_f)).array().exp())).matrix();
            const Eigen::VectorXd g = (layer.w_c * z + layer.b_c).array().tanh().matrix();
            const Eigen::VectorXd o_g =
                (1.0 / (1.0 + (-(layer.w_o * z + layer.b_o)).array().exp())).matrix();
            c = (f_g.array() * c.array() + i_g.array() * g.array()).matrix();
            h = (o_g.array() * c.array().tanh()).matrix();
            seq[t] = h;
        }
    }
    LstmOutput out;
    out.hidden_seq = std::move(seq);
    out.final_h = out.hidden_seq.back();
    return out;
}

AttentionResult typed_attention(const Eigen::VectorXd& typing_vector,
                                const std::vector<Eigen::VectorXd>& typed_sequences) {
    const int k = static_cast<int>(typed_sequences.size());
    if (k == 0) throw ValidationError("typed_attention: no typed sequences");
    Eigen::VectorXd scores(k);
    for (int j = 0; j < k; ++j) {
        if (typed_sequences[j].size() != typing_vector.size()) {
            throw ValidationError("typed_attention: sequence/typing vector size mismatch");
        }
        scores[j] = typing_vector.dot(typed_sequences[j]);
    }
    const Eigen::VectorXd shifted = (scores.array() - scores.maxCoeff()).exp();
    AttentionResult res;
    res.weights = shifted / shifted.sum();
    res.pooled = Eigen::VectorXd::Zero(typing_vector.size());
    for (int j = 0; j < k; ++j) res.pooled += res.weights[j] * typed_sequences[j];
    return res;
}

DaySequence make_batch(const std::vector<const ActivitySeries*>& users, int days_window) {
    if (users.empty()) throw ValidationError("make_batch: no users");
    if (days_window < 1) throw ValidationError("make_batch: days_window must be >= 1");
    const int dims = users[0]->dims();
    for (const auto* u : users) {
        if (u->dims() != dims) throw ValidationError("make_batch: inconsistent dimensions");
        if (u->days() < days_window) {
            throw ValidationError("make_batch: user '" + u->user_id + "' has only " +
                                  std::to_string(u->days()) + " days, window needs " +
                                  std::to_string(days_window));
        }
    }
    DaySequence days(days_window);
    for (int t = 0; t < days_window; ++t) {
        days[t].resize(static_cast<Eigen::Index>(users.size()), dims);
        for (std::size_t i = 0; i < users.size(); ++i) {
            days[t].row(static_cast<Eigen::Index>(i)) = users[i]->values.col(t).transpose();
        }
    }
    return days;
}

ForwardResult forward(const ChurnModel& model, const DaySequence& raw_days, bool training,
                      Rng* rng, ForwardCache* cache) {
    const ModelConfig& cfg = model.config;
    if (raw_days.empty()) throw ValidationError("forward: empty day sequence");
    const Eigen::Index batch = raw_days[0].rows();
    for (const auto& day : raw_days) {
        if (day.rows() != batch || day.cols() != cfg.input_dim) {
            throw ValidationError("forward: day matrices must be batch x " +
                                  std::to_string(cfg.input_dim));
        }
    }
    if (training && cfg.dropout > 0.0 && !rng) {
        throw ValidationError("forward: training dropout needs an rng");
    }

    const int d = static_cast<int>(raw_days.size());
    const int k_types = cfg.k_types;
    const int n_layers = cfg.lstm_layers;
    const int hidden = cfg.hidden_size;
    const double keep = 1.0 - cfg.dropout;
    const bool use_dropout = training && cfg.dropout > 0.0;

    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;

    // Input transform.
    cc.x.resize(d);
    for (int t = 0; t < d; ++t) {
        cc.x[t] = cfg.log1p_inputs ? raw_days[t].array().log1p().matrix() : raw_days[t];
    }

    // Embedding stack, day by day.
    const std::size_t n_emb = model.embedding.size();
    cc.emb_in.assign(n_emb, {});
    cc.emb_pre.assign(n_emb, {});
    cc.emb_mask.assign(n_emb, {});
    for (std::size_t h = 0; h < n_emb; ++h) {
        cc.emb_in[h].resize(d);
        cc.emb_pre[h].resize(d);
        cc.emb_mask[h].resize(d);
    }
    cc.embedded.resize(d);
    for (int t = 0; t < d; ++t) {
        Eigen::MatrixXd cur = cc.x[t];
        for (std::size_t h = 0; h < n_emb; ++h) {
            if (use_dropout) {
                cc.emb_mask[h][t] = dropout_mask(cur.rows(), cur.cols(), keep, *rng);
                cur = cur.cwiseProduct(cc.emb_mask[h][t]);
            }
            cc.emb_in[h][t] = cur;
            cc.emb_pre[h][t] = affine(cur, model.embedding[h]);
            cur = cc.emb_pre[h][t].array().max(0.0).matrix();
        }
        cc.embedded[t] = cur;
    }

    // K parallel sub-LSTMs over the embedded days.
    cc.lstm.assign(k_types, std::vector<std::vector<LstmStepCache>>(
                                n_layers, std::vector<LstmStepCache>(d)));
    cc.lstm_mask.assign(k_types, std::vector<std::vector<Eigen::MatrixXd>>(
                                     n_layers, std::vector<Eigen::MatrixXd>(d)));
    cc.s.assign(k_types, Eigen::MatrixXd());
    for (int k = 0; k < k_types; ++k) {
        std::vector<Eigen::MatrixXd> seq(d);
        for (int t = 0; t < d; ++t) seq[t] = cc.embedded[t];
        for (int l = 0; l < n_layers; ++l) {
            const LstmLayer& layer = model.sub_lstms[k][l];
            Eigen::MatrixXd h_state = Eigen::MatrixXd::Zero(batch, hidden);
            Eigen::MatrixXd c_state = Eigen::MatrixXd::Zero(batch, hidden);
            for (int t = 0; t < d; ++t) {
                Eigen::MatrixXd x = std::move(seq[t]);
                if (l > 0 && use_dropout) {
                    cc.lstm_mask[k][l][t] = dropout_mask(x.rows(), x.cols(), keep, *rng);
                    x = x.cwiseProduct(cc.lstm_mask[k][l][t]);
                }
                LstmStepCache& step = cc.lstm[k][l][t];
                step.z.resize(batch, hidden + x.cols());
                step.z << h_state, x;
                step.i = sigmoid((step.z * layer.w_i.transpose()).rowwise() + layer.b_i.transpose());
                step.f = sigmoid((step.z * layer.w_f.transpose()).rowwise() + layer.b_f.transpose());
                step.g = ((step.z * layer.w_c.transpose()).rowwise() + layer.b_c.transpose())
                             .array()
                             .tanh()
                             .matrix();
                step.o = sigmoid((step.z * layer.w_o.transpose()).rowwise() + layer.b_o.transpose());
                c_state = step.f.cwiseProduct(c_state) + step.i.cwiseProduct(step.g);
                step.c = c_state;
                step.tanh_c = c_state.array().tanh().matrix();
                h_state = step.o.cwiseProduct(step.tanh_c);
                seq[t] = h_state;
            }
        }
        cc.s[k] = seq[d - 1];
    }

    // Attention over typed sequences.
    cc.scores.resize(batch, k_types);
    for (int k = 0; k < k_types; ++k) cc.scores.col(k) = cc.s[k] * model.typing_vector;
    cc.weights.resize(batch, k_types);
    for (Eigen::Index i = 0; i < batch; ++i) {
        const Eigen::RowVectorXd row =
            (cc.scores.row(i).array() - cc.scores.row(i).maxCoeff()).exp();
        cc.weights.row(i) = row / row.sum();
    }
    cc.pooled = Eigen::MatrixXd::Zero(batch, hidden);
    for (int k = 0; k < k_types; ++k) {
        cc.pooled += (cc.s[k].array().colwise() * cc.weights.col(k).array()).matrix();
    }

    cc.logits = ((cc.pooled * model.churn_w.transpose()).col(0).array() + model.churn_b).matrix();
    cc.probs = (1.0 / (1.0 + (-cc.logits.array()).exp())).matrix();

    ForwardResult out;
    out.churn_prob = cc.probs;
    out.type_weights = cc.weights;
    return out;
}

Prediction predict(const ChurnModel& model, const ActivitySeries& series, int days_window) {
    const std::vector<const ActivitySeries*> one = {&series};
    const ForwardResult res = forward(model, make_batch(one, days_window), false, nullptr);
    Prediction p;
    p.churn_prob = res.churn_prob[0];
    p.type_weights = res.type_weights.row(0);
    res.type_weights.row(0).maxCoeff(&p.type_index);
    return p;
}

LossParts compute_loss(const Eigen::VectorXd& churn_prob, const std::vector<bool>& churned,
                       const Eigen::MatrixXd& type_weights, const Eigen::MatrixXd& typing_targets,
                       double lambda) {
    const Eigen::Index n = churn_prob.size();
    if (static_cast<Eigen::Index>(churned.size()) != n) {
        throw ValidationError("compute_loss: label count mismatch");
    }
    LossParts parts;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = clamp_prob(churn_prob[i]);
        parts.churn += churned[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    if (lambda != 0.0) {
        if (typing_targets.rows() != n || typing_targets.cols() != type_weights.cols()) {
            throw ValidationError("compute_loss: typing target shape mismatch");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < type_weights.cols(); ++k) {
                parts.typing -= typing_targets(i, k) * std::log(clamp_prob(type_weights(i, k)));
            }
        }
    }
    parts.total = parts.churn + lambda * parts.typing;
    return parts;
}

Gradients Gradients::zeros_like(const ChurnModel& model) {
    Gradients g;
    g.embedding.resize(model.embedding.size());
    for (std::size_t h = 0; h < model.embedding.size(); ++h) {
        g.embedding[h].w = Eigen::MatrixXd::Zero(model.embedding[h].w.rows(),
                                                 model.embedding[h].w.cols());
        g.embedding[h].b = Eigen::VectorXd::Zero(model.embedding[h].b.size());
    }
    g.sub_lstms.resize(model.sub_lstms.size());
    for (std::size_t k = 0; k < model.sub_lstms.size(); ++k) {
        for (const LstmLayer& layer : model.sub_lstms[k]) {
            LstmLayer z;
            z.w_i = Eigen::MatrixXd::Zero(layer.w_i.rows(), layer.w_i.cols());
            z.w_f = z.w_i;
            z.w_c = z.w_i;
            z.w_o = z.w_i;
            z.b_i = Eigen::VectorXd::Zero(layer.b_i.size());
            z.b_f = z.b_i;
            z.b_c = z.b_i;
            z.b_o = z.b_i;
            g.sub_lstms[k].push_back(std::move(z));
        }
    }
    g.typing_vector = Eigen::VectorXd::Zero(model.typing_vector.size());
    g.churn_w = Eigen::RowVectorXd::Zero(model.churn_w.size());
    g.churn_b = 0.0;
    return g;
}

Gradients backward(const ChurnModel& model, const ForwardCache& cache,
                   const std::vector<bool>& churned, const Eigen::MatrixXd& typing_targets,
                   double lambda) {
    const ModelConfig& cfg = model.config;
    const Eigen::Index batch = cache.probs.size();
    const int d = static_cast<int>(cache.x.size());
    const int k_types = cfg.k_types;
    const int n_layers = cfg.lstm_layers;
    const int hidden = cfg.hidden_size;
    if (static_cast<Eigen::Index>(churned.size()) != batch) {
        throw ValidationError("backward: label count mismatch");
    }

    Gradients g = Gradients::zeros_like(model);

    // Churn head.
    Eigen::VectorXd dlogits(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        dlogits[i] = cache.probs[i] - (churned[i] ? 1.0 : 0.0);
    }
    g.churn_w = (cache.pooled.transpose() * dlogits).transpose();
    g.churn_b = dlogits.sum();
    const Eigen::MatrixXd dpooled = dlogits * model.churn_w;  // batch x hidden

    // Attention weights receive gradient from the pooled sum and, when
    // enabled, from the typing cross entropy.
    Eigen::MatrixXd dweights(batch, k_types);
    for (int k = 0; k < k_types; ++k) {
        dweights.col(k) = dpooled.cwiseProduct(cache.s[k]).rowwise().sum();
    }
    if (lambda != 0.0) {
        if (typing_targets.rows() != batch || typing_targets.cols() != k_types) {
            throw ValidationError("backward: typing target shape mismatch");
        }
        for (Eigen::Index i = 0; i < batch; ++i) {
            for (int k = 0; k < k_types; ++k) {
                const double w = cache.weights(i, k);
                if (w > kProbFloor) {
                    dweights(i, k) -= lambda * typing_targets(i, k) / w;
                }
            }
        }
    }

    // Row-wise softmax backprop.
    Eigen::MatrixXd dscores(batch, k_types);
    for (Eigen::Index i = 0; i < batch; ++i) {
        const double dot = dweights.row(i).dot(cache.weights.row(i));
        dscores.row(i) =
            cache.weights.row(i).cwiseProduct((dweights.row(i).array() - dot).matrix());
    }

    for (int k = 0; k < k_types; ++k) {
        g.typing_vector += cache.s[k].transpose() * dscores.col(k);
    }

    // Per sub-LSTM BPTT; bottom-layer input gradients accumulate into the
    // shared embedding.
    std::vector<Eigen::MatrixXd> dembedded(d, Eigen::MatrixXd::Zero(batch,
                                                                   cfg.embedding_output_dim()));
    for (int k = 0; k < k_types; ++k) {
        // ds_k: from the pooled sum and from the attention scores.
        Eigen::MatrixXd dh_top =
            (dpooled.array().colwise() * cache.weights.col(k).array()).matrix();
        dh_top += dscores.col(k) * model.typing_vector.transpose();

        std::vector<Eigen::MatrixXd> dx_from_above(d);
        for (int l = n_layers - 1; l >= 0; --l) {
            const LstmLayer& layer = model.sub_lstms[k][l];
            LstmLayer& grad = g.sub_lstms[k][l];
            const int in_size = layer.input_size();

            Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(batch, hidden);
            Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(batch, hidden);
            std::vector<Eigen::MatrixXd> dx(d);
            for (int t = d - 1; t >= 0; --t) {
                if (l == n_layers - 1) {
                    if (t == d - 1) dh += dh_top;
                } else {
                    Eigen::MatrixXd from_above = dx_from_above[t];
                    if (!cache.lstm_mask[k][l + 1][t].size()) {
                        dh += from_above;
                    } else {
                        dh += from_above.cwiseProduct(cache.lstm_mask[k][l + 1][t]);
                    }
                }
                const LstmStepCache& step = cache.lstm[k][l][t];
                const Eigen::MatrixXd d_o = dh.cwiseProduct(step.tanh_c);
                dc += dh.cwiseProduct(step.o)
                          .cwiseProduct((1.0 - step.tanh_c.array().square()).matrix());
                const Eigen::MatrixXd c_prev =
                    t == 0 ? Eigen::MatrixXd::Zero(batch, hidden) : cache.lstm[k][l][t - 1].c;
                const Eigen::MatrixXd d_f = dc.cwiseProduct(c_prev);
                const Eigen::MatrixXd d_i = dc.cwiseProduct(step.g);
                const Eigen::MatrixXd d_g = dc.cwiseProduct(step.i);

                const Eigen::MatrixXd da_i =
                    d_i.cwiseProduct(step.i).cwiseProduct((1.0 - step.i.array()).matrix());
                const Eigen::MatrixXd da_f =
                    d_f.cwiseProduct(step.f).cwiseProduct((1.0 - step.f.array()).matrix());
                const Eigen::MatrixXd da_o =
                    d_o.cwiseProduct(step.o).cwiseProduct((1.0 - step.o.array()).matrix());
                const Eigen::MatrixXd da_g =
                    d_g.cwiseProduct((1.0 - step.g.array().square()).matrix());

                grad.w_i += da_i.transpose() * step.z;
                grad.w_f += da_f.transpose() * step.z;
                grad.w_c += da_g.transpose() * step.z;
                grad.w_o += da_o.transpose() * step.z;
                grad.b_i += da_i.colwise().sum().transpose();
                grad.b_f += da_f.colwise().sum().transpose();
                grad.b_c += da_g.colwise().sum().transpose();
                grad.b_o += da_o.colwise().sum().transpose();

                const Eigen::MatrixXd dz = da_i * layer.w_i + da_f * layer.w_f +
                                           da_g * layer.w_c + da_o * layer.w_o;
                dh = dz.leftCols(hidden);
                dx[t] = dz.rightCols(in_size);
                dc = dc.cwiseProduct(step.f);
            }
            dx_from_above = std::move(dx);
        }
        for (int t = 0; t < d; ++t) {
            if (!cache.lstm_mask[k][0][t].size()) {
                dembedded[t] += dx_from_above[t];
            } else {
                dembedded[t] += dx_from_above[t].cwiseProduct(cache.lstm_mask[k][0][t]);
            }
        }
    }

    for (int t = 0; t < d; ++t) {
        Eigen::MatrixXd dcur = dembedded[t];
        for (int h = static_cast<int>(model.embedding.size()) - 1; h >= 0; --h) {
            const Eigen::MatrixXd dpre =
                dcur.cwiseProduct((cache.emb_pre[h][t].array() > 0.0).cast<double>().matrix());
            g.embedding[h].w += dpre.transpose() * cache.emb_in[h][t];
            g.embedding[h].b += dpre.colwise().sum().transpose();
            if (h > 0) {
                dcur = dpre * model.embedding[h].w;
                if (cache.emb_mask[h][t].size()) {
                    dcur = dcur.cwiseProduct(cache.emb_mask[h][t]);
                }
            }
        }
    }

    for (const ParamBlock& block : param_blocks(g)) {
        for (std::ptrdiff_t i = 0; i < block.size; ++i) {
            if (!std::isfinite(block.data[i])) {
                throw NumericalError("non-finite gradient in parameter block '" + block.name + "'");
            }
        }
    }
    return g;
}

namespace {

template <typename M>
std::vector<ParamBlock> collect_blocks(M& m) {
    std::vector<ParamBlock> blocks;
    auto add = [&blocks](const std::string& name, auto& mat) {
        blocks.push_back({name, mat.data(), static_cast<std::ptrdiff_t>(mat.size())});
    };
    for (std::size_t h = 0; h < m.embedding.size(); ++h) {
        add("embedding" + std::to_string(h) + ".w", m.embedding[h].w);
        add("embedding" + std::to_string(h) + ".b", m.embedding[h].b);
    }
    for (std::size_t k = 0; k < m.sub_lstms.size(); ++k) {
        for (std::size_t l = 0; l < m.sub_lstms[k].size(); ++l) {
            const std::string prefix =
                "lstm" + std::to_string(k) + ".layer" + std::to_string(l) + ".";
            add(prefix + "w_i", m.sub_lstms[k][l].w_i);
            add(prefix + "w_f", m.sub_lstms[k][l].w_f);
            add(prefix + "w_c", m.sub_lstms[k][l].w_c);
            add(prefix + "w_o", m.sub_lstms[k][l].w_o);
            add(prefix + "b_i", m.sub_lstms[k][l].b_i);
            add(prefix + "b_f", m.sub_lstms[k][l].b_f);
            add(prefix + "b_c", m.sub_lstms[k][l].b_c);
            add(prefix + "b_o", m.sub_lstms[k][l].b_o);
        }
    }
    add("typing_vector", m.typing_vector);
    add("churn_w", m.churn_w);
    blocks.push_back({"churn_b", &m.churn_b, 1});
    return blocks;
}

} // namespace

std::vector<ParamBlock> param_blocks(ChurnModel& model) { return collect_blocks(model); }
std::vector<ParamBlock> param_blocks(Gradients& grads) { return collect_blocks(grads); }

} // namespace churnkit
