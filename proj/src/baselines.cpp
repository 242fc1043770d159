#include "churnkit/baselines.hpp"

#include "churnkit/errors.hpp"
#include "churnkit/rng.hpp"

#include <cmath>
#include <numeric>

namespace churnkit {

std::vector<Split> make_splits(int n, double train_ratio, int n_repeats, std::uint64_t seed) {
    if (n < 2) throw ValidationError("make_splits: need at least 2 users");
    if (train_ratio <= 0.0 || train_ratio >= 1.0) {
        throw ValidationError("make_splits: ratio must be in (0, 1)");
    }
    if (n_repeats < 1) throw ValidationError("make_splits: n_repeats must be >= 1");

    const int n_train = std::clamp(static_cast<int>(std::llround(train_ratio * n)), 1, n - 1);
    std::vector<Split> splits;
    splits.reserve(n_repeats);
    for (int r = 0; r < n_repeats; ++r) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        rng.shuffle(order);
        Split s;
        s.seed = seed;
        s.train_ratio = train_ratio;
        s.train_idx.assign(order.begin(), order.begin() + n_train);
        s.test_idx.assign(order.begin() + n_train, order.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

Eigen::MatrixXd flatten_window(const std::vector<const ActivitySeries*>& users, int days_window) {
    if (users.empty()) throw ValidationError("flatten_window: no users");
    const int dims = users[0]->dims();
    Eigen::MatrixXd x(users.size(), dims * days_window);
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (users[i]->dims() != dims || users[i]->days() < days_window) {
            throw ValidationError("flatten_window: user '" + users[i]->user_id +
                                  "' has incompatible shape");
        }
        for (int t = 0; t < days_window; ++t) {
            x.block(static_cast<Eigen::Index>(i), t * dims, 1, dims) =
                users[i]->values.col(t).transpose();
        }
    }
    return x;
}

namespace {

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Largest eigenvalue of X^T X via power iteration; deterministic start.
double largest_gram_eigenvalue(const Eigen::MatrixXd& x) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(x.cols());
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd next = x.transpose() * (x * v);
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        next /= norm;
        const double new_lambda = next.dot(x.transpose() * (x * next));
        if (std::abs(new_lambda - lambda) < 1e-9 * std::max(1.0, std::abs(new_lambda))) {
            return new_lambda;
        }
        lambda = new_lambda;
        v = next;
    }
    return lambda;
}

} // namespace

LogRegModel logreg_train(const Eigen::MatrixXd& x_raw, const std::vector<bool>& y, double l2,
                         int max_iter, double tol, const Eigen::VectorXd* w0, double b0) {
    const Eigen::Index n = x_raw.rows();
    const Eigen::Index f = x_raw.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) {
        throw ValidationError("logreg_train: label count mismatch");
    }

    LogRegModel model;
    model.l2 = l2;
    model.feat_mean = x_raw.colwise().mean();
    Eigen::MatrixXd centered = x_raw.rowwise() - model.feat_mean;
    model.feat_scale = centered.array().square().colwise().mean().sqrt();
    for (Eigen::Index c = 0; c < f; ++c) {
        if (model.feat_scale[c] == 0.0) model.feat_scale[c] = 1.0;
    }
    const Eigen::MatrixXd x = centered.array().rowwise() / model.feat_scale.array();

    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) target[i] = y[i] ? 1.0 : 0.0;

    model.w = w0 ? *w0 : Eigen::VectorXd::Zero(f);
    model.b = w0 ? b0 : 0.0;

    // Log loss gradient Lipschitz constant: 0.25 * lambda_max([X 1]^T [X 1]) + l2.
    const double lip = 0.25 * (largest_gram_eigenvalue(x) + static_cast<double>(n)) + l2;
    const double step = 1.0 / std::max(lip, 1e-12);

    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd p = sigmoid_vec(x * model.w + Eigen::VectorXd::Constant(n, model.b));
        const Eigen::VectorXd diff = p - target;
        const Eigen::VectorXd grad_w = x.transpose() * diff + l2 * model.w;
        const double grad_b = diff.sum();
        const double grad_norm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
        if (grad_norm < tol) break;
        model.w -= step * grad_w;
        model.b -= step * grad_b;
    }
    return model;
}

Eigen::VectorXd logreg_predict(const LogRegModel& model, const Eigen::MatrixXd& x_raw) {
    if (x_raw.cols() != model.w.size()) {
        throw ValidationError("logreg_predict: feature width mismatch");
    }
    const Eigen::MatrixXd x =
        (x_raw.rowwise() - model.feat_mean).array().rowwise() / model.feat_scale.array();
    return sigmoid_vec(((x * model.w).array() + model.b).matrix());
}

} // namespace churnkit
