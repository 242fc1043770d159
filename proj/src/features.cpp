#include "churnkit/features.hpp"

#include "churnkit/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace churnkit {

namespace {

double sigmoid_curve(double t, double q, double phi) {
    return 1.0 / (1.0 + std::exp(-q * (t - phi)));
}

double sse(const Eigen::VectorXd& y, double q, double phi) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < y.size(); ++t) {
        const double r = sigmoid_curve(static_cast<double>(t + 1), q, phi) - y[t];
        s += r * r;
    }
    return s;
}

} // namespace

SigmoidFit fit_sigmoid(const Eigen::Ref<const Eigen::VectorXd>& row) {
    const Eigen::Index t_days = row.size();
    if (t_days < 2) throw ValidationError("fit_sigmoid needs at least 2 observations");

    Eigen::VectorXd cum(t_days);
    double acc = 0.0;
    for (Eigen::Index t = 0; t < t_days; ++t) {
        acc += row[t];
        cum[t] = acc;
    }
    if (cum[t_days - 1] == 0.0) {
        return SigmoidFit{0.0, 0.0, 0.0, true};
    }
    const Eigen::VectorXd y = cum / cum[t_days - 1];

    // Coarse grid: |q| log-spaced over [1e-2, 10^1.5], both signs; phi sweeps
    // [0, T+1]. The objective is non-convex in (q, phi) but T is small, so the
    // grid is cheap and the refinement only has to polish.
    SigmoidFit best;
    best.residual = std::numeric_limits<double>::infinity();
    constexpr int kQSteps = 25;
    for (int i = 0; i < kQSteps; ++i) {
        const double mag = std::pow(10.0, -2.0 + 3.5 * i / (kQSteps - 1));
        for (const double q : {mag, -mag}) {
            for (double phi = 0.0; phi <= static_cast<double>(t_days) + 1.0; phi += 0.25) {
                const double r = sse(y, q, phi);
                if (r < best.residual) best = SigmoidFit{q, phi, r, false};
            }
        }
    }

    // Damped Gauss-Newton with backtracking; never accepts a worse objective.
    double q = best.q, phi = best.phi, current = best.residual;
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (Eigen::Index t = 0; t < t_days; ++t) {
            const double td = static_cast<double>(t + 1);
            const double v = sigmoid_curve(td, q, phi);
            const double r = v - y[t];
            const double dv = v * (1.0 - v);
            const Eigen::Vector2d jac(dv * (td - phi), -q * dv);
            jtj += jac * jac.transpose();
            jtr += jac * r;
        }
        jtj += 1e-12 * Eigen::Matrix2d::Identity();
        Eigen::Vector2d step = jtj.ldlt().solve(-jtr);
        if (!step.allFinite()) break;

        // Refinement stays inside a box slightly larger than the grid: with
        // daily sampling a steeper sigmoid is indistinguishable from a step,
        // and unbounded q would poison downstream standardization.
        const double q_limit = 32.0;
        const double phi_lo = -1.0, phi_hi = static_cast<double>(t_days) + 2.0;
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= 1e-12) {
            const double q_new = q + alpha * step[0];
            const double phi_new = phi + alpha * step[1];
            if (std::abs(q_new) > q_limit || phi_new < phi_lo || phi_new > phi_hi) {
                alpha *= 0.5;
                continue;
            }
            const double r_new = sse(y, q_new, phi_new);
            if (r_new <= current) {
                const double delta =
                    std::max(std::abs(q_new - q), std::abs(phi_new - phi));
                q = q_new;
                phi = phi_new;
                current = r_new;
                accepted = true;
                if (delta < 1e-8) iter = 100;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
    }
    return SigmoidFit{q, phi, current, false};
}

FeatureMatrix extract_features(const ActivitySeries& series) {
    series.validate();
    FeatureMatrix f;
    f.user_id = series.user_id;
    f.params.resize(series.dims(), kFeatureParams);
    f.inactive.resize(series.dims());
    f.residual.resize(series.dims());
    for (int d = 0; d < series.dims(); ++d) {
        const auto row = series.values.row(d);
        const SigmoidFit fit = fit_sigmoid(row.transpose());
        f.params(d, 0) = mean_daily(row);
        f.params(d, 1) = lag1_autocorr(row);
        f.params(d, 2) = fit.q;
        f.params(d, 3) = fit.phi;
        f.inactive[d] = fit.inactive;
        f.residual[d] = fit.residual;
    }
    return f;
}

std::vector<FeatureMatrix> extract_features(const std::vector<ActivitySeries>& series) {
    std::vector<FeatureMatrix> out;
    out.reserve(series.size());
    for (const auto& s : series) out.push_back(extract_features(s));
    return out;
}

void save_features_csv(const std::string& path, const std::vector<FeatureMatrix>& features,
                       const std::vector<std::string>& dimension_names) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "user_id,dim,mu,lag1,q,phi,inactive_flag\n";
    for (const auto& f : features) {
        for (int d = 0; d < f.dims(); ++d) {
            out << f.user_id << ',' << dimension_names.at(d) << ','
                << format_double(f.params(d, 0)) << ',' << format_double(f.params(d, 1)) << ','
                << format_double(f.params(d, 2)) << ',' << format_double(f.params(d, 3)) << ','
                << (f.inactive[d] ? 1 : 0) << '\n';
        }
    }
}

std::vector<FeatureMatrix> load_features_csv(const std::string& path,
                                             const std::vector<std::string>& dimension_names) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "user_id,dim,mu,lag1,q,phi,inactive_flag") {
        throw ParseError(path + ":1: unexpected feature CSV header");
    }
    const int dims = static_cast<int>(dimension_names.size());
    std::vector<FeatureMatrix> features;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string loc = path + ":" + std::to_string(line_no);
        if (fields.size() != 7) throw ParseError(loc + ": expected 7 fields");
        if (features.empty() || features.back().user_id != fields[0]) {
            FeatureMatrix f;
            f.user_id = fields[0];
            f.params = Eigen::MatrixXd::Zero(dims, kFeatureParams);
            f.inactive.assign(dims, false);
            f.residual.assign(dims, 0.0);
            features.push_back(std::move(f));
        }
        const auto it = std::find(dimension_names.begin(), dimension_names.end(), fields[1]);
        if (it == dimension_names.end()) {
            throw ParseError(loc + ": unknown dimension '" + fields[1] + "'");
        }
        const int d = static_cast<int>(it - dimension_names.begin());
        FeatureMatrix& f = features.back();
        f.params(d, 0) = parse_double(fields[2], loc);
        f.params(d, 1) = parse_double(fields[3], loc);
        f.params(d, 2) = parse_double(fields[4], loc);
        f.params(d, 3) = parse_double(fields[5], loc);
        f.inactive[d] = parse_long(fields[6], loc) != 0;
    }
    return features;
}

} // namespace churnkit
