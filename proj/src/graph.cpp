#include "churnkit/graph.hpp"

#include "churnkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace churnkit {

int SocialGraph::add_node(const std::string& id) {
    auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    const int idx = static_cast<int>(ids_.size());
    index_.emplace(id, idx);
    ids_.push_back(id);
    adj_.emplace_back();
    return idx;
}

void SocialGraph::add_edge(const std::string& a, const std::string& b) {
    if (a == b) {
        throw ValidationError("self-loop on node '" + a + "'");
    }
    const int ia = add_node(a);
    const int ib = add_node(b);
    auto& na = adj_[ia];
    auto pos = std::lower_bound(na.begin(), na.end(), ib);
    if (pos != na.end() && *pos == ib) {
        throw ValidationError("duplicate edge '" + a + " " + b + "'");
    }
    na.insert(pos, ib);
    auto& nb = adj_[ib];
    nb.insert(std::lower_bound(nb.begin(), nb.end(), ia), ia);
    ++edge_count_;
}

SocialGraph SocialGraph::load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open edge list '" + path + "'");
    }
    SocialGraph g;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a)) continue;  // blank line
        if (!(ss >> b) || (ss >> extra)) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected two whitespace-separated node ids");
        }
        g.add_edge(a, b);
    }
    return g;
}

void SocialGraph::save_edge_list(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write edge list '" + path + "'");
    }
    for (int i = 0; i < node_count(); ++i) {
        for (int j : adj_[i]) {
            if (j > i) out << ids_[i] << ' ' << ids_[j] << '\n';
        }
    }
}

int SocialGraph::node_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw ValidationError("unknown node '" + id + "'");
    }
    return it->second;
}

int SocialGraph::degree(const std::string& id) const {
    return static_cast<int>(adj_[node_index(id)].size());
}

EgoMetrics SocialGraph::ego_metrics(const std::string& id) const {
    const int u = node_index(id);
    EgoMetrics m;
    m.size = static_cast<int>(adj_[u].size()) + 1;
    if (m.size <= 1) return m;

    std::unordered_set<int> ego(adj_[u].begin(), adj_[u].end());
    ego.insert(u);
    long within = 0;
    for (int v : ego) {
        for (int w : adj_[v]) {
            if (w > v && ego.count(w)) ++within;
        }
    }
    const double possible = static_cast<double>(m.size) * (m.size - 1) / 2.0;
    m.density = static_cast<double>(within) / possible;
    return m;
}

CoreSet SocialGraph::extract_core(double percentile) const {
    if (!(percentile > 0.0) || percentile > 1.0) {
        throw ValidationError("core percentile must be in (0, 1]");
    }
    const int n = node_count();
    if (n == 0) {
        throw ValidationError("core of an empty graph");
    }
    std::vector<int> degrees(n);
    for (int i = 0; i < n; ++i) degrees[i] = static_cast<int>(adj_[i].size());

    std::vector<int> sorted = degrees;
    std::sort(sorted.begin(), sorted.end(), std::greater<int>());
    const int rank = std::min(n, static_cast<int>(std::ceil(percentile * n)));

    CoreSet core;
    core.percentile = percentile;
    core.degree_threshold = sorted[rank - 1];
    for (int i = 0; i < n; ++i) {
        if (degrees[i] >= core.degree_threshold) core.members.insert(i);
    }
    return core;
}

double SocialGraph::core_overlap(const std::string& id, const CoreSet& core) const {
    const int u = node_index(id);
    if (adj_[u].empty()) return 0.0;
    long in_core = 0;
    for (int v : adj_[u]) {
        if (core.contains(v)) ++in_core;
    }
    return static_cast<double>(in_core) / static_cast<double>(adj_[u].size());
}

Eigen::MatrixXd daily_network_series(const std::vector<std::string>& snapshot_paths,
                                     const std::string& user_id) {
    const int t_days = static_cast<int>(snapshot_paths.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2, t_days);
    for (int t = 0; t < t_days; ++t) {
        SocialGraph g = SocialGraph::load_edge_list(snapshot_paths[t]);
        if (g.has_node(user_id)) {
            const EgoMetrics m = g.ego_metrics(user_id);
            out(0, t) = m.size;
            out(1, t) = m.density;
        } else {
            out(0, t) = 1.0;
            out(1, t) = 0.0;
        }
    }
    return out;
}

std::string snapshot_path(const std::string& prefix, int day) {
    const std::string num = (day < 10 ? "0" : "") + std::to_string(day);
    return prefix + ".day" + num;
}

} // namespace churnkit
