#pragma once

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace churnkit {

struct EgoMetrics {
    int size = 1;          // nodes in the ego-network, ego included
    double density = 0.0;  // edges within the ego set / all possible pairs
};

// Top-p fraction of nodes by degree, ties at the threshold kept.
struct CoreSet {
    double percentile = 0.05;
    int degree_threshold = 0;
    std::unordered_set<int> members;  // node indices

    bool contains(int node_index) const { return members.count(node_index) > 0; }
};

// Undirected friendship graph. Nodes are string ids mapped to dense indices;
// duplicate edges and self-loops are rejected at insertion. Immutable once
// loaded, so all queries are read-only and safe to run concurrently.
class SocialGraph {
public:
    int add_node(const std::string& id);
    void add_edge(const std::string& a, const std::string& b);

    static SocialGraph load_edge_list(const std::string& path);
    void save_edge_list(const std::string& path) const;

    int node_count() const { return static_cast<int>(ids_.size()); }
    long edge_count() const { return edge_count_; }
    bool has_node(const std::string& id) const { return index_.count(id) > 0; }
    int node_index(const std::string& id) const;
    const std::string& node_id(int index) const { return ids_[index]; }
    const std::vector<std::string>& node_ids() const { return ids_; }
    int degree(const std::string& id) const;
    const std::vector<int>& neighbors(int index) const { return adj_[index]; }

    EgoMetrics ego_metrics(const std::string& id) const;
    CoreSet extract_core(double percentile) const;
    double core_overlap(const std::string& id, const CoreSet& core) const;

private:
    std::unordered_map<std::string, int> index_;
    std::vector<std::string> ids_;
    std::vector<std::vector<int>> adj_;  // each list kept sorted
    long edge_count_ = 0;
};

// Ego-network size and density of one user across daily snapshot files,
// returned as a 2 x T matrix (row 0 size, row 1 density) ready to append to an
// ActivitySeries. A user absent from a snapshot counts as isolated.
Eigen::MatrixXd daily_network_series(const std::vector<std::string>& snapshot_paths,
                                     const std::string& user_id);

// "edges.day01", "edges.day02", ... naming used by the generator.
std::string snapshot_path(const std::string& prefix, int day);

} // namespace churnkit
