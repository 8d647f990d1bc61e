#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fpv/gcn.hpp"
#include "fpv/graph.hpp"

namespace fpv {

/// Integrated-gradient contributions of one plan's components to its raw
/// FPV. Edge contributions are per undirected edge (both directed gradients
/// summed).
struct Attribution {
    std::string graph_id;
    std::vector<double> node_contrib;                  // by node index
    std::vector<std::pair<int, int>> edge_keys;        // (lo, hi), graph edge order
    std::vector<double> edge_contrib;
    double f_full = 0.0;
    double f_baseline = 0.0;
    double completeness_gap = 0.0;  // |sum(contrib) - (f_full - f_baseline)|
};

/// Midpoint-rule integrated gradients along the straight path from the
/// all-zero baseline (zero node features, zero first-layer edge weights,
/// self-loops kept at 1) to the actual input. All steps are evaluated in one
/// block-diagonal batch.
Attribution integrated_gradients(const GcnModel& m, const AccessGraph& g, int steps = 200);

/// Z-scores a plan's contributions. `joint` pools nodes and edges into one
/// standardization (default); otherwise the two blocks are standardized
/// separately. Population SD. Throws ZeroSpread on constant contributions.
Attribution standardize(const Attribution& a, bool joint = true);

/// Standardized contributions grouped by component type: node groups keyed
/// by label ("bl"), edge groups by sorted label pair ("bl-bt").
struct TypedContributionTable {
    std::map<std::string, std::vector<double>> groups;
};

/// attrs[i] must describe graphs[i].
TypedContributionTable aggregate_by_type(std::span<const Attribution> attrs,
                                         std::span<const AccessGraph> graphs);

struct AnomGroup {
    std::string key;
    int n = 0;
    double mean = 0.0;
    double ldl = 0.0;
    double udl = 0.0;
    bool significant = false;
};

struct AnomResult {
    std::vector<AnomGroup> groups;
    double grand_mean = 0.0;
    double pooled_sd = 0.0;
    double h = 0.0;  // critical value, Bonferroni approximation t(1-a/2k, N-k)
    double alpha = 0.05;
    int total_n = 0;
};

/// Analysis of means: flags groups whose mean falls outside
/// grand_mean +- h * s * sqrt((N - n_i) / (N * n_i)). Requires >= 2 groups
/// and every group n >= 2.
AnomResult anom(const TypedContributionTable& table, double alpha = 0.05);

std::string attribution_to_json(const Attribution& a);
Attribution attribution_from_json(const std::string& text);
std::string anom_to_csv(const AnomResult& r);

}  // namespace fpv
