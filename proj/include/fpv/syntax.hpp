#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fpv/graph.hpp"

namespace fpv {

/// BFS shortest-path depths (edge counts) from `source`. Unreachable nodes
/// get -1; callers that need full coverage must validate connectivity first.
std::vector<int> depth_map(const AccessGraph& g, int source);

/// Max depth over all nodes from the unique entrance node.
/// Throws MissingEntrance if the graph does not have exactly one `en` node.
int max_depth_from_entrance(const AccessGraph& g);

double mean_depth(const AccessGraph& g, int node);

/// Real relative asymmetry of one node: RA = 2(MD-1)/(k-2) normalized by
/// D_k = 2(k*log2((k+2)/3)+1)/((k-1)(k-2)).
/// Requires a connected graph with k >= 3 nodes.
double rra(const AccessGraph& g, int node);

/// Per-label max RRA. Closets are never starting points, so `cl` is absent
/// from the result; labels with no node map to 0.
std::map<RoomLabel, double> rra_by_label(const AccessGraph& g);

struct DifferenceFactors {
    double h = 0.0;       // entropy of (max, mean, min) RRA shares, nats
    double h_star = 0.0;  // (h - ln2) / (ln3 - ln2)
};

/// Difference factors over the non-closet RRA values.
/// Throws DegenerateGraph when the minimum RRA is <= 0 (entropy undefined).
DifferenceFactors difference_factor(const AccessGraph& g);

/// The explicit graph-feature vector of one plan.
struct GfVector {
    int num_node = 0;
    int num_edge = 0;
    std::array<int, kNumRoomLabels> num_label{};   // indexed by RoomLabel
    int depth = 0;                                 // max depth from entrance
    std::array<double, kNumRoomLabels> rra_label{};  // cl entry unused, kept 0
    double h_star = 0.0;

    /// Fixed, documented CSV column order (excluding the id column).
    static const std::vector<std::string>& column_names();
    std::vector<double> values() const;
};

GfVector graph_features(const AccessGraph& g);

std::string gf_csv_header();
std::string gf_csv_row(const std::string& id, const GfVector& gf);

}  // namespace fpv
