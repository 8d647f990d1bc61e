#include "fpv/syntax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace fpv {

std::vector<int> depth_map(const AccessGraph& g, int source) {
    int n = g.node_count();
    if (source < 0 || source >= n)
        throw Error("InvalidNode", "depth_map source " + std::to_string(source) + " out of range");
    std::vector<int> depth(n, -1);
    auto adj = g.adjacency();
    std::vector<int> queue{source};
    depth[source] = 0;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int v = queue[qi];
        for (int u : adj[v]) {
            if (depth[u] < 0) {
                depth[u] = depth[v] + 1;
                queue.push_back(u);
            }
        }
    }
    return depth;
}

int max_depth_from_entrance(const AccessGraph& g) {
    int en = g.entrance();
    if (en < 0)
        throw Error("MissingEntrance", "graph " + g.id + " needs exactly one entrance node");
    auto depth = depth_map(g, en);
    int max = 0;
    for (int d : depth) {
        if (d < 0) throw Error("Disconnected", "graph " + g.id + " is not connected");
        max = std::max(max, d);
    }
    return max;
}

double mean_depth(const AccessGraph& g, int node) {
    int n = g.node_count();
    if (n < 2) throw Error("DegenerateGraph", "mean depth needs at least 2 nodes");
    auto depth = depth_map(g, node);
    long long total = 0;
    for (int i = 0; i < n; ++i) {
        if (i == node) continue;
        if (depth[i] < 0) throw Error("Disconnected", "graph " + g.id + " is not connected");
        total += depth[i];
    }
    return static_cast<double>(total) / (n - 1);
}

double rra(const AccessGraph& g, int node) {
    int k = g.node_count();
    if (k < 3) throw Error("DegenerateGraph", "RRA needs at least 3 nodes");
    double md = mean_depth(g, node);
    double ra = 2.0 * (md - 1.0) / (k - 2.0);
    double dk = 2.0 * (k * std::log2((k + 2.0) / 3.0) + 1.0) / ((k - 1.0) * (k - 2.0));
    return ra / dk;
}

std::map<RoomLabel, double> rra_by_label(const AccessGraph& g) {
    std::map<RoomLabel, double> out;
    for (RoomLabel l : all_room_labels()) {
        if (l == RoomLabel::cl) continue;
        out[l] = 0.0;
    }
    for (int i = 0; i < g.node_count(); ++i) {
        RoomLabel l = g.labels[i];
        if (l == RoomLabel::cl) continue;
        out[l] = std::max(out[l], rra(g, i));
    }
    return out;
}

DifferenceFactors difference_factor(const AccessGraph& g) {
    double a = 0.0, c = 0.0, sum = 0.0;
    int count = 0;
    for (int i = 0; i < g.node_count(); ++i) {
        if (g.labels[i] == RoomLabel::cl) continue;
        double r = rra(g, i);
        if (count == 0) {
            a = c = r;
        } else {
            a = std::max(a, r);
            c = std::min(c, r);
        }
        sum += r;
        ++count;
    }
    if (count == 0) throw Error("DegenerateGraph", "no non-closet nodes in graph " + g.id);
    double b = sum / count;
    if (c <= 0.0)
        throw Error("DegenerateGraph", "minimum RRA is not positive in graph " + g.id);

    double t = a + b + c;
    auto plogp = [](double p) { return p * std::log(p); };
    DifferenceFactors f;
    f.h = -(plogp(a / t) + plogp(b / t) + plogp(c / t));
    f.h_star = (f.h - std::numbers::ln2) / (std::log(3.0) - std::numbers::ln2);
    return f;
}

GfVector graph_features(const AccessGraph& g) {
    GfVector gf;
    gf.num_node = g.node_count();
    gf.num_edge = g.edge_count();
    gf.num_label = g.label_counts();
    gf.depth = max_depth_from_entrance(g);
    auto rra_map = rra_by_label(g);
    for (const auto& [label, value] : rra_map) gf.rra_label[static_cast<int>(label)] = value;
    try {
        gf.h_star = difference_factor(g).h_star;
    } catch (const Error& e) {
        // Tiny plans where the most integrated room has RRA 0 get the same
        // zero convention as absent labels.
        if (e.code() != "DegenerateGraph") throw;
        gf.h_star = 0.0;
    }
    return gf;
}

const std::vector<std::string>& GfVector::column_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> cols{"num_node", "num_edge"};
        for (RoomLabel l : all_room_labels()) cols.push_back(std::string("num_") + to_string(l));
        cols.push_back("depth");
        for (RoomLabel l : all_room_labels()) {
            if (l == RoomLabel::cl) continue;
            cols.push_back(std::string("rra_") + to_string(l));
        }
        cols.push_back("h_star");
        return cols;
    }();
    return names;
}

std::vector<double> GfVector::values() const {
    std::vector<double> v;
    v.push_back(num_node);
    v.push_back(num_edge);
    for (RoomLabel l : all_room_labels()) v.push_back(num_label[static_cast<int>(l)]);
    v.push_back(depth);
    for (RoomLabel l : all_room_labels()) {
        if (l == RoomLabel::cl) continue;
        v.push_back(rra_label[static_cast<int>(l)]);
    }
    v.push_back(h_star);
    return v;
}

std::string gf_csv_header() {
    std::ostringstream out;
    out << "id";
    for (const auto& name : GfVector::column_names()) out << "," << name;
    return out.str();
}

std::string gf_csv_row(const std::string& id, const GfVector& gf) {
    std::ostringstream out;
    out << id;
    char buf[40];
    for (double v : gf.values()) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        out << "," << buf;
    }
    return out.str();
}

}  // namespace fpv
