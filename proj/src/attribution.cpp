#include "fpv/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "fpv/stats.hpp"
#include "fpv/tape.hpp"

namespace fpv {

namespace {

// Raw FPV of one graph with node features and edge weights scaled by alpha.
double fpv_at_alpha(const GcnModel& m, const GraphBatch& base, double alpha) {
    GraphBatch batch = base;
    for (double& v : batch.x.data) v *= alpha;
    for (double& v : batch.edge_w.data) v *= alpha;
    Tape tape;
    JointNodes nodes = joint_forward(tape, m, batch, false, false);
    return tape.value(nodes.fpv)[0];
}

}  // namespace

Attribution integrated_gradients(const GcnModel& m, const AccessGraph& g, int steps) {
    if (steps < 1) throw Error("BadConfig", "integrated gradients needs steps >= 1");
    for (const Tensor* t : m.parameters())
        for (double v : t->data)
            if (!std::isfinite(v)) throw Error("BadModel", "non-finite model parameters");

    const int n = g.node_count();
    const int e2 = 2 * g.edge_count();
    std::vector<const AccessGraph*> single{&g};
    GraphBatch base = GraphBatch::build(single);

    // One replica of the graph per integration step; replica s carries
    // inputs scaled by alpha_s = (s - 0.5) / steps (midpoint rule).
    GraphBatch rep;
    rep.n_graphs = steps;
    rep.n_nodes = n * steps;
    rep.x = Tensor(rep.n_nodes, kNumRoomLabels);
    rep.edge_w = Tensor(e2 * steps, 1);
    rep.seg.resize(rep.n_nodes);
    rep.src.reserve(static_cast<size_t>(e2) * steps);
    rep.dst.reserve(static_cast<size_t>(e2) * steps);
    for (int s = 0; s < steps; ++s) {
        double alpha = (s + 0.5) / steps;
        for (int v = 0; v < n; ++v) {
            rep.seg[s * n + v] = s;
            for (int c = 0; c < kNumRoomLabels; ++c)
                rep.x.at(s * n + v, c) = alpha * base.x.at(v, c);
        }
        for (int d = 0; d < e2; ++d) {
            rep.src.push_back(s * n + base.src[d]);
            rep.dst.push_back(s * n + base.dst[d]);
            rep.edge_w.data[static_cast<size_t>(s) * e2 + d] = alpha;
        }
    }

    Tape tape;
    JointNodes nodes = joint_forward(tape, m, rep, true, false);
    std::vector<double> seed(steps, 1.0);
    tape.backward(nodes.fpv, seed);
    auto gx = tape.grad(nodes.x_leaf);
    auto gw = tape.grad(nodes.w_leaf);

    Attribution attr;
    attr.graph_id = g.id;
    attr.node_contrib.assign(n, 0.0);
    for (int s = 0; s < steps; ++s)
        for (int v = 0; v < n; ++v)
            for (int c = 0; c < kNumRoomLabels; ++c) {
                double x = base.x.at(v, c);
                if (x != 0.0)
                    attr.node_contrib[v] +=
                        x * gx[(static_cast<size_t>(s) * n + v) * kNumRoomLabels + c];
            }
    for (double& v : attr.node_contrib) v /= steps;

    attr.edge_keys = g.edges;
    attr.edge_contrib.assign(g.edge_count(), 0.0);
    for (int s = 0; s < steps; ++s)
        for (int d = 0; d < e2; ++d)
            attr.edge_contrib[d / 2] += gw[static_cast<size_t>(s) * e2 + d];
    for (double& v : attr.edge_contrib) v /= steps;

    attr.f_full = fpv_at_alpha(m, base, 1.0);
    attr.f_baseline = fpv_at_alpha(m, base, 0.0);
    double total = 0.0;
    for (double v : attr.node_contrib) total += v;
    for (double v : attr.edge_contrib) total += v;
    attr.completeness_gap = std::fabs(total - (attr.f_full - attr.f_baseline));
    return attr;
}

namespace {

void zscore(std::vector<double*> values) {
    if (values.size() < 2)
        throw Error("ZeroSpread", "standardization needs at least 2 components");
    double mean = 0.0;
    for (double* v : values) mean += *v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double* v : values) var += (*v - mean) * (*v - mean);
    var /= static_cast<double>(values.size());
    double sd = std::sqrt(var);
    if (sd == 0.0) throw Error("ZeroSpread", "contributions have no spread");
    for (double* v : values) *v = (*v - mean) / sd;
}

}  // namespace

Attribution standardize(const Attribution& a, bool joint) {
    Attribution out = a;
    if (joint) {
        std::vector<double*> all;
        for (double& v : out.node_contrib) all.push_back(&v);
        for (double& v : out.edge_contrib) all.push_back(&v);
        zscore(std::move(all));
    } else {
        std::vector<double*> nodes, edges;
        for (double& v : out.node_contrib) nodes.push_back(&v);
        for (double& v : out.edge_contrib) edges.push_back(&v);
        zscore(std::move(nodes));
        if (!edges.empty()) zscore(std::move(edges));
    }
    return out;
}

TypedContributionTable aggregate_by_type(std::span<const Attribution> attrs,
                                         std::span<const AccessGraph> graphs) {
    if (attrs.size() != graphs.size())
        throw Error("BadInput", "one attribution per graph required");
    TypedContributionTable table;
    for (size_t i = 0; i < attrs.size(); ++i) {
        const Attribution& a = attrs[i];
        const AccessGraph& g = graphs[i];
        if (static_cast<int>(a.node_contrib.size()) != g.node_count())
            throw Error("BadInput", "attribution does not match graph " + g.id);
        for (int v = 0; v < g.node_count(); ++v)
            table.groups[to_string(g.labels[v])].push_back(a.node_contrib[v]);
        for (size_t e = 0; e < a.edge_keys.size(); ++e) {
            auto [x, y] = a.edge_keys[e];
            std::string la = to_string(g.labels[x]);
            std::string lb = to_string(g.labels[y]);
            if (lb < la) std::swap(la, lb);
            table.groups[la + "-" + lb].push_back(a.edge_contrib[e]);
        }
    }
    return table;
}

AnomResult anom(const TypedContributionTable& table, double alpha) {
    const int k = static_cast<int>(table.groups.size());
    if (k < 2) throw Error("DegenerateGroups", "ANOM needs at least 2 groups");

    AnomResult result;
    result.alpha = alpha;
    int total = 0;
    double grand = 0.0;
    for (const auto& [key, samples] : table.groups) {
        if (samples.size() < 2)
            throw Error("DegenerateGroups", "ANOM group '" + key + "' has fewer than 2 samples");
        total += static_cast<int>(samples.size());
        for (double v : samples) grand += v;
    }
    grand /= total;
    result.grand_mean = grand;
    result.total_n = total;

    double pooled_ss = 0.0;
    for (const auto& [key, samples] : table.groups) {
        double mean = 0.0;
        for (double v : samples) mean += v;
        mean /= static_cast<double>(samples.size());
        for (double v : samples) pooled_ss += (v - mean) * (v - mean);
    }
    const int dof = total - k;
    result.pooled_sd = std::sqrt(pooled_ss / dof);
    result.h = stats::t_quantile(1.0 - alpha / (2.0 * k), dof);

    for (const auto& [key, samples] : table.groups) {
        AnomGroup group;
        group.key = key;
        group.n = static_cast<int>(samples.size());
        for (double v : samples) group.mean += v;
        group.mean /= group.n;
        double margin = result.h * result.pooled_sd *
                        std::sqrt(static_cast<double>(total - group.n) /
                                  (static_cast<double>(total) * group.n));
        group.ldl = grand - margin;
        group.udl = grand + margin;
        group.significant = group.mean < group.ldl || group.mean > group.udl;
        result.groups.push_back(std::move(group));
    }
    return result;
}

std::string attribution_to_json(const Attribution& a) {
    nlohmann::json out;
    out["graph_id"] = a.graph_id;
    auto nodes = nlohmann::json::object();
    for (size_t v = 0; v < a.node_contrib.size(); ++v)
        nodes[std::to_string(v)] = a.node_contrib[v];
    out["node_contrib"] = std::move(nodes);
    auto edges = nlohmann::json::object();
    for (size_t e = 0; e < a.edge_keys.size(); ++e) {
        auto key = std::to_string(a.edge_keys[e].first) + "-" +
                   std::to_string(a.edge_keys[e].second);
        edges[key] = a.edge_contrib[e];
    }
    out["edge_contrib"] = std::move(edges);
    out["f_full"] = a.f_full;
    out["f_baseline"] = a.f_baseline;
    out["completeness_gap"] = a.completeness_gap;
    return out.dump();
}

Attribution attribution_from_json(const std::string& text) {
    nlohmann::json in = nlohmann::json::parse(text);
    Attribution a;
    a.graph_id = in.at("graph_id").get<std::string>();
    const auto& nodes = in.at("node_contrib");
    a.node_contrib.assign(nodes.size(), 0.0);
    for (const auto& [key, value] : nodes.items())
        a.node_contrib.at(std::stoul(key)) = value.get<double>();
    for (const auto& [key, value] : in.at("edge_contrib").items()) {
        auto dash = key.find('-');
        a.edge_keys.emplace_back(std::stoi(key.substr(0, dash)),
                                 std::stoi(key.substr(dash + 1)));
        a.edge_contrib.push_back(value.get<double>());
    }
    a.f_full = in.value("f_full", 0.0);
    a.f_baseline = in.value("f_baseline", 0.0);
    a.completeness_gap = in.value("completeness_gap", 0.0);
    return a;
}

std::string anom_to_csv(const AnomResult& r) {
    std::ostringstream out;
    out << "group,n,mean,ldl,udl,significant\n";
    char buf[160];
    for (const auto& g : r.groups) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g,%.10g,%d", g.key.c_str(), g.n, g.mean,
                      g.ldl, g.udl, g.significant ? 1 : 0);
        out << buf << "\n";
    }
    return out.str();
}

}  // namespace fpv
