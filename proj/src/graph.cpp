#include "fpv/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fpv {

namespace {

struct LabelName {
    RoomLabel label;
    const char* name;
};

constexpr LabelName kLabelNames[] = {
    {RoomLabel::bl, "bl"}, {RoomLabel::bt, "bt"}, {RoomLabel::cl, "cl"},
    {RoomLabel::dk, "dk"}, {RoomLabel::en, "en"}, {RoomLabel::hw, "hw"},
    {RoomLabel::la, "la"}, {RoomLabel::ja, "ja"}, {RoomLabel::to, "to"},
    {RoomLabel::we, "we"},
};

}  // namespace

const char* to_string(RoomLabel label) {
    return kLabelNames[static_cast<int>(label)].name;
}

std::optional<RoomLabel> parse_room_label(std::string_view code) {
    for (const auto& ln : kLabelNames) {
        if (code == ln.name) return ln.label;
    }
    // Aliases seen in published feature tables.
    if (code == "jp") return RoomLabel::ja;
    if (code == "wc") return RoomLabel::to;
    return std::nullopt;
}

std::vector<std::vector<int>> AccessGraph::adjacency() const {
    std::vector<std::vector<int>> adj(labels.size());
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    return adj;
}

std::array<int, kNumRoomLabels> AccessGraph::label_counts() const {
    std::array<int, kNumRoomLabels> counts{};
    for (RoomLabel l : labels) counts[static_cast<int>(l)]++;
    return counts;
}

int AccessGraph::count_label(RoomLabel l) const {
    return static_cast<int>(std::count(labels.begin(), labels.end(), l));
}

int AccessGraph::entrance() const {
    int found = -1;
    for (int i = 0; i < node_count(); ++i) {
        if (labels[i] == RoomLabel::en) {
            if (found >= 0) return -1;
            found = i;
        }
    }
    return found;
}

AccessGraph AccessGraph::permuted(const std::vector<int>& perm) const {
    AccessGraph out;
    out.id = id;
    out.labels.resize(labels.size());
    for (int i = 0; i < node_count(); ++i) out.labels[perm[i]] = labels[i];
    out.edges.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        int pa = perm[a], pb = perm[b];
        out.edges.emplace_back(std::min(pa, pb), std::max(pa, pb));
    }
    return out;
}

const char* to_string(Finding f) {
    switch (f) {
        case Finding::EmptyGraph: return "EmptyGraph";
        case Finding::Disconnected: return "Disconnected";
        case Finding::MissingEntrance: return "MissingEntrance";
        case Finding::MultipleEntrances: return "MultipleEntrances";
    }
    return "?";
}

ValidationReport validate(const AccessGraph& g) {
    ValidationReport report;
    int n = g.node_count();
    if (n == 0) {
        report.findings.push_back(Finding::EmptyGraph);
        return report;
    }

    // Connectivity by BFS from node 0.
    auto adj = g.adjacency();
    std::vector<char> seen(n, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        for (int nb : adj[queue[qi]]) {
            if (!seen[nb]) {
                seen[nb] = 1;
                queue.push_back(nb);
            }
        }
    }
    if (static_cast<int>(queue.size()) != n) report.findings.push_back(Finding::Disconnected);

    int entrances = g.count_label(RoomLabel::en);
    if (entrances == 0) report.findings.push_back(Finding::MissingEntrance);
    if (entrances > 1) report.findings.push_back(Finding::MultipleEntrances);
    return report;
}

AccessGraph parse_graph(const std::string& json_line) {
    nlohmann::json rec;
    try {
        rec = nlohmann::json::parse(json_line);
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedJson", std::string("graph record is not valid JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("nodes") || !rec.contains("edges"))
        throw Error("MissingField", "graph record needs fields id, nodes, edges");

    AccessGraph g;
    try {
        g.id = rec.at("id").get<std::string>();
        const auto& nodes = rec.at("nodes");
        int n = static_cast<int>(nodes.size());
        g.labels.assign(n, RoomLabel::bl);
        std::vector<char> seen_idx(n, 0);
        for (const auto& node : nodes) {
            int idx = node.at("idx").get<int>();
            std::string code = node.at("label").get<std::string>();
            if (idx < 0 || idx >= n)
                throw Error("NodeIndexOutOfRange",
                            "node index " + std::to_string(idx) + " outside 0.." + std::to_string(n - 1) +
                                " in graph " + g.id);
            if (seen_idx[idx])
                throw Error("DuplicateNodeIndex",
                            "duplicate node index " + std::to_string(idx) + " in graph " + g.id);
            seen_idx[idx] = 1;
            auto label = parse_room_label(code);
            if (!label)
                throw Error("UnknownLabel", "unknown room label '" + code + "' in graph " + g.id);
            g.labels[idx] = *label;
        }

        std::set<std::pair<int, int>> edge_set;
        for (const auto& edge : rec.at("edges")) {
            if (!edge.is_array() || edge.size() != 2)
                throw Error("MalformedJson", "edge must be a pair of node indices in graph " + g.id);
            int a = edge.at(0).get<int>();
            int b = edge.at(1).get<int>();
            if (a == b)
                throw Error("SelfLoop", "self-loop on node " + std::to_string(a) + " in graph " + g.id);
            if (a < 0 || a >= n || b < 0 || b >= n)
                throw Error("DanglingEdge", "edge endpoint outside node range in graph " + g.id);
            auto pair = std::make_pair(std::min(a, b), std::max(a, b));
            if (!edge_set.insert(pair).second)
                throw Error("DuplicateEdge",
                            "duplicate edge " + std::to_string(pair.first) + "-" +
                                std::to_string(pair.second) + " in graph " + g.id);
            g.edges.push_back(pair);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedJson", std::string("bad graph record: ") + e.what());
    }
    return g;
}

std::string to_jsonl(const AccessGraph& g) {
    nlohmann::json rec;
    rec["id"] = g.id;
    auto nodes = nlohmann::json::array();
    for (int i = 0; i < g.node_count(); ++i)
        nodes.push_back({{"idx", i}, {"label", to_string(g.labels[i])}});
    rec["nodes"] = std::move(nodes);
    auto edges = nlohmann::json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({a, b});
    rec["edges"] = std::move(edges);
    return rec.dump();
}

std::vector<AccessGraph> load_graphs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open graph file " + path);
    std::vector<AccessGraph> graphs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            graphs.push_back(parse_graph(line));
        } catch (const Error& e) {
            throw Error(e.code(), path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return graphs;
}

void save_graphs(const std::string& path, const std::vector<AccessGraph>& graphs) {
    std::ofstream out(path);
    if (!out) throw Error("FileWriteError", "cannot write graph file " + path);
    for (const auto& g : graphs) out << to_jsonl(g) << "\n";
}

}  // namespace fpv
