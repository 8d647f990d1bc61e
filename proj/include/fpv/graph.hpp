#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fpv {

/// Error raised by parsers and validators when an input cannot be turned
/// into a usable domain object. `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

/// The ten room-type labels of an access graph.
enum class RoomLabel : std::uint8_t {
    bl,  // balcony
    bt,  // bathroom
    cl,  // closet
    dk,  // living/dining/kitchen
    en,  // entrance
    hw,  // hallway
    la,  // lavatory
    ja,  // Japanese room
    to,  // toilet
    we,  // Western room
};

inline constexpr int kNumRoomLabels = 10;

constexpr std::array<RoomLabel, kNumRoomLabels> all_room_labels() {
    return {RoomLabel::bl, RoomLabel::bt, RoomLabel::cl, RoomLabel::dk, RoomLabel::en,
            RoomLabel::hw, RoomLabel::la, RoomLabel::ja, RoomLabel::to, RoomLabel::we};
}

const char* to_string(RoomLabel label);

/// Parses a label code. Accepts the aliases "jp" -> ja and "wc" -> to that
/// appear in some feature tables. Returns nullopt for anything else.
std::optional<RoomLabel> parse_room_label(std::string_view code);

/// Undirected labeled access graph of one floor plan. Node indices are
/// 0..n-1; each edge is stored once as (lo, hi) in input order.
struct AccessGraph {
    std::string id;
    std::vector<RoomLabel> labels;
    std::vector<std::pair<int, int>> edges;

    int node_count() const { return static_cast<int>(labels.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }

    std::vector<std::vector<int>> adjacency() const;
    std::array<int, kNumRoomLabels> label_counts() const;
    int count_label(RoomLabel l) const;

    /// Index of the unique entrance node, or -1 if there is not exactly one.
    int entrance() const;

    /// Returns a copy with node i renamed to perm[i] (labels and edges moved
    /// accordingly). perm must be a permutation of 0..n-1.
    AccessGraph permuted(const std::vector<int>& perm) const;
};

enum class Finding {
    EmptyGraph,
    Disconnected,
    MissingEntrance,
    MultipleEntrances,
};

const char* to_string(Finding f);

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const { return findings.empty(); }
};

/// Structural validation: connectivity and the exactly-one-entrance rule.
/// Shape errors (self-loops, bad indices) are rejected earlier, at parse time.
ValidationReport validate(const AccessGraph& g);

/// Parses one graph from its JSONL record
/// `{"id": str, "nodes": [{"idx": int, "label": str}], "edges": [[i,j], ...]}`.
/// Throws fpv::Error with codes: MalformedJson, MissingField, UnknownLabel,
/// DuplicateNodeIndex, NodeIndexOutOfRange, SelfLoop, DuplicateEdge,
/// DanglingEdge.
AccessGraph parse_graph(const std::string& json_line);

std::string to_jsonl(const AccessGraph& g);

/// Reads a JSONL corpus, one graph per line; blank lines are skipped.
/// Line numbers are included in error messages.
std::vector<AccessGraph> load_graphs(const std::string& path);

void save_graphs(const std::string& path, const std::vector<AccessGraph>& graphs);

}  // namespace fpv
