#include <doctest.h>

#include "fpv/graph.hpp"

using namespace fpv;

namespace {

AccessGraph path_graph(std::vector<RoomLabel> labels) {
    AccessGraph g;
    g.id = "path";
    g.labels = std::move(labels);
    for (int i = 0; i + 1 < g.node_count(); ++i) g.edges.emplace_back(i, i + 1);
    return g;
}

}  // namespace

TEST_CASE("room labels parse and print") {
    for (RoomLabel l : all_room_labels()) {
        auto parsed = parse_room_label(to_string(l));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == l);
    }
    CHECK(!parse_room_label("kitchen").has_value());
    CHECK(!parse_room_label("").has_value());
    // Aliases from published feature tables.
    CHECK(*parse_room_label("jp") == RoomLabel::ja);
    CHECK(*parse_room_label("wc") == RoomLabel::to);
}

TEST_CASE("parse_graph accepts a minimal valid record") {
    auto g = parse_graph(R"({"id":"g1","nodes":[{"idx":0,"label":"en"},{"idx":1,"label":"hw"}],"edges":[[0,1]]})");
    CHECK(g.id == "g1");
    CHECK(g.node_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(g.labels[0] == RoomLabel::en);
    CHECK(g.labels[1] == RoomLabel::hw);
}

TEST_CASE("parse_graph rejects bad records") {
    auto code_of = [](const std::string& line) {
        try {
            parse_graph(line);
        } catch (const Error& e) {
            return e.code();
        }
        return std::string("no error");
    };
    CHECK(code_of("{not json") == "MalformedJson");
    CHECK(code_of(R"({"id":"g","nodes":[{"idx":0,"label":"kitchen"}],"edges":[]})") ==
          "UnknownLabel");
    CHECK(code_of(R"({"id":"g","nodes":[{"idx":0,"label":"en"}],"edges":[[0,0]]})") == "SelfLoop");
    CHECK(code_of(
              R"({"id":"g","nodes":[{"idx":0,"label":"en"},{"idx":0,"label":"hw"}],"edges":[]})") ==
          "DuplicateNodeIndex");
    CHECK(code_of(
              R"({"id":"g","nodes":[{"idx":0,"label":"en"},{"idx":1,"label":"hw"}],"edges":[[0,2]]})") ==
          "DanglingEdge");
    CHECK(code_of(
              R"({"id":"g","nodes":[{"idx":0,"label":"en"},{"idx":1,"label":"hw"}],"edges":[[0,1],[1,0]]})") ==
          "DuplicateEdge");
    CHECK(code_of(R"({"id":"g","nodes":[]})") == "MissingField");
}

TEST_CASE("validate flags structural findings") {
    auto ok = path_graph({RoomLabel::en, RoomLabel::hw, RoomLabel::we});
    CHECK(validate(ok).ok());

    AccessGraph disjoint;
    disjoint.labels = {RoomLabel::en, RoomLabel::hw, RoomLabel::we, RoomLabel::dk};
    disjoint.edges = {{0, 1}, {2, 3}};
    auto report = validate(disjoint);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0] == Finding::Disconnected);

    auto no_entrance = path_graph({RoomLabel::hw, RoomLabel::we});
    report = validate(no_entrance);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0] == Finding::MissingEntrance);

    auto two_entrances = path_graph({RoomLabel::en, RoomLabel::hw, RoomLabel::en});
    report = validate(two_entrances);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0] == Finding::MultipleEntrances);

    AccessGraph empty;
    report = validate(empty);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0] == Finding::EmptyGraph);
}

TEST_CASE("jsonl round trip preserves the graph") {
    auto g = path_graph({RoomLabel::en, RoomLabel::hw, RoomLabel::dk, RoomLabel::we});
    g.id = "fixture";
    auto back = parse_graph(to_jsonl(g));
    CHECK(back.id == g.id);
    CHECK(back.labels == g.labels);
    CHECK(back.edges == g.edges);
}

TEST_CASE("permuted moves labels and edges together") {
    auto g = path_graph({RoomLabel::en, RoomLabel::hw, RoomLabel::we});
    auto p = g.permuted({2, 0, 1});  // node i -> position perm[i]
    CHECK(p.labels[2] == RoomLabel::en);
    CHECK(p.labels[0] == RoomLabel::hw);
    CHECK(p.labels[1] == RoomLabel::we);
    REQUIRE(p.edge_count() == 2);
    // en-hw became 2-0, hw-we became 0-1.
    CHECK(p.edges[0] == std::pair<int, int>{0, 2});
    CHECK(p.edges[1] == std::pair<int, int>{0, 1});
    CHECK(p.entrance() == 2);
}
