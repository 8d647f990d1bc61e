#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fpv/syntax.hpp"
#include "fpv/synth.hpp"
#include "oracles.hpp"

using namespace fpv;

namespace {

AccessGraph labeled_path(std::vector<RoomLabel> labels) {
    AccessGraph g;
    g.id = "path";
    g.labels = std::move(labels);
    for (int i = 0; i + 1 < g.node_count(); ++i) g.edges.emplace_back(i, i + 1);
    return g;
}

AccessGraph star(RoomLabel center, std::vector<RoomLabel> leaves) {
    AccessGraph g;
    g.id = "star";
    g.labels.push_back(center);
    for (size_t i = 0; i < leaves.size(); ++i) {
        g.labels.push_back(leaves[i]);
        g.edges.emplace_back(0, static_cast<int>(i) + 1);
    }
    return g;
}

}  // namespace

TEST_CASE("depth_map fixtures") {
    auto path = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::we});
    CHECK(depth_map(path, 0) == std::vector<int>{0, 1, 2});

    auto s = star(RoomLabel::en, {RoomLabel::hw, RoomLabel::we, RoomLabel::ja});
    CHECK(depth_map(s, 0) == std::vector<int>{0, 1, 1, 1});

    CHECK_THROWS_AS(depth_map(path, 5), Error);
}

TEST_CASE("depth_map matches the all-pairs oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        int n = std::uniform_int_distribution<int>(2, 12)(rng);
        auto g = oracles::random_connected_graph(rng, n);
        auto d = oracles::floyd_warshall(g);
        for (int s = 0; s < n; ++s) {
            auto bfs = depth_map(g, s);
            for (int v = 0; v < n; ++v) CHECK(bfs[v] == d[s][v]);
        }
    }
}

TEST_CASE("max depth from entrance") {
    CHECK(max_depth_from_entrance(
              labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::dk, RoomLabel::we})) == 3);
    CHECK(max_depth_from_entrance(
              star(RoomLabel::en, {RoomLabel::hw, RoomLabel::we, RoomLabel::ja})) == 1);
    CHECK_THROWS_AS(max_depth_from_entrance(labeled_path({RoomLabel::hw, RoomLabel::we})), Error);
}

TEST_CASE("rra fixtures") {
    // Star center with k=4: MD = 1 so RA = 0 so RRA = 0.
    auto s = star(RoomLabel::en, {RoomLabel::hw, RoomLabel::we, RoomLabel::ja});
    CHECK(rra(s, 0) == doctest::Approx(0.0).epsilon(1e-12));

    // Path en-hw-dk-we at hw: MD = 4/3, RA = 1/3, D_4 = 5/3, RRA = 0.2.
    auto path = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::dk, RoomLabel::we});
    CHECK(std::fabs(rra(path, 1) - 0.2) <= 1e-9);

    CHECK_THROWS_AS(rra(labeled_path({RoomLabel::en, RoomLabel::hw}), 0), Error);
}

TEST_CASE("rra is invariant under node permutation") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        int n = std::uniform_int_distribution<int>(3, 10)(rng);
        auto g = oracles::random_connected_graph(rng, n);
        auto perm = oracles::random_permutation(rng, n);
        auto p = g.permuted(perm);
        for (int v = 0; v < n; ++v)
            CHECK(rra(g, v) == doctest::Approx(rra(p, perm[v])).epsilon(1e-12));
    }
}

TEST_CASE("adding an edge never increases mean depth") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        int n = std::uniform_int_distribution<int>(4, 10)(rng);
        auto g = oracles::random_connected_graph(rng, n, 0.1);
        // Pick a non-edge.
        std::vector<std::pair<int, int>> non_edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                bool present = false;
                for (auto [x, y] : g.edges)
                    if (x == i && y == j) present = true;
                if (!present) non_edges.emplace_back(i, j);
            }
        if (non_edges.empty()) continue;
        auto extra = non_edges[std::uniform_int_distribution<size_t>(0, non_edges.size() - 1)(rng)];
        auto denser = g;
        denser.edges.push_back(extra);
        for (int v = 0; v < n; ++v) CHECK(mean_depth(denser, v) <= mean_depth(g, v) + 1e-12);
    }
}

TEST_CASE("rra_by_label keeps the max and skips closets") {
    // hw-dk core with two we leaves at different depths: the deeper one wins.
    AccessGraph g;
    g.labels = {RoomLabel::en, RoomLabel::hw, RoomLabel::dk, RoomLabel::we, RoomLabel::we,
                RoomLabel::cl};
    g.edges = {{0, 1}, {1, 2}, {1, 3}, {2, 4}, {4, 5}};
    auto by_label = rra_by_label(g);

    CHECK(by_label.count(RoomLabel::cl) == 0);
    double r3 = rra(g, 3), r4 = rra(g, 4);
    CHECK(by_label[RoomLabel::we] == doctest::Approx(std::max(r3, r4)));
    CHECK(by_label[RoomLabel::ja] == 0.0);  // absent label reports zero
}

TEST_CASE("difference factor fixtures") {
    // 4-cycle: every node has RRA 0.2, so a = b = c and H = ln 3, H* = 1.
    AccessGraph c4;
    c4.labels = {RoomLabel::en, RoomLabel::hw, RoomLabel::dk, RoomLabel::we};
    c4.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
    auto f = difference_factor(c4);
    CHECK(f.h == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.h_star == doctest::Approx(1.0).epsilon(1e-12));

    // Direct evaluation of the formulas at shares (0.5, 0.3, 0.2):
    // H = -(0.5 ln 0.5 + 0.3 ln 0.3 + 0.2 ln 0.2) = 1.0296530140645737,
    // H* = (H - ln 2) / (ln 3 - ln 2)            = 0.8299255022823318.
    double h_oracle = -(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2));
    double h_star_oracle = (h_oracle - std::numbers::ln2) / (std::log(3.0) - std::numbers::ln2);
    CHECK(h_oracle == doctest::Approx(1.0296530140645737).epsilon(1e-14));
    CHECK(h_star_oracle == doctest::Approx(0.8299255022823318).epsilon(1e-12));

    // Star with closet leaves only: every non-closet starting point vanishes.
    auto degenerate = star(RoomLabel::en, {RoomLabel::cl, RoomLabel::cl});
    CHECK_THROWS_AS(difference_factor(degenerate), Error);
}

TEST_CASE("graph_features on the small path") {
    auto path = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::we});
    auto gf = graph_features(path);
    CHECK(gf.num_node == 3);
    CHECK(gf.num_edge == 2);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::en)] == 1);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::hw)] == 1);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::we)] == 1);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::bl)] == 0);
    CHECK(gf.depth == 2);
    int total = 0;
    for (int c : gf.num_label) total += c;
    CHECK(total == gf.num_node);
}

TEST_CASE("graph_features hand-counted 3LDK fixture") {
    // en(0)-hw(1); hw-dk(2); dk-ja(3); dk-we(4); hw-we(5); hw-la(6);
    // la-bt(7); la-to(8); ja-cl(9); we(4)-bl(10).
    AccessGraph g;
    g.id = "3ldk";
    g.labels = {RoomLabel::en, RoomLabel::hw, RoomLabel::dk, RoomLabel::ja,
                RoomLabel::we, RoomLabel::we, RoomLabel::la, RoomLabel::bt,
                RoomLabel::to, RoomLabel::cl, RoomLabel::bl};
    g.edges = {{0, 1}, {1, 2}, {2, 3}, {2, 4}, {1, 5}, {1, 6}, {6, 7}, {6, 8}, {3, 9}, {4, 10}};
    auto gf = graph_features(g);
    CHECK(gf.num_node == 11);
    CHECK(gf.num_edge == 10);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::we)] == 2);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::cl)] == 1);
    CHECK(gf.num_label[static_cast<int>(RoomLabel::bl)] == 1);
    // Deepest nodes: en-hw-dk-ja-cl and en-hw-dk-we-bl, four steps.
    CHECK(gf.depth == 4);
    CHECK(gf.rra_label[static_cast<int>(RoomLabel::cl)] == 0.0);  // never populated
    CHECK(gf.h_star <= 1.0 + 1e-12);
}

TEST_CASE("synthetic corpus respects published feature ranges") {
    SynthConfig cfg;
    cfg.n_records = 300;
    cfg.n_templates = 50;
    cfg.seed = 17;
    auto [ds, gt] = generate_corpus(cfg);
    double ln3 = std::log(3.0);
    for (const auto& g : ds.graphs) {
        auto gf = graph_features(g);
        CHECK(gf.num_edge >= 8);
        CHECK(gf.num_edge <= 25);
        CHECK(gf.num_label[static_cast<int>(RoomLabel::cl)] >= 0);
        CHECK(gf.num_label[static_cast<int>(RoomLabel::cl)] <= 9);
        CHECK(gf.depth >= 3);
        CHECK(gf.depth <= 8);
        CHECK(gf.rra_label[static_cast<int>(RoomLabel::bt)] >= 0.678);
        CHECK(gf.rra_label[static_cast<int>(RoomLabel::bt)] <= 2.345);
        CHECK(gf.h_star >= 0.278);
        CHECK(gf.h_star <= 0.888);
        auto f = difference_factor(g);
        CHECK(f.h > 0.0);
        CHECK(f.h <= ln3 + 1e-12);
    }
}

TEST_CASE("feature csv layout") {
    auto header = gf_csv_header();
    CHECK(header.find("id,num_node,num_edge,num_bl") == 0);
    CHECK(header.find("rra_cl") == std::string::npos);
    CHECK(header.find("h_star") != std::string::npos);
    auto path = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::we});
    auto row = gf_csv_row("x", graph_features(path));
    CHECK(row.substr(0, 2) == "x,");
    // Same number of commas in header and row.
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}
