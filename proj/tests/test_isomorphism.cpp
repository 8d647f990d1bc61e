#include <doctest.h>

#include <map>
#include <random>

#include "fpv/isomorphism.hpp"
#include "fpv/synth.hpp"
#include "oracles.hpp"

using namespace fpv;

namespace {

AccessGraph labeled_path(std::vector<RoomLabel> labels, std::string id = "g") {
    AccessGraph g;
    g.id = std::move(id);
    g.labels = std::move(labels);
    for (int i = 0; i + 1 < g.node_count(); ++i) g.edges.emplace_back(i, i + 1);
    return g;
}

}  // namespace

TEST_CASE("is_isomorphic on the path fixtures") {
    auto base = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::we});

    // Same path with node indices permuted.
    auto permuted = base.permuted({1, 2, 0});
    CHECK(is_isomorphic(base, permuted));
    CHECK(oracles::iso_bruteforce(base, permuted));

    // en-hw-we vs en-we-hw: the entrance neighbors a different room type.
    auto swapped = labeled_path({RoomLabel::en, RoomLabel::we, RoomLabel::hw});
    CHECK(!is_isomorphic(base, swapped));
    CHECK(!oracles::iso_bruteforce(base, swapped));

    CHECK(is_isomorphic(base, base));
}

TEST_CASE("canonical keys separate and unite the path fixtures") {
    auto base = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::we});
    auto permuted = base.permuted({2, 0, 1});
    auto swapped = labeled_path({RoomLabel::en, RoomLabel::we, RoomLabel::hw});

    CHECK(canonical_key(base) == canonical_key(permuted));
    CHECK(canonical_key(base) != canonical_key(swapped));
}

TEST_CASE("canonical key is invariant under node permutation") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = oracles::random_graph(rng, 8, 4);
        auto key = canonical_key(g);
        for (int rep = 0; rep < 3; ++rep) {
            auto perm = oracles::random_permutation(rng, g.node_count());
            CHECK(canonical_key(g.permuted(perm)) == key);
        }
    }
}

TEST_CASE("canonical key grouping equals brute-force grouping on random graphs") {
    // Acceptance runs this at 1000 graphs; keep the unit version lighter.
    std::mt19937_64 rng(11);
    std::vector<AccessGraph> graphs;
    for (int i = 0; i < 120; ++i) graphs.push_back(oracles::random_graph(rng, 7, 2));
    // Inject permuted duplicates so grouping is non-trivial.
    for (int i = 0; i < 40; ++i) {
        auto g = graphs[i];
        graphs.push_back(g.permuted(oracles::random_permutation(rng, g.node_count())));
    }

    for (size_t i = 0; i < graphs.size(); ++i) {
        for (size_t j = i + 1; j < graphs.size(); ++j) {
            bool by_key = canonical_key(graphs[i]) == canonical_key(graphs[j]);
            bool by_oracle = oracles::iso_bruteforce(graphs[i], graphs[j]);
            if (by_key != by_oracle) {
                CAPTURE(i);
                CAPTURE(j);
                REQUIRE(by_key == by_oracle);
            }
        }
    }
}

TEST_CASE("is_isomorphic agrees with the brute-force oracle") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 400; ++trial) {
        auto a = oracles::random_graph(rng, 6, 2);
        auto b = oracles::random_graph(rng, 6, 2);
        CHECK(is_isomorphic(a, b) == oracles::iso_bruteforce(a, b));
    }
}

TEST_CASE("deduplicate partitions a corpus") {
    auto a = labeled_path({RoomLabel::en, RoomLabel::hw, RoomLabel::we}, "a");
    auto b = a.permuted({1, 0, 2});
    b.id = "b";
    auto c = a.permuted({2, 1, 0});
    c.id = "c";
    auto d = labeled_path({RoomLabel::en, RoomLabel::we, RoomLabel::hw}, "d");

    std::vector<AccessGraph> corpus{a, b, c, d};
    auto report = deduplicate(corpus);
    CHECK(report.corpus_size == 4);
    REQUIRE(report.classes.size() == 2);
    CHECK(report.classes[0].frequency() == 3);
    CHECK(report.classes[1].frequency() == 1);
    CHECK(report.classes[0].representative.id == "a");  // first member encountered
    CHECK(report.classes[0].member_ids == std::vector<std::string>{"a", "b", "c"});

    int total = 0;
    for (const auto& cls : report.classes) total += cls.frequency();
    CHECK(total == 4);
}

TEST_CASE("deduplicate of an empty corpus") {
    auto report = deduplicate(std::vector<AccessGraph>{});
    CHECK(report.corpus_size == 0);
    CHECK(report.classes.empty());
}

TEST_CASE("dedup recovers the generator's template count") {
    SynthConfig cfg;
    cfg.n_records = 500;
    cfg.n_templates = 40;
    cfg.seed = 21;
    auto [ds, gt] = generate_corpus(cfg);
    auto report = deduplicate(ds.graphs);
    CHECK(report.classes.size() == 40);
    int total = 0;
    for (const auto& cls : report.classes) total += cls.frequency();
    CHECK(total == 500);
    // Classes are sorted by descending frequency.
    for (size_t i = 1; i < report.classes.size(); ++i)
        CHECK(report.classes[i - 1].frequency() >= report.classes[i].frequency());
}

TEST_CASE("dedup csv and json are well formed") {
    auto a = labeled_path({RoomLabel::en, RoomLabel::hw}, "a");
    auto b = labeled_path({RoomLabel::en, RoomLabel::hw}, "b");
    auto report = deduplicate(std::vector<AccessGraph>{a, b});
    auto csv = dedup_to_csv(report);
    CHECK(csv.find("class_key,frequency,representative_id") == 0);
    CHECK(csv.find(",2,a") != std::string::npos);
    auto json_text = dedup_to_json(report);
    CHECK(json_text.find("\"corpus_size\": 2") != std::string::npos);
}
