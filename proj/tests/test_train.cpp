#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "fpv/io.hpp"
#include "fpv/synth.hpp"
#include "fpv/train.hpp"

using namespace fpv;

namespace {

Dataset small_corpus(int n, std::uint64_t seed, int templates = 12) {
    SynthConfig cfg;
    cfg.n_records = n;
    cfg.n_templates = templates;
    cfg.seed = seed;
    return generate_corpus(cfg).first;
}

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 32;
    cfg.checkpoint_interval = 10;
    cfg.hidden_dim = 8;
    cfg.num_layers = 2;
    cfg.seed = 3;
    return cfg;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("training memorizes a single record") {
    auto ds = small_corpus(1, 5, 1);
    TrainConfig cfg = toy_config();
    cfg.batch_size = 1;
    cfg.epochs = 300;
    cfg.checkpoint_interval = 300;
    auto result = train(ds, cfg);
    CHECK(result.log.back().train_rmse_yen < 1.0);
}

TEST_CASE("same seed gives identical checkpoint bytes") {
    auto ds = small_corpus(60, 6);
    TrainConfig cfg = toy_config();
    auto a = train(ds, cfg);
    auto b = train(ds, cfg);

    auto pa = temp_path("fpv_ckpt_a.bin");
    auto pb = temp_path("fpv_ckpt_b.bin");
    a.final.save(pa);
    b.final.save(pb);
    CHECK(io::read_file(pa) == io::read_file(pb));

    // A different seed diverges.
    cfg.seed = 99;
    auto c = train(ds, cfg);
    auto pc = temp_path("fpv_ckpt_c.bin");
    c.final.save(pc);
    CHECK(io::read_file(pa) != io::read_file(pc));
}

TEST_CASE("checkpoint round trip reproduces the forward pass") {
    auto ds = small_corpus(40, 7);
    TrainConfig cfg = toy_config();
    auto result = train(ds, cfg);

    auto path = temp_path("fpv_ckpt_rt.bin");
    result.final.save(path);
    auto loaded = Checkpoint::load(path);

    std::vector<const AccessGraph*> graphs;
    for (const auto& g : ds.graphs) graphs.push_back(&g);
    auto before = fpv_scores(result.final.model, graphs);
    auto after = fpv_scores(loaded.model, graphs);
    REQUIRE(before.size() == after.size());
    for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);  // bit exact
    CHECK(loaded.epoch == result.final.epoch);
    CHECK(loaded.y_mean == result.final.y_mean);
    CHECK(loaded.shuffle_rng == result.final.shuffle_rng);
}

TEST_CASE("resume reproduces the uninterrupted run") {
    auto ds = small_corpus(50, 8);
    TrainConfig cfg = toy_config();
    cfg.epochs = 16;
    cfg.checkpoint_interval = 8;

    Checkpoint mid;
    auto straight = train(ds, cfg, [&](const Checkpoint& ckpt) {
        if (ckpt.epoch == 8) mid = ckpt;
    });

    auto resumed = resume(mid, ds, cfg);
    auto ps = temp_path("fpv_ckpt_straight.bin");
    auto pr = temp_path("fpv_ckpt_resumed.bin");
    straight.final.save(ps);
    resumed.final.save(pr);
    CHECK(io::read_file(ps) == io::read_file(pr));
    // The per-epoch log also lines up over the resumed range.
    REQUIRE(resumed.log.size() == 8);
    for (size_t i = 0; i < resumed.log.size(); ++i) {
        CHECK(resumed.log[i].epoch == straight.log[8 + i].epoch);
        CHECK(resumed.log[i].train_rmse_yen ==
              doctest::Approx(straight.log[8 + i].train_rmse_yen).epsilon(1e-12));
    }
}

TEST_CASE("training error drops substantially from the first epoch") {
    auto ds = small_corpus(150, 9);
    TrainConfig cfg = toy_config();
    cfg.epochs = 60;
    cfg.batch_size = 64;
    auto result = train(ds, cfg);
    double first = result.log.front().train_rmse_yen;
    // Trailing mean over the last 10 epochs at least halves the epoch-1 RMSE.
    double trailing = 0;
    for (int i = 0; i < 10; ++i) trailing += result.log[result.log.size() - 1 - i].train_rmse_yen;
    trailing /= 10;
    CHECK(trailing < 0.5 * first);
}

TEST_CASE("checkpoints appear at every interval") {
    auto ds = small_corpus(30, 10);
    TrainConfig cfg = toy_config();
    cfg.epochs = 25;  // not a multiple: final checkpoint added anyway
    std::vector<int> seen;
    train(ds, cfg, [&](const Checkpoint& ckpt) { seen.push_back(ckpt.epoch); });
    CHECK(seen == std::vector<int>{10, 20, 25});
}

TEST_CASE("train config json round trip") {
    TrainConfig cfg;
    cfg.lr = 0.005;
    cfg.epochs = 123;
    cfg.pooling = "sum";
    cfg.seed = 77;
    auto back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.lr == cfg.lr);
    CHECK(back.epochs == cfg.epochs);
    CHECK(back.pooling == cfg.pooling);
    CHECK(back.seed == cfg.seed);
    CHECK(back.batch_size == cfg.batch_size);
    // Defaults fill missing fields.
    auto defaults = TrainConfig::from_json("{}");
    CHECK(defaults.lr == 0.01);
    CHECK(defaults.batch_size == 1024);
    CHECK(defaults.epochs == 2000);
    CHECK(defaults.checkpoint_interval == 50);
}

TEST_CASE("training rejects an empty dataset") {
    Dataset empty;
    CHECK_THROWS_AS(train(empty, toy_config()), Error);
}
