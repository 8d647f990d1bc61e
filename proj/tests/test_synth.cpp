#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "fpv/stats.hpp"
#include "fpv/synth.hpp"
#include "fpv/syntax.hpp"

using namespace fpv;

TEST_CASE("generation is deterministic in the seed") {
    SynthConfig cfg;
    cfg.n_records = 80;
    cfg.n_templates = 10;
    cfg.seed = 42;
    auto [ds1, gt1] = generate_corpus(cfg);
    auto [ds2, gt2] = generate_corpus(cfg);

    REQUIRE(ds1.size() == ds2.size());
    for (size_t i = 0; i < ds1.size(); ++i) {
        CHECK(to_jsonl(ds1.graphs[i]) == to_jsonl(ds2.graphs[i]));
        CHECK(ds1.records[i].rent == ds2.records[i].rent);
        CHECK(ds1.records[i].area == ds2.records[i].area);
    }
    CHECK(gt1.to_json(ds1) == gt2.to_json(ds2));

    cfg.seed = 43;
    auto [ds3, gt3] = generate_corpus(cfg);
    bool any_diff = false;
    for (size_t i = 0; i < ds1.size() && !any_diff; ++i)
        if (ds1.records[i].rent != ds3.records[i].rent) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("every generated graph passes validation") {
    SynthConfig cfg;
    cfg.n_records = 200;
    cfg.n_templates = 40;
    cfg.seed = 3;
    auto [ds, gt] = generate_corpus(cfg);
    REQUIRE(ds.size() == 200);
    for (const auto& g : ds.graphs) {
        CHECK(validate(g).ok());
        CHECK(g.count_label(RoomLabel::en) == 1);
    }
}

TEST_CASE("no noise and no planted table gives an exactly linear rent") {
    SynthConfig cfg;
    cfg.n_records = 150;
    cfg.n_templates = 12;
    cfg.seed = 5;
    cfg.noise_sd = 0.0;
    cfg.planted.clear();
    auto [ds, gt] = generate_corpus(cfg);

    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(gt.graph_utility[i] == 0.0);
        CHECK(ds.records[i].rent == doctest::Approx(gt.tabular_contribution[i]).epsilon(1e-12));
    }

    // Rent is exactly linear in the tabular columns: an OLS on them fits
    // with zero residual.
    int n = static_cast<int>(ds.size());
    Eigen::MatrixXd x(n, 7 + kNumStructures + 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const auto& r = ds.records[i];
        x(i, 0) = r.land_price;
        x(i, 1) = r.area;
        x(i, 2) = r.year;
        x(i, 3) = r.f_building;
        x(i, 4) = r.f_dwelling;
        x(i, 5) = r.distance;
        x(i, 6) = r.passenger;
        for (int s = 0; s < kNumStructures; ++s)
            x(i, 7 + s) = static_cast<int>(r.structure) == s ? 1.0 : 0.0;
        x(i, 7 + kNumStructures) = 1.0;
        y(i) = r.rent;
    }
    // Structure dummies sum to the constant; drop the last present category
    // to keep the fit full rank (same rule as the evaluation design builder).
    Eigen::MatrixXd xr(n, x.cols() - 1);
    std::vector<std::string> names;
    int c2 = 0;
    std::vector<int> keep;
    for (int c = 0; c < x.cols(); ++c) {
        double mn = x.col(c).minCoeff(), mx = x.col(c).maxCoeff();
        bool structure_col = c >= 7 && c < 7 + kNumStructures;
        if (structure_col && mn == mx) continue;  // absent category
        keep.push_back(c);
    }
    // Drop one structure dummy as reference.
    for (size_t k = 0; k < keep.size(); ++k) {
        int c = keep[k];
        if (c >= 7 && c < 7 + kNumStructures) {
            keep.erase(keep.begin() + k);
            break;
        }
    }
    Eigen::MatrixXd xf(n, keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
        xf.col(c2) = x.col(keep[k]);
        names.push_back(keep[k] == x.cols() - 1 ? "const" : "c" + std::to_string(keep[k]));
        c2++;
    }
    auto fit = stats::fit_ols(xf, y, names);
    CHECK(fit.rmse <= 1e-6 * 80000);
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("planted motif deltas add to the rent") {
    AccessGraph g;
    g.labels = {RoomLabel::bl, RoomLabel::bl, RoomLabel::ja, RoomLabel::ja, RoomLabel::dk};
    g.edges = {{0, 4}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
    std::map<std::string, double> planted{{"bl", 5000.0}, {"ja-ja", -4000.0}, {"dk-ja", 100.0}};
    // Two balconies, one ja-ja edge, two dk-ja edges.
    CHECK(planted_utility(g, planted) == doctest::Approx(2 * 5000 - 4000 + 2 * 100));

    auto counts = motif_counts(g);
    CHECK(counts["bl"] == 2);
    CHECK(counts["ja-ja"] == 1);
    CHECK(counts["bl-dk"] == 2);
    CHECK(counts["dk-ja"] == 2);
}

TEST_CASE("empirical area mean tracks the configured moment") {
    SynthConfig cfg;
    cfg.n_records = 2000;
    cfg.n_templates = 30;
    cfg.seed = 7;
    auto [ds, gt] = generate_corpus(cfg);
    double mean = 0;
    for (const auto& r : ds.records) mean += r.area;
    mean /= ds.size();
    CHECK(std::fabs(mean - cfg.area_mean) <= 0.05 * cfg.area_mean);
}

TEST_CASE("oracle regression recovers planted deltas") {
    SynthConfig cfg;
    cfg.n_records = 1500;
    cfg.n_templates = 40;
    cfg.seed = 9;
    cfg.planted = {{"bl", 6000.0}, {"ja-ja", -5000.0}};
    auto [ds, gt] = generate_corpus(cfg);

    // rent ~ [bl count, ja-ja count, tabular, const]; the tabular part of the
    // generator is linear, so motif coefficients estimate the planted deltas.
    int n = static_cast<int>(ds.size());
    Eigen::MatrixXd x(n, 2 + 7 + 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        auto counts = motif_counts(ds.graphs[i]);
        const auto& r = ds.records[i];
        x(i, 0) = counts.count("bl") ? counts["bl"] : 0;
        x(i, 1) = counts.count("ja-ja") ? counts["ja-ja"] : 0;
        x(i, 2) = r.land_price;
        x(i, 3) = r.area;
        x(i, 4) = r.year;
        x(i, 5) = r.f_building;
        x(i, 6) = r.f_dwelling;
        x(i, 7) = r.distance;
        x(i, 8) = r.passenger;
        x(i, 9) = 1.0;
        y(i) = r.rent;
    }
    std::vector<std::string> names{"bl", "ja-ja", "lp", "area", "year", "fb", "fd", "dist", "pass",
                                   "const"};
    auto fit = stats::fit_ols(x, y, names);
    CHECK(std::fabs(fit.coef[0] - 6000.0) <= 3 * fit.se[0]);
    CHECK(std::fabs(fit.coef[1] + 5000.0) <= 3 * fit.se[1]);
}

TEST_CASE("spearman correlation") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    // Monotone but nonlinear is still a perfect rank correlation.
    CHECK(spearman({1, 2, 3, 4}, {1, 10, 100, 1000}) == doctest::Approx(1.0));
    CHECK(std::fabs(spearman({1, 2, 3, 4, 5, 6, 7, 8}, {5, 1, 7, 3, 8, 2, 6, 4})) < 0.7);
    CHECK_THROWS_AS(spearman({1.0}, {2.0}), Error);
}

TEST_CASE("config json round trip") {
    SynthConfig cfg;
    cfg.n_records = 77;
    cfg.planted = {{"bl", 1200.0}, {"cl-hw", 340.0}};
    cfg.noise_sd = 1234.5;
    auto back = SynthConfig::from_json(cfg.to_json());
    CHECK(back.n_records == 77);
    CHECK(back.noise_sd == 1234.5);
    CHECK(back.planted == cfg.planted);
}
