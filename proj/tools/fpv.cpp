// fpv: floor-plan valuation pipeline driver.
//
// Subcommands map 1:1 onto the library modules: validate, dedup, features,
// train, cv, score, explain, anom, compare, synth, and report (the full
// pipeline in one run). Every subcommand that takes --out-dir writes a
// manifest.json capturing the config, input digests, and seeds, and reruns
// from the same manifest are byte-identical.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpv/attribution.hpp"
#include "fpv/dataset.hpp"
#include "fpv/evaluation.hpp"
#include "fpv/gcn.hpp"
#include "fpv/graph.hpp"
#include "fpv/io.hpp"
#include "fpv/isomorphism.hpp"
#include "fpv/kernels.hpp"
#include "fpv/stats.hpp"
#include "fpv/synth.hpp"
#include "fpv/syntax.hpp"
#include "fpv/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class Manifest {
public:
    Manifest(std::string subcommand, std::string out_dir)
        : out_dir_(std::move(out_dir)) {
        j_["tool"] = "fpv";
        j_["version"] = kVersion;
        j_["subcommand"] = std::move(subcommand);
        j_["kernels"] = fpv::kernels::active().name;
        j_["inputs"] = json::object();
        j_["outputs"] = json::array();
    }

    void config(const json& cfg) { j_["config"] = cfg; }

    void input(const std::string& path) {
        j_["inputs"][path] = fpv::io::sha256_file(path);
    }

    std::string out_path(const std::string& name) {
        j_["outputs"].push_back(name);
        return (fs::path(out_dir_) / name).string();
    }

    void write() {
        std::sort(j_["outputs"].begin(), j_["outputs"].end());
        fpv::io::write_file((fs::path(out_dir_) / "manifest.json").string(), j_.dump(2) + "\n");
    }

private:
    std::string out_dir_;
    json j_;
};

std::string ensure_dir(const std::string& dir) {
    fs::create_directories(dir);
    return dir;
}

fpv::Dataset load_dataset(const std::string& graphs_path, const std::string& tabular_path,
                          fpv::JoinReport* join_report = nullptr,
                          std::optional<double> max_rent = std::nullopt) {
    auto graphs = fpv::load_graphs(graphs_path);
    fpv::LoadReport load_report;
    auto tabular = fpv::load_tabular(tabular_path, &load_report);
    for (const auto& line : load_report.dropped) std::cerr << "tabular: dropped " << line << "\n";
    fpv::JoinReport local;
    auto ds = fpv::join(graphs, tabular, &local, max_rent);
    if (local.unmatched_graphs || local.unmatched_tabular)
        std::cerr << "join: " << local.unmatched_graphs << " unmatched graphs, "
                  << local.unmatched_tabular << " unmatched tabular rows\n";
    if (join_report) *join_report = local;
    return ds;
}

void validate_dataset_graphs(const fpv::Dataset& ds) {
    for (const auto& g : ds.graphs) {
        auto report = fpv::validate(g);
        if (!report.ok()) {
            std::string what = "graph " + g.id + " failed validation:";
            for (auto f : report.findings) what += std::string(" ") + fpv::to_string(f);
            throw fpv::Error("InvalidGraph", what);
        }
    }
}

// --- SVG report figures -----------------------------------------------------

std::string trainlog_svg(const std::vector<fpv::EpochLog>& log) {
    double lo = 1e300, hi = -1e300;
    for (const auto& e : log) {
        lo = std::min(lo, e.train_rmse_yen);
        hi = std::max(hi, e.train_rmse_yen);
    }
    fpv::io::SvgCanvas svg(760, 360, 0, log.empty() ? 1 : log.back().epoch, lo * 0.95, hi * 1.05,
                           "training RMSE (Yen) by epoch");
    svg.y_axis_labels();
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : log) pts.emplace_back(e.epoch, e.train_rmse_yen);
    svg.polyline(pts, "#d62728");
    std::vector<std::pair<double, std::string>> ticks;
    int step = std::max(1, static_cast<int>(log.size()) / 8);
    for (size_t i = 0; i < log.size(); i += step)
        ticks.emplace_back(log[i].epoch, std::to_string(log[i].epoch));
    svg.x_axis_labels(ticks);
    return svg.finish();
}

std::string semicv_svg(const fpv::SemiCvResult& r) {
    std::vector<int> good;
    for (size_t f = 0; f < r.folds.size(); ++f)
        if (!r.rmse[f].empty()) good.push_back(static_cast<int>(f));
    double lo = 1e300, hi = -1e300;
    for (int f : good)
        for (double v : r.rmse[f]) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    fpv::io::SvgCanvas svg(760, 360, r.epochs.front(), r.epochs.back(), lo * 0.95, hi * 1.05,
                           "semi-cross-validation test RMSE by checkpoint epoch");
    svg.y_axis_labels();
    for (int f : good) {
        std::vector<std::pair<double, double>> pts;
        for (size_t ei = 0; ei < r.epochs.size(); ++ei) pts.emplace_back(r.epochs[ei], r.rmse[f][ei]);
        svg.polyline(pts, "#c6dbef", 1.0);
    }
    std::vector<std::pair<double, double>> mean_pts;
    for (size_t ei = 0; ei < r.epochs.size(); ++ei) {
        double m = 0;
        for (int f : good) m += r.rmse[f][ei];
        mean_pts.emplace_back(r.epochs[ei], m / good.size());
    }
    svg.polyline(mean_pts, "#08519c", 2.0);
    std::vector<std::pair<double, std::string>> ticks;
    size_t step = std::max<size_t>(1, r.epochs.size() / 10);
    for (size_t ei = 0; ei < r.epochs.size(); ei += step)
        ticks.emplace_back(r.epochs[ei], std::to_string(r.epochs[ei]));
    svg.x_axis_labels(ticks);
    return svg.finish();
}

std::string anom_svg(const fpv::AnomResult& r) {
    // Node groups (no dash) first, then edge groups; mean dot with [LDL, UDL]
    // whiskers per group and the grand mean as a dashed line.
    std::vector<const fpv::AnomGroup*> ordered;
    for (const auto& g : r.groups)
        if (g.key.find('-') == std::string::npos) ordered.push_back(&g);
    for (const auto& g : r.groups)
        if (g.key.find('-') != std::string::npos) ordered.push_back(&g);

    double lo = 1e300, hi = -1e300;
    for (const auto* g : ordered) {
        lo = std::min({lo, g->ldl, g->mean});
        hi = std::max({hi, g->udl, g->mean});
    }
    double pad = (hi - lo) * 0.08 + 1e-9;
    fpv::io::SvgCanvas svg(140 + static_cast<int>(ordered.size()) * 34, 420, 0,
                           static_cast<double>(ordered.size()), lo - pad, hi + pad,
                           "mean standardized contribution by component type");
    svg.y_axis_labels();
    svg.line(0, r.grand_mean, static_cast<double>(ordered.size()), r.grand_mean, "#333", 1.0, true);
    std::vector<std::pair<double, std::string>> ticks;
    for (size_t i = 0; i < ordered.size(); ++i) {
        const auto& g = *ordered[i];
        double x = i + 0.5;
        svg.line(x, g.ldl, x, g.udl, "#999", 1.0);
        svg.line(x - 0.3, g.ldl, x + 0.3, g.ldl, "#999", 1.0);
        svg.line(x - 0.3, g.udl, x + 0.3, g.udl, "#999", 1.0);
        svg.circle(x, g.mean, 3.5, g.significant ? "#d62728" : "#1f77b4");
        ticks.emplace_back(x, g.key);
    }
    svg.x_axis_labels(ticks, -60);
    return svg.finish();
}

// --- shared pipeline steps ---------------------------------------------------

struct CvArtifacts {
    fpv::SemiCvResult result;
};

void write_cv_outputs(Manifest& manifest, const fpv::Dataset& ds, const fpv::EvalConfig& cfg,
                      const fpv::SemiCvResult& cv) {
    fpv::io::write_file(manifest.out_path("folds.json"),
                        fpv::folds_to_json(ds, cv.folds, cfg.split_seed));
    fpv::io::write_file(manifest.out_path("semicv.csv"), fpv::semicv_to_csv(cv));
    fpv::io::write_file(manifest.out_path("semicv.svg"), semicv_svg(cv));

    json summary;
    summary["epochs"] = cv.epochs;
    summary["best_epoch"] = cv.best_epoch;
    summary["fold_best_epoch"] = cv.fold_best_epoch;
    summary["failed_folds"] = cv.failed_folds;
    summary["rmse"] = cv.rmse;
    summary["adj_r2"] = cv.adj_r2;
    fpv::io::write_file(manifest.out_path("cv_summary.json"), summary.dump(2) + "\n");
    json fpvs;
    fpvs["fpv"] = cv.fpv;
    fpv::io::write_file(manifest.out_path("cv_fpv.json"), fpvs.dump() + "\n");
}

fpv::SemiCvResult read_cv_outputs(const fpv::Dataset& ds, const std::string& cv_dir) {
    fpv::SemiCvResult cv;
    cv.folds = fpv::folds_from_json(ds, fpv::io::read_file((fs::path(cv_dir) / "folds.json").string()));
    json summary = json::parse(fpv::io::read_file((fs::path(cv_dir) / "cv_summary.json").string()));
    cv.epochs = summary.at("epochs").get<std::vector<int>>();
    cv.best_epoch = summary.at("best_epoch").get<int>();
    cv.fold_best_epoch = summary.at("fold_best_epoch").get<std::vector<int>>();
    cv.failed_folds = summary.at("failed_folds").get<std::vector<std::string>>();
    cv.rmse = summary.at("rmse").get<std::vector<std::vector<double>>>();
    cv.adj_r2 = summary.at("adj_r2").get<std::vector<std::vector<double>>>();
    json fpvs = json::parse(fpv::io::read_file((fs::path(cv_dir) / "cv_fpv.json").string()));
    cv.fpv = fpvs.at("fpv").get<std::vector<std::vector<std::vector<double>>>>();
    return cv;
}

void write_compare_outputs(Manifest& manifest, const fpv::ModelComparison& cmp) {
    fpv::io::write_file(manifest.out_path("fold_metrics.csv"), fpv::fold_metrics_to_csv(cmp));
    fpv::io::write_file(manifest.out_path("comparison.json"), fpv::comparison_to_json(cmp) + "\n");
    for (const auto& model : cmp.model_names)
        fpv::io::write_file(manifest.out_path("coef_" + model + ".csv"),
                            fpv::coef_table_to_csv(cmp, model));
    std::vector<std::pair<std::string, std::vector<double>>> rmse_series, adj_series;
    for (int m = 0; m < cmp.rmse.rows(); ++m) {
        std::vector<double> r(cmp.rmse.cols()), a(cmp.adj_r2.cols());
        for (int f = 0; f < cmp.rmse.cols(); ++f) {
            r[f] = cmp.rmse(m, f);
            a[f] = cmp.adj_r2(m, f);
        }
        rmse_series.emplace_back(cmp.model_names[m], std::move(r));
        adj_series.emplace_back(cmp.model_names[m], std::move(a));
    }
    fpv::io::write_file(manifest.out_path("rmse_box.svg"),
                        fpv::io::boxplot_svg("test RMSE (Yen) by model", rmse_series));
    fpv::io::write_file(manifest.out_path("adj_r2_box.svg"),
                        fpv::io::boxplot_svg("test adjusted R2 by model", adj_series));
}

struct ExplainOutputs {
    std::vector<fpv::AccessGraph> graphs;          // explained graphs
    std::vector<fpv::Attribution> attributions;    // raw (not standardized)
};

ExplainOutputs run_explain(const fpv::GcnModel& model, const std::vector<fpv::AccessGraph>& graphs,
                           int steps) {
    ExplainOutputs out;
    for (const auto& g : graphs) {
        out.attributions.push_back(fpv::integrated_gradients(model, g, steps));
        out.graphs.push_back(g);
    }
    return out;
}

fpv::AnomResult run_anom(const ExplainOutputs& ex, bool joint, double alpha, int min_group,
                         fpv::TypedContributionTable* table_out = nullptr) {
    std::vector<fpv::Attribution> standardized;
    for (const auto& a : ex.attributions) standardized.push_back(fpv::standardize(a, joint));
    auto table = fpv::aggregate_by_type(standardized, ex.graphs);
    fpv::TypedContributionTable filtered;
    for (auto& [key, samples] : table.groups) {
        if (static_cast<int>(samples.size()) >= min_group)
            filtered.groups[key] = std::move(samples);
        else
            std::cerr << "anom: dropping group '" << key << "' with " << samples.size()
                      << " samples\n";
    }
    if (table_out) *table_out = filtered;
    return fpv::anom(filtered, alpha);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floor-plan valuation pipeline"};
    app.require_subcommand(1);
    std::string kernel_backend = "auto";
    app.add_option("--kernels", kernel_backend, "kernel backend: auto, scalar, avx2");

    // --- validate ---
    auto* cmd_validate = app.add_subcommand("validate", "validate a graph corpus");
    std::string v_in, v_out;
    cmd_validate->add_option("--in", v_in, "graphs JSONL")->required();
    cmd_validate->add_option("--out", v_out, "report JSON path");

    // --- dedup ---
    auto* cmd_dedup = app.add_subcommand("dedup", "isomorphism classes of a corpus");
    std::string d_in, d_out, d_out_dir;
    cmd_dedup->add_option("--in", d_in, "graphs JSONL")->required();
    cmd_dedup->add_option("--out", d_out, "frequency CSV path");
    cmd_dedup->add_option("--out-dir", d_out_dir, "directory for CSV + JSON + manifest");

    // --- features ---
    auto* cmd_features = app.add_subcommand("features", "graph-feature CSV per plan");
    std::string f_in, f_out;
    cmd_features->add_option("--in", f_in, "graphs JSONL")->required();
    cmd_features->add_option("--out", f_out, "features CSV path")->required();

    // --- train ---
    auto* cmd_train = app.add_subcommand("train", "train the joint model on all data");
    std::string t_graphs, t_tabular, t_config, t_out_dir;
    fpv::TrainConfig t_cfg;
    cmd_train->add_option("--graphs", t_graphs)->required();
    cmd_train->add_option("--tabular", t_tabular)->required();
    cmd_train->add_option("--config", t_config, "TrainConfig JSON file");
    cmd_train->add_option("--out-dir", t_out_dir)->required();
    cmd_train->add_option("--epochs", t_cfg.epochs);
    cmd_train->add_option("--batch-size", t_cfg.batch_size);
    cmd_train->add_option("--lr", t_cfg.lr);
    cmd_train->add_option("--seed", t_cfg.seed);
    cmd_train->add_option("--hidden-dim", t_cfg.hidden_dim);
    cmd_train->add_option("--layers", t_cfg.num_layers);
    cmd_train->add_option("--pooling", t_cfg.pooling);
    cmd_train->add_option("--checkpoint-interval", t_cfg.checkpoint_interval);

    // --- cv ---
    auto* cmd_cv = app.add_subcommand("cv", "10-fold semi-cross-validation");
    std::string c_graphs, c_tabular, c_config, c_out_dir;
    bool c_save_ckpt = false;
    fpv::EvalConfig c_cfg;
    cmd_cv->add_option("--graphs", c_graphs)->required();
    cmd_cv->add_option("--tabular", c_tabular)->required();
    cmd_cv->add_option("--config", c_config, "TrainConfig JSON file");
    cmd_cv->add_option("--out-dir", c_out_dir)->required();
    cmd_cv->add_option("--k", c_cfg.k);
    cmd_cv->add_option("--split-seed", c_cfg.split_seed);
    cmd_cv->add_option("--threads", c_cfg.threads);
    cmd_cv->add_option("--epochs", c_cfg.train.epochs);
    cmd_cv->add_option("--batch-size", c_cfg.train.batch_size);
    cmd_cv->add_option("--lr", c_cfg.train.lr);
    cmd_cv->add_option("--seed", c_cfg.train.seed);
    cmd_cv->add_option("--hidden-dim", c_cfg.train.hidden_dim);
    cmd_cv->add_option("--layers", c_cfg.train.num_layers);
    cmd_cv->add_option("--pooling", c_cfg.train.pooling);
    cmd_cv->add_option("--checkpoint-interval", c_cfg.train.checkpoint_interval);
    cmd_cv->add_flag("--save-checkpoints", c_save_ckpt, "persist every fold checkpoint");

    // --- score ---
    auto* cmd_score = app.add_subcommand("score", "FPV scores for graphs");
    std::string s_model, s_graphs, s_out;
    cmd_score->add_option("--model", s_model, "checkpoint file")->required();
    cmd_score->add_option("--graphs", s_graphs)->required();
    cmd_score->add_option("--out", s_out, "scores CSV")->required();

    // --- explain ---
    auto* cmd_explain = app.add_subcommand("explain", "integrated-gradient attributions");
    std::string e_model, e_graphs, e_out;
    int e_steps = 200;
    bool e_unique = false;
    cmd_explain->add_option("--model", e_model)->required();
    cmd_explain->add_option("--graphs", e_graphs)->required();
    cmd_explain->add_option("--out", e_out, "attributions JSONL")->required();
    cmd_explain->add_option("--steps", e_steps);
    cmd_explain->add_flag("--unique", e_unique, "explain one representative per isomorphism class");

    // --- anom ---
    auto* cmd_anom = app.add_subcommand("anom", "analysis of means over attributions");
    std::string a_attr, a_graphs, a_out_dir, a_standardize = "joint";
    double a_alpha = 0.05;
    int a_min_group = 2;
    cmd_anom->add_option("--attr", a_attr, "attributions JSONL")->required();
    cmd_anom->add_option("--graphs", a_graphs)->required();
    cmd_anom->add_option("--out-dir", a_out_dir)->required();
    cmd_anom->add_option("--alpha", a_alpha);
    cmd_anom->add_option("--standardize", a_standardize, "joint or separate");
    cmd_anom->add_option("--min-group", a_min_group, "smallest group size kept");

    // --- compare ---
    auto* cmd_compare = app.add_subcommand("compare", "baseline vs GF vs FPV hedonic models");
    std::string m_graphs, m_tabular, m_cv_dir, m_out_dir, m_gf = "real", m_gf_select = "exact";
    std::uint64_t m_gf_noise_seed = 5;
    cmd_compare->add_option("--graphs", m_graphs)->required();
    cmd_compare->add_option("--tabular", m_tabular)->required();
    cmd_compare->add_option("--cv-dir", m_cv_dir, "directory written by cv")->required();
    cmd_compare->add_option("--out-dir", m_out_dir)->required();
    cmd_compare->add_option("--gf-features", m_gf, "real or noise");
    cmd_compare->add_option("--gf-select", m_gf_select, "exact or eliminate");
    cmd_compare->add_option("--gf-noise-seed", m_gf_noise_seed);

    // --- synth ---
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic corpus");
    std::string y_out_dir, y_planted, y_config;
    fpv::SynthConfig y_cfg;
    cmd_synth->add_option("--out-dir", y_out_dir)->required();
    cmd_synth->add_option("--config", y_config, "SynthConfig JSON file");
    cmd_synth->add_option("--n", y_cfg.n_records);
    cmd_synth->add_option("--templates", y_cfg.n_templates);
    cmd_synth->add_option("--seed", y_cfg.seed);
    cmd_synth->add_option("--noise-sd", y_cfg.noise_sd);
    cmd_synth->add_option("--planted", y_planted, "planted table JSON, e.g. {\"bl\":6000}");

    // --- report ---
    auto* cmd_report = app.add_subcommand("report",
                                          "synth -> dedup -> features -> cv -> compare -> "
                                          "train -> explain -> anom, all artifacts");
    std::string r_out_dir, r_planted;
    fpv::SynthConfig r_synth;
    fpv::EvalConfig r_cfg;
    r_cfg.train.epochs = 200;
    r_cfg.train.batch_size = 256;
    r_cfg.train.hidden_dim = 32;
    std::string r_gf = "real";
    int r_steps = 200;
    cmd_report->add_option("--out-dir", r_out_dir)->required();
    cmd_report->add_option("--n", r_synth.n_records);
    cmd_report->add_option("--templates", r_synth.n_templates);
    cmd_report->add_option("--seed", r_synth.seed);
    cmd_report->add_option("--noise-sd", r_synth.noise_sd);
    cmd_report->add_option("--planted", r_planted);
    cmd_report->add_option("--k", r_cfg.k);
    cmd_report->add_option("--split-seed", r_cfg.split_seed);
    cmd_report->add_option("--threads", r_cfg.threads);
    cmd_report->add_option("--epochs", r_cfg.train.epochs);
    cmd_report->add_option("--batch-size", r_cfg.train.batch_size);
    cmd_report->add_option("--hidden-dim", r_cfg.train.hidden_dim);
    cmd_report->add_option("--layers", r_cfg.train.num_layers);
    cmd_report->add_option("--lr", r_cfg.train.lr);
    cmd_report->add_option("--train-seed", r_cfg.train.seed);
    cmd_report->add_option("--checkpoint-interval", r_cfg.train.checkpoint_interval);
    cmd_report->add_option("--gf-features", r_gf, "real or noise");
    cmd_report->add_option("--ig-steps", r_steps);

    CLI11_PARSE(app, argc, argv);

    try {
        fpv::kernels::select(kernel_backend);

        if (*cmd_validate) {
            auto graphs = fpv::load_graphs(v_in);
            json report = json::array();
            int invalid = 0;
            for (const auto& g : graphs) {
                auto r = fpv::validate(g);
                if (r.ok()) continue;
                ++invalid;
                json entry;
                entry["id"] = g.id;
                auto findings = json::array();
                for (auto f : r.findings) findings.push_back(fpv::to_string(f));
                entry["findings"] = std::move(findings);
                report.push_back(std::move(entry));
            }
            json out;
            out["graphs"] = graphs.size();
            out["invalid"] = invalid;
            out["violations"] = std::move(report);
            std::string text = out.dump(2) + "\n";
            if (!v_out.empty()) fpv::io::write_file(v_out, text);
            std::cout << text;
        }

        if (*cmd_dedup) {
            auto graphs = fpv::load_graphs(d_in);
            auto report = fpv::deduplicate(graphs);
            std::cout << "dedup: " << report.classes.size() << " classes over "
                      << report.corpus_size << " graphs\n";
            if (!d_out.empty()) fpv::io::write_file(d_out, fpv::dedup_to_csv(report));
            if (!d_out_dir.empty()) {
                Manifest manifest("dedup", ensure_dir(d_out_dir));
                manifest.input(d_in);
                fpv::io::write_file(manifest.out_path("classes.csv"), fpv::dedup_to_csv(report));
                fpv::io::write_file(manifest.out_path("classes.json"),
                                    fpv::dedup_to_json(report) + "\n");
                manifest.write();
            }
        }

        if (*cmd_features) {
            auto graphs = fpv::load_graphs(f_in);
            std::ostringstream out;
            out << fpv::gf_csv_header() << "\n";
            for (const auto& g : graphs)
                out << fpv::gf_csv_row(g.id, fpv::graph_features(g)) << "\n";
            fpv::io::write_file(f_out, out.str());
            std::cout << "features: wrote " << graphs.size() << " rows to " << f_out << "\n";
        }

        if (*cmd_train) {
            if (!t_config.empty()) {
                auto file_cfg = fpv::TrainConfig::from_json(fpv::io::read_file(t_config));
                // File config is the base; explicit flags already parsed on top.
                fpv::TrainConfig flags = t_cfg;
                t_cfg = file_cfg;
                for (const auto* opt : cmd_train->get_options()) {
                    if (opt->count() == 0) continue;
                    std::string name = opt->get_name();
                    if (name == "--epochs") t_cfg.epochs = flags.epochs;
                    if (name == "--batch-size") t_cfg.batch_size = flags.batch_size;
                    if (name == "--lr") t_cfg.lr = flags.lr;
                    if (name == "--seed") t_cfg.seed = flags.seed;
                    if (name == "--hidden-dim") t_cfg.hidden_dim = flags.hidden_dim;
                    if (name == "--layers") t_cfg.num_layers = flags.num_layers;
                    if (name == "--pooling") t_cfg.pooling = flags.pooling;
                    if (name == "--checkpoint-interval")
                        t_cfg.checkpoint_interval = flags.checkpoint_interval;
                }
            }
            auto ds = load_dataset(t_graphs, t_tabular);
            validate_dataset_graphs(ds);
            Manifest manifest("train", ensure_dir(t_out_dir));
            manifest.input(t_graphs);
            manifest.input(t_tabular);
            manifest.config(json::parse(t_cfg.to_json()));
            auto on_ckpt = [&](const fpv::Checkpoint& ckpt) {
                ckpt.save(manifest.out_path("ckpt_epoch" + std::to_string(ckpt.epoch) + ".ckpt"));
            };
            auto result = fpv::train(ds, t_cfg, on_ckpt);
            std::ostringstream log;
            log << "epoch,train_rmse_yen\n";
            char buf[64];
            for (const auto& e : result.log) {
                std::snprintf(buf, sizeof(buf), "%d,%.10g\n", e.epoch, e.train_rmse_yen);
                log << buf;
            }
            fpv::io::write_file(manifest.out_path("trainlog.csv"), log.str());
            fpv::io::write_file(manifest.out_path("trainlog.svg"), trainlog_svg(result.log));
            manifest.write();
            std::cout << "train: final RMSE " << result.log.back().train_rmse_yen << " Yen over "
                      << ds.size() << " records\n";
        }

        if (*cmd_cv) {
            if (!c_config.empty())
                c_cfg.train = fpv::TrainConfig::from_json(fpv::io::read_file(c_config));
            auto ds = load_dataset(c_graphs, c_tabular);
            validate_dataset_graphs(ds);
            Manifest manifest("cv", ensure_dir(c_out_dir));
            manifest.input(c_graphs);
            manifest.input(c_tabular);
            json cfg_json = json::parse(c_cfg.train.to_json());
            cfg_json["k"] = c_cfg.k;
            cfg_json["split_seed"] = c_cfg.split_seed;
            manifest.config(cfg_json);
            std::string ckpt_dir;
            if (c_save_ckpt) ckpt_dir = ensure_dir((fs::path(c_out_dir) / "checkpoints").string());
            auto cv = fpv::semi_cross_validate(ds, c_cfg, nullptr, ckpt_dir);
            write_cv_outputs(manifest, ds, c_cfg, cv);
            manifest.write();
            std::cout << "cv: best epoch " << cv.best_epoch << "\n";
            for (const auto& f : cv.failed_folds) std::cerr << "cv: " << f << "\n";
        }

        if (*cmd_score) {
            auto ckpt = fpv::Checkpoint::load(s_model);
            auto graphs = fpv::load_graphs(s_graphs);
            std::vector<const fpv::AccessGraph*> ptrs;
            for (const auto& g : graphs) ptrs.push_back(&g);
            auto raw = fpv::fpv_scores(ckpt.model, ptrs);
            auto dev = fpv::fpv_deviation(raw);
            std::ostringstream out;
            out << "id,raw_fpv,deviation\n";
            char buf[96];
            for (size_t i = 0; i < graphs.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g\n", graphs[i].id.c_str(), raw[i],
                              dev[i]);
                out << buf;
            }
            fpv::io::write_file(s_out, out.str());
            std::cout << "score: wrote " << graphs.size() << " scores to " << s_out << "\n";
        }

        if (*cmd_explain) {
            auto ckpt = fpv::Checkpoint::load(e_model);
            auto graphs = fpv::load_graphs(e_graphs);
            if (e_unique) {
                auto report = fpv::deduplicate(graphs);
                std::vector<fpv::AccessGraph> unique;
                for (const auto& cls : report.classes) unique.push_back(cls.representative);
                graphs = std::move(unique);
            }
            auto ex = run_explain(ckpt.model, graphs, e_steps);
            std::ostringstream out;
            for (const auto& a : ex.attributions) out << fpv::attribution_to_json(a) << "\n";
            fpv::io::write_file(e_out, out.str());
            std::cout << "explain: wrote " << ex.attributions.size() << " attributions to "
                      << e_out << "\n";
        }

        if (*cmd_anom) {
            auto graphs = fpv::load_graphs(a_graphs);
            std::map<std::string, const fpv::AccessGraph*> by_id;
            for (const auto& g : graphs) by_id[g.id] = &g;
            ExplainOutputs ex;
            std::istringstream lines(fpv::io::read_file(a_attr));
            std::string line;
            while (std::getline(lines, line)) {
                if (line.empty()) continue;
                auto attr = fpv::attribution_from_json(line);
                auto it = by_id.find(attr.graph_id);
                if (it == by_id.end())
                    throw fpv::Error("UnknownId", "attribution for unknown graph " + attr.graph_id);
                ex.graphs.push_back(*it->second);
                ex.attributions.push_back(std::move(attr));
            }
            Manifest manifest("anom", ensure_dir(a_out_dir));
            manifest.input(a_attr);
            manifest.input(a_graphs);
            manifest.config({{"alpha", a_alpha},
                             {"standardize", a_standardize},
                             {"min_group", a_min_group}});
            auto result = run_anom(ex, a_standardize != "separate", a_alpha, a_min_group);
            fpv::io::write_file(manifest.out_path("anom.csv"), fpv::anom_to_csv(result));
            fpv::io::write_file(manifest.out_path("anom.svg"), anom_svg(result));
            manifest.write();
            int significant = 0;
            for (const auto& g : result.groups) significant += g.significant;
            std::cout << "anom: " << significant << " of " << result.groups.size()
                      << " groups significant\n";
        }

        if (*cmd_compare) {
            auto ds = load_dataset(m_graphs, m_tabular);
            auto cv = read_cv_outputs(ds, m_cv_dir);
            fpv::EvalConfig cfg;
            cfg.gf_noise = m_gf == "noise";
            cfg.gf_noise_seed = m_gf_noise_seed;
            cfg.gf_exact_table = m_gf_select != "eliminate";
            Manifest manifest("compare", ensure_dir(m_out_dir));
            manifest.input(m_graphs);
            manifest.input(m_tabular);
            manifest.input((fs::path(m_cv_dir) / "cv_summary.json").string());
            manifest.input((fs::path(m_cv_dir) / "cv_fpv.json").string());
            manifest.config({{"gf_features", m_gf},
                             {"gf_select", m_gf_select},
                             {"gf_noise_seed", m_gf_noise_seed}});
            auto cmp = fpv::compare_models(ds, cv, cfg);
            write_compare_outputs(manifest, cmp);
            manifest.write();
            std::cout << "compare: best epoch " << cmp.best_epoch << ", mean RMSE"
                      << " baseline " << cmp.rmse.row(0).mean() << ", gf " << cmp.rmse.row(1).mean()
                      << ", fpv " << cmp.rmse.row(2).mean() << "\n";
        }

        if (*cmd_synth) {
            if (!y_config.empty())
                y_cfg = fpv::SynthConfig::from_json(fpv::io::read_file(y_config));
            if (!y_planted.empty()) {
                y_cfg.planted.clear();
                for (const auto& [key, value] : json::parse(y_planted).items())
                    y_cfg.planted[key] = value.get<double>();
            }
            Manifest manifest("synth", ensure_dir(y_out_dir));
            manifest.config(json::parse(y_cfg.to_json()));
            auto [ds, gt] = fpv::generate_corpus(y_cfg);
            fpv::save_graphs(manifest.out_path("graphs.jsonl"), ds.graphs);
            fpv::save_tabular(manifest.out_path("tabular.csv"), ds.records);
            fpv::io::write_file(manifest.out_path("ground_truth.json"), gt.to_json(ds) + "\n");
            fpv::io::write_file(manifest.out_path("synth_config.json"), y_cfg.to_json() + "\n");
            manifest.write();
            std::cout << "synth: wrote " << ds.size() << " records to " << y_out_dir << "\n";
        }

        if (*cmd_report) {
            if (!r_planted.empty()) {
                r_synth.planted.clear();
                for (const auto& [key, value] : json::parse(r_planted).items())
                    r_synth.planted[key] = value.get<double>();
            }
            Manifest manifest("report", ensure_dir(r_out_dir));
            json cfg_json = json::parse(r_cfg.train.to_json());
            cfg_json["synth"] = json::parse(r_synth.to_json());
            cfg_json["k"] = r_cfg.k;
            cfg_json["split_seed"] = r_cfg.split_seed;
            cfg_json["gf_features"] = r_gf;
            cfg_json["ig_steps"] = r_steps;
            manifest.config(cfg_json);

            // synth
            auto [ds, gt] = fpv::generate_corpus(r_synth);
            fpv::save_graphs(manifest.out_path("graphs.jsonl"), ds.graphs);
            fpv::save_tabular(manifest.out_path("tabular.csv"), ds.records);
            fpv::io::write_file(manifest.out_path("ground_truth.json"), gt.to_json(ds) + "\n");

            // dedup + features
            auto dedup_report = fpv::deduplicate(ds.graphs);
            fpv::io::write_file(manifest.out_path("classes.csv"), fpv::dedup_to_csv(dedup_report));
            std::ostringstream feats;
            feats << fpv::gf_csv_header() << "\n";
            for (const auto& cls : dedup_report.classes)
                feats << fpv::gf_csv_row(cls.representative.id,
                                         fpv::graph_features(cls.representative))
                      << "\n";
            fpv::io::write_file(manifest.out_path("features_unique.csv"), feats.str());

            // cv + compare
            r_cfg.gf_noise = r_gf == "noise";
            auto cv = fpv::semi_cross_validate(ds, r_cfg);
            write_cv_outputs(manifest, ds, r_cfg, cv);
            auto cmp = fpv::compare_models(ds, cv, r_cfg);
            write_compare_outputs(manifest, cmp);

            // full-data training at the cv-selected epoch budget
            fpv::TrainConfig full_cfg = r_cfg.train;
            auto result = fpv::train(ds, full_cfg);
            std::ostringstream log;
            log << "epoch,train_rmse_yen\n";
            for (const auto& e : result.log)
                log << e.epoch << "," << e.train_rmse_yen << "\n";
            fpv::io::write_file(manifest.out_path("trainlog.csv"), log.str());
            fpv::io::write_file(manifest.out_path("trainlog.svg"), trainlog_svg(result.log));
            result.final.save(manifest.out_path("model_final.ckpt"));

            // FPV of unique plans, ranked
            std::vector<fpv::AccessGraph> unique;
            for (const auto& cls : dedup_report.classes) unique.push_back(cls.representative);
            std::vector<const fpv::AccessGraph*> uptr;
            for (const auto& g : unique) uptr.push_back(&g);
            auto raw = fpv::fpv_scores(result.final.model, uptr);
            auto dev = fpv::fpv_deviation(raw);
            std::vector<int> order(unique.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (dev[a] != dev[b]) return dev[a] > dev[b];
                return unique[a].id < unique[b].id;
            });
            std::ostringstream rank;
            rank << "rank,id,raw_fpv,deviation,frequency\n";
            char buf[128];
            for (size_t r = 0; r < order.size(); ++r) {
                int i = order[r];
                std::snprintf(buf, sizeof(buf), "%zu,%s,%.10g,%.10g,%d\n", r + 1,
                              unique[i].id.c_str(), raw[i], dev[i],
                              dedup_report.classes[i].frequency());
                rank << buf;
            }
            fpv::io::write_file(manifest.out_path("fpv_rank.csv"), rank.str());

            // explain unique plans + anom
            auto ex = run_explain(result.final.model, unique, r_steps);
            std::ostringstream attrs;
            for (const auto& a : ex.attributions) attrs << fpv::attribution_to_json(a) << "\n";
            fpv::io::write_file(manifest.out_path("attributions.jsonl"), attrs.str());
            auto anom_result = run_anom(ex, true, 0.05, 2);
            fpv::io::write_file(manifest.out_path("anom.csv"), fpv::anom_to_csv(anom_result));
            fpv::io::write_file(manifest.out_path("anom.svg"), anom_svg(anom_result));

            // ground-truth scorecard
            std::vector<double> true_utility;
            for (const auto& g : unique) true_utility.push_back(fpv::planted_utility(g, r_synth.planted));
            auto card = fpv::planted_effect_report(r_synth.planted, anom_result, true_utility, raw);
            json score_json = {{"sign_agreement", card.sign_agreement},
                               {"motifs_checked", card.motifs_checked},
                               {"spearman_true_utility_vs_fpv", card.spearman},
                               {"best_epoch", cv.best_epoch}};
            fpv::io::write_file(manifest.out_path("scorecard.json"), score_json.dump(2) + "\n");
            manifest.write();
            std::cout << "report: done; spearman " << card.spearman << ", best epoch "
                      << cv.best_epoch << "\n";
        }
        return 0;
    } catch (const fpv::Error& e) {
        json err = {{"error", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err = {{"error", "Unhandled"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
