#include "fpv/evaluation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fpv/gcn.hpp"
#include "fpv/syntax.hpp"

namespace fpv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    if (std::isnan(v)) return "-";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

double continuous_value(const PropertyRecord& r, const std::string& name) {
    if (name == "land_price") return r.land_price;
    if (name == "area") return r.area;
    if (name == "year") return r.year;
    if (name == "f_building") return r.f_building;
    if (name == "f_dwelling") return r.f_dwelling;
    if (name == "distance") return r.distance;
    if (name == "passenger") return r.passenger;
    throw Error("UnknownColumn", "unknown tabular column '" + name + "'");
}

struct Design {
    Eigen::MatrixXd x;
    std::vector<std::string> names;
    std::vector<std::string> dropped;
    int intercept = -1;
};

/// Assembles [extra blocks..., tabular..., structure dummies..., const] over
/// the given records, dropping zero-variance columns (all-absent fold
/// categories) so the fit stays full rank.
Design build_design(const Dataset& ds, const std::vector<int>& idx,
                    const std::vector<std::string>& tabular,
                    const std::vector<std::pair<std::string, const std::vector<double>*>>& extra) {
    const int n = static_cast<int>(idx.size());
    std::vector<std::pair<std::string, Eigen::VectorXd>> cols;

    for (const auto& [name, values] : extra) {
        if (static_cast<int>(values->size()) != n)
            throw Error("ShapeMismatch", "extra block '" + name + "' length mismatch");
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = (*values)[i];
        cols.emplace_back(name, std::move(v));
    }
    for (const auto& name : tabular) {
        if (name == "structure") {
            // One dummy per category present in these records, minus a
            // reference: the least frequent present category (ties to the
            // higher enum index). Absent categories never materialize, so
            // the dummy block plus the constant stays full rank.
            std::array<int, kNumStructures> count{};
            for (int i : idx) count[static_cast<int>(ds.records[i].structure)]++;
            int ref = -1;
            for (int s = 0; s < kNumStructures; ++s) {
                if (count[s] == 0) continue;
                if (ref < 0 || count[s] <= count[ref]) ref = s;
            }
            for (int s = 0; s < kNumStructures; ++s) {
                if (count[s] == 0 || s == ref) continue;
                Eigen::VectorXd v(n);
                for (int i = 0; i < n; ++i)
                    v[i] = ds.records[idx[i]].structure == static_cast<Structure>(s) ? 1.0 : 0.0;
                cols.emplace_back(std::string("structure_") + to_string(static_cast<Structure>(s)),
                                  std::move(v));
            }
        } else {
            Eigen::VectorXd v(n);
            for (int i = 0; i < n; ++i) v[i] = continuous_value(ds.records[idx[i]], name);
            cols.emplace_back(name, std::move(v));
        }
    }

    Design d;
    std::vector<int> keep;
    for (size_t c = 0; c < cols.size(); ++c) {
        double mn = cols[c].second.minCoeff(), mx = cols[c].second.maxCoeff();
        if (mn == mx)
            d.dropped.push_back(cols[c].first);
        else
            keep.push_back(static_cast<int>(c));
    }

    // Aliased (linearly dependent) columns are dropped greedily, the way lm()
    // treats aliased terms. Tabular columns take precedence over the extra
    // blocks so sparse toy folds shed degenerate graph-feature columns first.
    const size_t n_extra = extra.size();
    std::vector<int> priority(keep.begin(), keep.end());
    std::stable_sort(priority.begin(), priority.end(), [&](int a, int b) {
        return (static_cast<size_t>(a) >= n_extra) > (static_cast<size_t>(b) >= n_extra);
    });
    Eigen::MatrixXd basis(n, keep.size() + 1);
    basis.col(0).setOnes();
    int rank = 1;
    std::vector<char> kept_flag(cols.size(), 0);
    for (int c : priority) {
        basis.col(rank) = cols[c].second;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis.leftCols(rank + 1));
        qr.setThreshold(1e-10);
        if (qr.rank() == rank + 1) {
            kept_flag[c] = 1;
            ++rank;
        } else {
            d.dropped.push_back(cols[c].first + " (aliased)");
        }
    }
    std::vector<int> final_keep;
    for (int c : keep)
        if (kept_flag[c]) final_keep.push_back(c);

    d.x.resize(n, final_keep.size() + 1);
    for (size_t c = 0; c < final_keep.size(); ++c) {
        d.x.col(c) = cols[final_keep[c]].second;
        d.names.push_back(cols[final_keep[c]].first);
    }
    d.x.col(final_keep.size()).setOnes();
    d.names.push_back("const");
    d.intercept = static_cast<int>(final_keep.size());
    return d;
}

Eigen::VectorXd rent_vector(const Dataset& ds, const std::vector<int>& idx) {
    Eigen::VectorXd y(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) y[i] = ds.records[idx[i]].rent;
    return y;
}

}  // namespace

const std::vector<std::string>& gf_model_columns() {
    static const std::vector<std::string> cols = {"num_edge", "num_bl", "num_cl", "depth",
                                                  "rra_bt",  "rra_ja", "rra_to", "h_star"};
    return cols;
}

SemiCvResult semi_cross_validate(const Dataset& ds, const EvalConfig& cfg,
                                 const std::vector<std::vector<int>>* fixed_folds,
                                 const std::string& checkpoint_dir) {
    SemiCvResult result;
    result.folds = fixed_folds ? *fixed_folds : split_kfold(ds.size(), cfg.k, cfg.split_seed);
    const int k = static_cast<int>(result.folds.size());

    for (int e = cfg.train.checkpoint_interval; e <= cfg.train.epochs;
         e += cfg.train.checkpoint_interval)
        result.epochs.push_back(e);
    if (result.epochs.empty())
        throw Error("BadConfig", "no checkpoint epochs inside the training budget");
    const int n_epochs = static_cast<int>(result.epochs.size());

    result.rmse.assign(k, {});
    result.adj_r2.assign(k, {});
    result.fpv.assign(k, {});
    std::vector<std::string> fold_errors(k);

    auto run_fold = [&](int f) {
        try {
            const auto& test_idx = result.folds[f];
            Dataset train_ds;
            for (int g = 0; g < k; ++g) {
                if (g == f) continue;
                for (int i : result.folds[g]) {
                    train_ds.graphs.push_back(ds.graphs[i]);
                    train_ds.records.push_back(ds.records[i]);
                }
            }
            std::vector<const AccessGraph*> test_graphs;
            for (int i : test_idx) test_graphs.push_back(&ds.graphs[i]);

            std::vector<std::vector<double>> fpv_by_epoch(n_epochs);
            auto on_ckpt = [&](const Checkpoint& ckpt) {
                auto it = std::find(result.epochs.begin(), result.epochs.end(), ckpt.epoch);
                if (it == result.epochs.end()) return;
                int ei = static_cast<int>(it - result.epochs.begin());
                fpv_by_epoch[ei] = fpv_scores(ckpt.model, test_graphs);
                if (!checkpoint_dir.empty()) {
                    ckpt.save(checkpoint_dir + "/fold" + std::to_string(f) + "_epoch" +
                              std::to_string(ckpt.epoch) + ".ckpt");
                }
            };
            train(train_ds, cfg.train, on_ckpt);

            std::vector<double> rmse(n_epochs), adj(n_epochs);
            for (int ei = 0; ei < n_epochs; ++ei) {
                std::vector<std::pair<std::string, const std::vector<double>*>> extra{
                    {"fpv", &fpv_by_epoch[ei]}};
                Design d = build_design(ds, test_idx, cfg.ols_tabular, extra);
                auto fit = stats::fit_ols(d.x, rent_vector(ds, test_idx), d.names);
                rmse[ei] = fit.rmse;
                adj[ei] = fit.adj_r2;
            }
            result.rmse[f] = std::move(rmse);
            result.adj_r2[f] = std::move(adj);
            result.fpv[f] = std::move(fpv_by_epoch);
        } catch (const std::exception& e) {
            fold_errors[f] = e.what();
        }
    };

    int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        for (int f = 0; f < k; ++f) run_fold(f);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < std::min(threads, k); ++t) {
            pool.emplace_back([&] {
                for (int f = next.fetch_add(1); f < k; f = next.fetch_add(1)) run_fold(f);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (int f = 0; f < k; ++f)
        if (!fold_errors[f].empty())
            result.failed_folds.push_back("fold " + std::to_string(f) + ": " + fold_errors[f]);
    if (static_cast<int>(result.failed_folds.size()) == k)
        throw Error("AllFoldsFailed", "every fold failed; first: " + result.failed_folds.front());

    result.fold_best_epoch.assign(k, -1);
    for (int f = 0; f < k; ++f) {
        if (result.rmse[f].empty()) continue;
        int best = 0;
        for (int ei = 1; ei < n_epochs; ++ei)
            if (result.rmse[f][ei] < result.rmse[f][best]) best = ei;
        result.fold_best_epoch[f] = result.epochs[best];
    }
    result.best_epoch = select_epoch(result);
    return result;
}

int select_epoch(const SemiCvResult& r) {
    if (r.epochs.empty()) throw Error("EmptyResult", "no evaluated epochs");
    int n_epochs = static_cast<int>(r.epochs.size());
    int good = 0;
    std::vector<double> mean(n_epochs, 0.0);
    for (size_t f = 0; f < r.rmse.size(); ++f) {
        if (r.rmse[f].empty()) continue;
        ++good;
        for (int ei = 0; ei < n_epochs; ++ei) mean[ei] += r.rmse[f][ei];
    }
    if (good == 0) throw Error("EmptyResult", "all folds failed");
    int best = 0;
    for (int ei = 1; ei < n_epochs; ++ei)
        if (mean[ei] < mean[best]) best = ei;  // strict: ties keep the smaller epoch
    return r.epochs[best];
}

ModelComparison compare_models(const Dataset& ds, const SemiCvResult& cv, const EvalConfig& cfg) {
    ModelComparison out;
    out.model_names = {"baseline", "gf", "fpv"};
    out.best_epoch = cv.best_epoch;
    int best_idx = -1;
    for (size_t ei = 0; ei < cv.epochs.size(); ++ei)
        if (cv.epochs[ei] == cv.best_epoch) best_idx = static_cast<int>(ei);
    if (best_idx < 0) throw Error("BadInput", "best epoch missing from cv result");

    std::vector<int> good_folds;
    for (size_t f = 0; f < cv.folds.size(); ++f)
        if (!cv.rmse[f].empty()) good_folds.push_back(static_cast<int>(f));
    if (good_folds.size() < 2) throw Error("TooFewFolds", "need at least 2 successful folds");

    // Seeded noise features, generated once per record so folds stay paired.
    Eigen::MatrixXd noise;
    if (cfg.gf_noise) {
        std::mt19937_64 rng(cfg.gf_noise_seed);
        std::normal_distribution<double> norm(0.0, 1.0);
        noise.resize(ds.size(), gf_model_columns().size());
        for (int i = 0; i < noise.rows(); ++i)
            for (int j = 0; j < noise.cols(); ++j) noise(i, j) = norm(rng);
    }

    const int nf = static_cast<int>(good_folds.size());
    out.rmse.resize(3, nf);
    out.resid_se.resize(3, nf);
    out.adj_r2.resize(3, nf);
    std::map<std::string, std::map<std::string, std::vector<std::array<double, 4>>>> acc;

    for (int fi = 0; fi < nf; ++fi) {
        int f = good_folds[fi];
        const auto& idx = cv.folds[f];
        Eigen::VectorXd y = rent_vector(ds, idx);

        // Graph-feature block for this fold's records.
        std::map<std::string, std::vector<double>> gf_cols;
        if (cfg.gf_noise) {
            for (size_t c = 0; c < gf_model_columns().size(); ++c) {
                auto& col = gf_cols["noise_" + std::to_string(c)];
                col.reserve(idx.size());
                for (int i : idx) col.push_back(noise(i, c));
            }
        } else {
            std::vector<GfVector> gfs;
            gfs.reserve(idx.size());
            for (int i : idx) gfs.push_back(graph_features(ds.graphs[i]));
            const auto& names = GfVector::column_names();
            for (size_t i = 0; i < idx.size(); ++i) {
                auto values = gfs[i].values();
                for (const auto& want : gf_model_columns()) {
                    auto it = std::find(names.begin(), names.end(), want);
                    gf_cols[want].push_back(values[it - names.begin()]);
                }
            }
        }
        std::vector<std::pair<std::string, const std::vector<double>*>> gf_extra;
        if (cfg.gf_noise) {
            for (size_t c = 0; c < gf_model_columns().size(); ++c) {
                auto& col = gf_cols["noise_" + std::to_string(c)];
                gf_extra.emplace_back("noise_" + std::to_string(c), &col);
            }
        } else {
            for (const auto& name : gf_model_columns()) gf_extra.emplace_back(name, &gf_cols[name]);
        }

        const std::vector<double>& fpv_col = cv.fpv[f][best_idx];
        std::vector<std::pair<std::string, const std::vector<double>*>> fpv_extra{{"fpv", &fpv_col}};

        for (int m = 0; m < 3; ++m) {
            std::vector<std::pair<std::string, const std::vector<double>*>> extra;
            if (m == 1) extra = gf_extra;
            if (m == 2) extra = fpv_extra;
            Design d = build_design(ds, idx, cfg.ols_tabular, extra);

            // Optional per-fold backward elimination of GF columns only.
            if (m == 1 && !cfg.gf_exact_table) {
                while (true) {
                    auto fit = stats::fit_ols(d.x, y, d.names);
                    int worst = -1;
                    double worst_p = cfg.gf_select_p;
                    for (size_t c = 0; c < d.names.size(); ++c) {
                        bool is_gf = false;
                        for (const auto& [gname, ptr] : gf_extra)
                            if (d.names[c] == gname) is_gf = true;
                        if (is_gf && fit.p_value[c] >= worst_p) {
                            worst_p = fit.p_value[c];
                            worst = static_cast<int>(c);
                        }
                    }
                    if (worst < 0) break;
                    Eigen::MatrixXd reduced(d.x.rows(), d.x.cols() - 1);
                    std::vector<std::string> rnames;
                    int c2 = 0;
                    for (int c = 0; c < d.x.cols(); ++c) {
                        if (c == worst) continue;
                        reduced.col(c2++) = d.x.col(c);
                        rnames.push_back(d.names[c]);
                    }
                    d.x = std::move(reduced);
                    d.names = std::move(rnames);
                    d.intercept = static_cast<int>(d.names.size()) - 1;
                }
            }

            auto fit = stats::fit_ols(d.x, y, d.names);
            out.rmse(m, fi) = fit.rmse;
            out.resid_se(m, fi) = fit.resid_se;
            out.adj_r2(m, fi) = fit.adj_r2;
            Eigen::VectorXd vifs;
            if (fit.n_predictors >= 3) {
                vifs = stats::vif(d.x, fit.intercept_index);
            } else {
                vifs = Eigen::VectorXd::Constant(d.x.cols(), kNaN);
            }
            for (size_t c = 0; c < d.names.size(); ++c) {
                acc[out.model_names[m]][d.names[c]].push_back(
                    {fit.coef[c], fit.p_value[c], fit.neg_log10_p[c], vifs[c]});
            }
        }
    }

    out.rse_test = stats::bonferroni_compare(out.resid_se, out.model_names);
    out.adj_r2_test = stats::bonferroni_compare(out.adj_r2, out.model_names);

    for (const auto& [model, variables] : acc) {
        std::vector<CoefficientRow> rows;
        for (const auto& [variable, samples] : variables) {
            CoefficientRow row;
            row.variable = variable;
            row.n_folds = static_cast<int>(samples.size());
            auto stat = [&](int slot, double& mean, double& sd) {
                double m = 0, count = 0;
                for (const auto& s : samples) {
                    if (std::isnan(s[slot])) continue;
                    m += s[slot];
                    count += 1;
                }
                if (count == 0) {
                    mean = sd = kNaN;
                    return;
                }
                m /= count;
                double var = 0;
                for (const auto& s : samples)
                    if (!std::isnan(s[slot])) var += (s[slot] - m) * (s[slot] - m);
                mean = m;
                sd = count > 1 ? std::sqrt(var / (count - 1)) : 0.0;
            };
            stat(0, row.coef_mean, row.coef_sd);
            stat(1, row.p_mean, row.p_sd);
            stat(2, row.neg_log10_p_mean, row.neg_log10_p_sd);
            stat(3, row.vif_mean, row.vif_sd);
            rows.push_back(std::move(row));
        }
        std::sort(rows.begin(), rows.end(), [](const CoefficientRow& a, const CoefficientRow& b) {
            if (a.neg_log10_p_mean != b.neg_log10_p_mean)
                return a.neg_log10_p_mean > b.neg_log10_p_mean;
            return a.variable < b.variable;
        });
        out.coef_tables[model] = std::move(rows);
    }
    return out;
}

std::string semicv_to_csv(const SemiCvResult& r) {
    std::ostringstream out;
    out << "epoch,mean_rmse,mean_adj_r2";
    std::vector<int> good;
    for (size_t f = 0; f < r.folds.size(); ++f)
        if (!r.rmse[f].empty()) {
            good.push_back(static_cast<int>(f));
            out << ",rmse_fold" << f;
        }
    out << "\n";
    for (size_t ei = 0; ei < r.epochs.size(); ++ei) {
        double mean_rmse = 0, mean_adj = 0;
        for (int f : good) {
            mean_rmse += r.rmse[f][ei];
            mean_adj += r.adj_r2[f][ei];
        }
        mean_rmse /= good.size();
        mean_adj /= good.size();
        out << r.epochs[ei] << "," << fmt(mean_rmse) << "," << fmt(mean_adj);
        for (int f : good) out << "," << fmt(r.rmse[f][ei]);
        out << "\n";
    }
    return out.str();
}

std::string fold_metrics_to_csv(const ModelComparison& c) {
    std::ostringstream out;
    out << "model,fold,rmse,resid_se,adj_r2\n";
    for (int m = 0; m < c.rmse.rows(); ++m)
        for (int f = 0; f < c.rmse.cols(); ++f)
            out << c.model_names[m] << "," << f << "," << fmt(c.rmse(m, f)) << ","
                << fmt(c.resid_se(m, f)) << "," << fmt(c.adj_r2(m, f)) << "\n";
    return out.str();
}

std::string coef_table_to_csv(const ModelComparison& c, const std::string& model) {
    std::ostringstream out;
    out << "variable,n_folds,coef_mean,coef_sd,p_mean,p_sd,neg_log10_p_mean,neg_log10_p_sd,"
           "vif_mean,vif_sd\n";
    auto it = c.coef_tables.find(model);
    if (it == c.coef_tables.end()) throw Error("UnknownModel", "no coefficient table for " + model);
    for (const auto& row : it->second) {
        out << row.variable << "," << row.n_folds << "," << fmt(row.coef_mean) << ","
            << fmt(row.coef_sd) << "," << fmt(row.p_mean) << "," << fmt(row.p_sd) << ","
            << fmt(row.neg_log10_p_mean) << "," << fmt(row.neg_log10_p_sd) << ","
            << fmt(row.vif_mean) << "," << fmt(row.vif_sd) << "\n";
    }
    return out.str();
}

namespace {

nlohmann::json pairs_to_json(const stats::ComparisonReport& report) {
    auto arr = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        arr.push_back({{"a", report.model_names[p.model_a]},
                       {"b", report.model_names[p.model_b]},
                       {"mean_diff", p.mean_diff},
                       {"t", p.t_stat},
                       {"p", p.p_value},
                       {"significant", p.significant}});
    }
    return arr;
}

}  // namespace

std::string comparison_to_json(const ModelComparison& c) {
    nlohmann::json out;
    out["models"] = c.model_names;
    out["best_epoch"] = c.best_epoch;
    out["alpha"] = c.rse_test.alpha;
    out["adjusted_alpha"] = c.rse_test.adjusted_alpha;
    for (int m = 0; m < c.rmse.rows(); ++m) {
        std::vector<double> r(c.rmse.cols()), s(c.resid_se.cols()), a(c.adj_r2.cols());
        for (int f = 0; f < c.rmse.cols(); ++f) {
            r[f] = c.rmse(m, f);
            s[f] = c.resid_se(m, f);
            a[f] = c.adj_r2(m, f);
        }
        out["rmse"][c.model_names[m]] = r;
        out["resid_se"][c.model_names[m]] = s;
        out["adj_r2"][c.model_names[m]] = a;
        out["mean_rmse"][c.model_names[m]] = c.rmse.row(m).mean();
        out["mean_adj_r2"][c.model_names[m]] = c.adj_r2.row(m).mean();
    }
    out["rse_pairs"] = pairs_to_json(c.rse_test);
    out["adj_r2_pairs"] = pairs_to_json(c.adj_r2_test);
    return out.dump(2);
}

}  // namespace fpv
