#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fpv/dataset.hpp"
#include "fpv/stats.hpp"
#include "fpv/train.hpp"

namespace fpv {

/// The 8 graph-feature columns used by the GF hedonic model.
const std::vector<std::string>& gf_model_columns();

struct EvalConfig {
    TrainConfig train;
    int k = 10;
    std::uint64_t split_seed = 101;
    /// Tabular columns entering the OLS models: continuous column names plus
    /// the token "structure" for the dummy block (reference category O).
    std::vector<std::string> ols_tabular = {"land_price", "area",      "year",
                                            "f_building", "f_dwelling", "distance",
                                            "passenger",  "structure"};
    bool gf_noise = false;  // replace GF features with seeded N(0,1) columns
    std::uint64_t gf_noise_seed = 5;
    bool gf_exact_table = true;  // fixed 8-column GF set; else backward elimination
    double gf_select_p = 0.2;
    int threads = 1;
};

/// Per-(fold, checkpoint-epoch) accuracy of the OLS fit on the test fold
/// with the frozen GCN's FPV included, plus the raw FPV scores themselves so
/// the comparison step can reuse them without re-scoring.
struct SemiCvResult {
    std::vector<int> epochs;                        // evaluated checkpoint epochs
    std::vector<std::vector<int>> folds;            // record indices per fold
    std::vector<std::vector<double>> rmse;          // [fold][epoch index]
    std::vector<std::vector<double>> adj_r2;        // [fold][epoch index]
    std::vector<std::vector<std::vector<double>>> fpv;  // [fold][epoch index][test record]
    std::vector<int> fold_best_epoch;
    int best_epoch = 0;
    std::vector<std::string> failed_folds;  // "fold 3: <reason>"; excluded from aggregates
};

/// Trains the joint model per fold on the other k-1 folds, scores the test
/// fold's FPV at every checkpoint, and fits the FPV hedonic OLS on the test
/// fold itself ("semi-cross-validation"). Folds may be supplied to rerun a
/// saved manifest; checkpoint_dir, when set, saves every fold checkpoint.
SemiCvResult semi_cross_validate(const Dataset& ds, const EvalConfig& cfg,
                                 const std::vector<std::vector<int>>* fixed_folds = nullptr,
                                 const std::string& checkpoint_dir = "");

/// Argmin of mean test RMSE over epochs; ties resolved to the smallest epoch.
int select_epoch(const SemiCvResult& r);

struct CoefficientRow {
    std::string variable;
    int n_folds = 0;
    double coef_mean = 0, coef_sd = 0;
    double p_mean = 0, p_sd = 0;
    double neg_log10_p_mean = 0, neg_log10_p_sd = 0;
    double vif_mean = 0, vif_sd = 0;
};

struct ModelComparison {
    std::vector<std::string> model_names;  // baseline, gf, fpv
    Eigen::MatrixXd rmse;                  // models x folds, sqrt(SSR/n)
    Eigen::MatrixXd resid_se;              // dof-adjusted sqrt(SSR/(n-p-1))
    Eigen::MatrixXd adj_r2;
    /// Paired significance runs on the dof-adjusted error, not raw in-sample
    /// RMSE: the hedonic OLS is fit on the test fold itself, so raw RMSE
    /// mechanically rewards any extra regressor (even pure noise).
    stats::ComparisonReport rse_test;
    stats::ComparisonReport adj_r2_test;
    std::map<std::string, std::vector<CoefficientRow>> coef_tables;
    int best_epoch = 0;
};

/// Paired three-model comparison on the cv folds: baseline (tabular only),
/// GF (tabular + graph features or noise), FPV (tabular + best-epoch FPV).
/// All models see identical test records per fold.
ModelComparison compare_models(const Dataset& ds, const SemiCvResult& cv, const EvalConfig& cfg);

std::string semicv_to_csv(const SemiCvResult& r);
std::string fold_metrics_to_csv(const ModelComparison& c);
std::string coef_table_to_csv(const ModelComparison& c, const std::string& model);
std::string comparison_to_json(const ModelComparison& c);

}  // namespace fpv
