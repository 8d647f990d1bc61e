#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fpv::stats {

// --- Student-t distribution ------------------------------------------------
// The tail probabilities in the coefficient tables go far below double
// underflow once expressed as p, so the survival function is computed in
// log space via the regularized incomplete beta continued fraction.

/// log of the regularized incomplete beta I_x(a, b).
double log_ibeta(double a, double b, double x);

/// Upper-tail P(T > t) for Student-t with nu dof, and its natural log.
double t_sf(double t, double nu);
double log_t_sf(double t, double nu);

/// Two-sided p-value of a t statistic, in natural log.
double log_t_two_sided(double t, double nu);

/// Quantile (inverse CDF) by bisection on the survival function.
double t_quantile(double p, double nu);

/// -log10(p) from a natural-log p-value, clamped at 300 (p < 1e-300 is
/// reported as the clamp).
double neg_log10_from_log(double log_p);

// --- Ordinary least squares ------------------------------------------------

struct OlsFit {
    std::vector<std::string> names;  // one per design column
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd t_stat;
    Eigen::VectorXd p_value;        // clamped to 0 below underflow; see neg_log10_p
    Eigen::VectorXd neg_log10_p;
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double rmse = 0.0;      // sqrt(SSR/n) on the fitted data, target units
    double resid_se = 0.0;  // sqrt(SSR/(n-p-1)): dof-adjusted, comparable
                            // across models with different column counts
    int n = 0;
    int n_predictors = 0;     // excluding the constant column
    int intercept_index = -1;

    double predict(const Eigen::VectorXd& x) const { return coef.dot(x); }
};

/// Fits y = X b by Householder QR. X must contain the constant column
/// (named "const" so diagnostics can skip it). Throws RankDeficient when X
/// is not full column rank and TooFewRows when n <= columns.
OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               std::vector<std::string> names);

/// Variance inflation factors: VIF_j = 1/(1 - R2_j) from regressing column j
/// on the remaining predictors plus an intercept. The constant column gets
/// NaN; perfectly collinear columns get +inf. Needs >= 3 predictor columns.
Eigen::VectorXd vif(const Eigen::MatrixXd& X, int intercept_index);

// --- Paired model comparison ------------------------------------------------

struct PairResult {
    int model_a = 0;
    int model_b = 0;
    double mean_diff = 0.0;  // metric(a) - metric(b), averaged over folds
    double t_stat = 0.0;
    double p_value = 0.0;
    bool significant = false;
};

struct ComparisonReport {
    std::vector<std::string> model_names;
    Eigen::MatrixXd metrics;  // models x folds
    std::vector<PairResult> pairs;
    double alpha = 0.05;
    double adjusted_alpha = 0.05;  // alpha / number of pairs
};

/// Paired two-sided t-tests on per-fold metric differences for every model
/// pair, Bonferroni-adjusted at family level alpha.
ComparisonReport bonferroni_compare(const Eigen::MatrixXd& metrics,
                                    std::vector<std::string> model_names,
                                    double alpha = 0.05);

/// Backward elimination: repeatedly drop the predictor with the largest
/// p-value until all are below `p_threshold`. Returns kept column indices
/// (the intercept is always kept).
std::vector<int> backward_eliminate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const std::vector<std::string>& names,
                                    int intercept_index, double p_threshold = 0.2);

}  // namespace fpv::stats
