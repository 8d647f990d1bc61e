#include "fpv/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fpv/graph.hpp"  // fpv::Error

namespace fpv::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Lentz's continued fraction for the incomplete beta (converges for
// x < (a+1)/(a+b+2); callers use the symmetry branch otherwise).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double log_ibeta(double a, double b, double x) {
    if (x <= 0.0) return -kInf;
    if (x >= 1.0) return 0.0;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return a * std::log(x) + b * std::log1p(-x) - std::log(a) - lbeta(a, b) +
               std::log(betacf(a, b, x));
    }
    // I_x(a,b) = 1 - I_{1-x}(b,a); the complement is on the convergent side
    // and is not tiny here, so normal-space log1p is accurate.
    double comp = std::exp(log_ibeta(b, a, 1.0 - x));
    return std::log1p(-comp);
}

double log_t_sf(double t, double nu) {
    if (std::isnan(t)) return kNaN;
    if (t <= 0.0) {
        double upper = 1.0 - t_sf(-t, nu);  // >= 0.5, never underflows
        return std::log(upper);
    }
    double x = nu / (nu + t * t);
    return log_ibeta(nu / 2.0, 0.5, x) - std::numbers::ln2;
}

double t_sf(double t, double nu) {
    if (t <= 0.0) {
        if (t == 0.0) return 0.5;
        return 1.0 - t_sf(-t, nu);
    }
    return std::exp(log_t_sf(t, nu));
}

double log_t_two_sided(double t, double nu) {
    double at = std::fabs(t);
    if (at == 0.0) return 0.0;  // p = 1
    double x = nu / (nu + at * at);
    return log_ibeta(nu / 2.0, 0.5, x);
}

double t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0)) throw Error("BadQuantile", "t quantile needs p in (0,1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -t_quantile(1.0 - p, nu);
    // cdf(t) = p  <=>  sf(t) = 1 - p, sf decreasing in t.
    double target = 1.0 - p;
    double lo = 0.0, hi = 1.0;
    while (t_sf(hi, nu) > target) {
        hi *= 2.0;
        if (hi > 1e12) break;
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (t_sf(mid, nu) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double neg_log10_from_log(double log_p) {
    constexpr double kClamp = 300.0;
    if (std::isnan(log_p)) return kNaN;
    double v = -log_p / std::numbers::ln10;
    return std::min(v, kClamp);
}

OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               std::vector<std::string> names) {
    const int n = static_cast<int>(X.rows());
    const int cols = static_cast<int>(X.cols());
    if (static_cast<int>(names.size()) != cols)
        throw Error("BadNames", "fit_ols needs one name per design column");
    if (y.size() != n) throw Error("ShapeMismatch", "X rows and y length differ");
    if (n <= cols) throw Error("TooFewRows", "fit_ols needs more rows than design columns");

    int intercept = -1;
    for (int j = 0; j < cols; ++j)
        if (names[j] == "const") intercept = j;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols)
        throw Error("RankDeficient", "design matrix is rank deficient (rank " +
                                         std::to_string(qr.rank()) + " of " +
                                         std::to_string(cols) + ")");

    OlsFit fit;
    fit.names = std::move(names);
    fit.n = n;
    fit.n_predictors = intercept >= 0 ? cols - 1 : cols;
    fit.intercept_index = intercept;
    fit.coef = qr.solve(y);
    fit.fitted = X * fit.coef;
    fit.residuals = y - fit.fitted;

    const double ssr = fit.residuals.squaredNorm();
    const int dof = n - cols;
    // An exactly-fitting model leaves only rounding residue; treat it as
    // zero residual variance so t statistics degenerate cleanly.
    const double y_inf = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
    const bool exact_fit = std::sqrt(ssr / n) <= 1e-10 * std::max(1.0, y_inf);
    const double sigma2 = exact_fit ? 0.0 : ssr / dof;

    // (X^T X)^{-1} from the permuted R factor: X P = Q R.
    Eigen::MatrixXd r = qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(cols, cols));
    Eigen::MatrixXd xtx_inv_permuted = rinv * rinv.transpose();
    Eigen::MatrixXd p = qr.colsPermutation();
    Eigen::MatrixXd xtx_inv = p * xtx_inv_permuted * p.transpose();

    fit.se.resize(cols);
    fit.t_stat.resize(cols);
    fit.p_value.resize(cols);
    fit.neg_log10_p.resize(cols);
    const double nu = dof;
    for (int j = 0; j < cols; ++j) {
        fit.se[j] = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
        if (fit.se[j] > 0.0) {
            fit.t_stat[j] = fit.coef[j] / fit.se[j];
            double logp = log_t_two_sided(fit.t_stat[j], nu);
            fit.p_value[j] = std::exp(logp);
            fit.neg_log10_p[j] = neg_log10_from_log(logp);
        } else {
            // Exact fit: a coefficient is either numerically zero (pure
            // noise column) or infinitely significant.
            double coef_inf = fit.coef.cwiseAbs().maxCoeff();
            bool zero = std::fabs(fit.coef[j]) <= 1e-8 * std::max(1.0, coef_inf);
            fit.t_stat[j] = zero ? 0.0 : (fit.coef[j] > 0 ? kInf : -kInf);
            fit.p_value[j] = zero ? 1.0 : 0.0;
            fit.neg_log10_p[j] = zero ? 0.0 : 300.0;
        }
    }

    double ybar = y.mean();
    double sst = (y.array() - ybar).square().sum();
    fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * (n - 1.0) / (n - fit.n_predictors - 1.0);
    fit.rmse = std::sqrt(ssr / n);
    fit.resid_se = exact_fit ? 0.0 : std::sqrt(sigma2);
    return fit;
}

Eigen::VectorXd vif(const Eigen::MatrixXd& X, int intercept_index) {
    const int cols = static_cast<int>(X.cols());
    int predictors = intercept_index >= 0 ? cols - 1 : cols;
    if (predictors < 3) throw Error("TooFewColumns", "vif needs at least 3 predictor columns");

    Eigen::VectorXd out(cols);
    out.setConstant(kNaN);
    for (int j = 0; j < cols; ++j) {
        if (j == intercept_index) continue;
        // Regress column j on the other predictors (+ intercept).
        Eigen::MatrixXd other(X.rows(), cols - 1 + (intercept_index >= 0 ? 0 : 1));
        int c = 0;
        for (int k = 0; k < cols; ++k) {
            if (k == j) continue;
            other.col(c++) = X.col(k);
        }
        if (intercept_index < 0) other.col(c) = Eigen::VectorXd::Ones(X.rows());

        Eigen::VectorXd target = X.col(j);
        Eigen::VectorXd beta = other.colPivHouseholderQr().solve(target);
        double ssr = (target - other * beta).squaredNorm();
        double mean = target.mean();
        double sst = (target.array() - mean).square().sum();
        if (sst <= 0.0) {
            out[j] = kInf;  // constant column, perfectly collinear with the intercept
            continue;
        }
        double r2 = 1.0 - ssr / sst;
        out[j] = r2 >= 1.0 - 1e-12 ? kInf : 1.0 / (1.0 - r2);
    }
    return out;
}

ComparisonReport bonferroni_compare(const Eigen::MatrixXd& metrics,
                                    std::vector<std::string> model_names, double alpha) {
    const int models = static_cast<int>(metrics.rows());
    const int folds = static_cast<int>(metrics.cols());
    if (models < 2) throw Error("TooFewModels", "comparison needs at least 2 models");
    if (folds < 2) throw Error("TooFewFolds", "comparison needs at least 2 folds");

    ComparisonReport report;
    report.model_names = std::move(model_names);
    report.metrics = metrics;
    report.alpha = alpha;
    int npairs = models * (models - 1) / 2;
    report.adjusted_alpha = alpha / npairs;

    for (int a = 0; a < models; ++a) {
        for (int b = a + 1; b < models; ++b) {
            Eigen::VectorXd d = metrics.row(a) - metrics.row(b);
            double md = d.mean();
            double var = (d.array() - md).square().sum() / (folds - 1);
            double sd = std::sqrt(var);
            PairResult pr;
            pr.model_a = a;
            pr.model_b = b;
            pr.mean_diff = md;
            if (sd == 0.0) {
                pr.t_stat = md == 0.0 ? 0.0 : (md > 0 ? kInf : -kInf);
                pr.p_value = md == 0.0 ? 1.0 : 0.0;
            } else {
                pr.t_stat = md / (sd / std::sqrt(static_cast<double>(folds)));
                pr.p_value = std::exp(log_t_two_sided(pr.t_stat, folds - 1.0));
            }
            pr.significant = pr.p_value < report.adjusted_alpha;
            report.pairs.push_back(pr);
        }
    }
    return report;
}

std::vector<int> backward_eliminate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const std::vector<std::string>& names, int intercept_index,
                                    double p_threshold) {
    std::vector<int> kept(X.cols());
    for (size_t j = 0; j < kept.size(); ++j) kept[j] = static_cast<int>(j);

    while (true) {
        Eigen::MatrixXd sub(X.rows(), kept.size());
        std::vector<std::string> sub_names;
        for (size_t c = 0; c < kept.size(); ++c) {
            sub.col(c) = X.col(kept[c]);
            sub_names.push_back(names[kept[c]]);
        }
        OlsFit fit = fit_ols(sub, y, sub_names);
        int worst = -1;
        double worst_p = p_threshold;
        for (size_t c = 0; c < kept.size(); ++c) {
            if (kept[c] == intercept_index) continue;
            if (fit.p_value[c] >= worst_p) {
                worst_p = fit.p_value[c];
                worst = static_cast<int>(c);
            }
        }
        if (worst < 0 || kept.size() <= 2) break;
        kept.erase(kept.begin() + worst);
    }
    return kept;
}

}  // namespace fpv::stats
