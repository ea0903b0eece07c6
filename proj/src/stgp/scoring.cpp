#include "stgp/scoring.hpp"
#include "stgp/errors.hpp"
#include "stgp/specialfn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace stgp {

double rmse(const Eigen::VectorXd& pred_means, const Eigen::VectorXd& truths) {
    if (pred_means.size() != truths.size() || pred_means.size() == 0)
        throw DomainError("rmse: length mismatch or empty input");
    return std::sqrt((pred_means - truths).squaredNorm() /
                     static_cast<double>(truths.size()));
}

double crps_gaussian(double y, double mu, double sigma) {
    if (!(sigma >= 0.0))
        throw DomainError("crps_gaussian: sigma must be nonnegative");
    if (sigma == 0.0) return std::fabs(y - mu);
    double z = (y - mu) / sigma;
    return sigma * (z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * norm_pdf(z) -
                    1.0 / std::sqrt(M_PI));
}

double log_score(double y, double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("log_score: sigma must be positive");
    double z = (y - mu) / sigma;
    return 0.5 * std::log(2.0 * M_PI * sigma * sigma) + 0.5 * z * z;
}

std::pair<std::vector<double>, std::vector<double>>
coverage_and_width(const PredictiveDistribution& pd,
                   const Eigen::VectorXd& truths,
                   const std::vector<double>& p_grid) {
    const Eigen::Index n = truths.size();
    if (n == 0 || pd.mean.size() != n)
        throw DomainError("coverage_and_width: empty input or length mismatch");
    if (p_grid.empty()) throw DomainError("coverage_and_width: empty p grid");
    for (double p : p_grid)
        if (!(p > 0.0 && p < 1.0))
            throw DomainError("coverage_and_width: p grid must lie in (0,1)");

    Eigen::VectorXd sd = pd.variance.array().sqrt();
    double mean_sd = sd.mean();
    std::vector<double> coverage(p_grid.size()), width(p_grid.size());
    for (std::size_t k = 0; k < p_grid.size(); ++k) {
        double q = norm_quantile(0.5 * (1.0 + p_grid[k]));
        int inside = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::fabs(truths[i] - pd.mean[i]) <= q * sd[i]) ++inside;
        coverage[k] = static_cast<double>(inside) / static_cast<double>(n);
        width[k] = 2.0 * q * mean_sd;
    }
    return {coverage, width};
}

double goodness_g(const std::vector<double>& p_grid,
                  const std::vector<double>& empirical_coverage) {
    if (p_grid.size() != empirical_coverage.size() || p_grid.empty())
        throw DomainError("goodness_g: misaligned inputs");
    auto integrand = [](double p, double cov) {
        double a = (cov >= p) ? 1.0 : 0.0;
        return (3.0 * a - 2.0) * (cov - p);
    };
    // extend to [0,1] with the nearest coverage value, then trapezoid
    std::vector<double> ps, cs;
    ps.reserve(p_grid.size() + 2);
    cs.reserve(p_grid.size() + 2);
    if (p_grid.front() > 0.0) {
        ps.push_back(0.0);
        cs.push_back(empirical_coverage.front());
    }
    ps.insert(ps.end(), p_grid.begin(), p_grid.end());
    cs.insert(cs.end(), empirical_coverage.begin(), empirical_coverage.end());
    if (p_grid.back() < 1.0) {
        ps.push_back(1.0);
        cs.push_back(empirical_coverage.back());
    }
    double integral = 0.0;
    for (std::size_t k = 1; k < ps.size(); ++k) {
        double f0 = integrand(ps[k - 1], cs[k - 1]);
        double f1 = integrand(ps[k], cs[k]);
        integral += 0.5 * (f0 + f1) * (ps[k] - ps[k - 1]);
    }
    double g = 1.0 - integral;
    return std::min(1.0, std::max(0.0, g));
}

std::vector<double> default_p_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
    return grid;
}

ScoreReport score_predictions(const PredictiveDistribution& pd,
                              const Eigen::VectorXd& truths,
                              const std::vector<double>& p_grid) {
    ScoreReport r;
    r.rmse = rmse(pd.mean, truths);
    double sc = 0.0, sl = 0.0;
    for (Eigen::Index i = 0; i < truths.size(); ++i) {
        double sd = std::sqrt(pd.variance[i]);
        sc += crps_gaussian(truths[i], pd.mean[i], sd);
        sl += log_score(truths[i], pd.mean[i], sd);
    }
    r.mcrps = sc / static_cast<double>(truths.size());
    r.mlogs = sl / static_cast<double>(truths.size());
    r.p_grid = p_grid;
    auto cw = coverage_and_width(pd, truths, p_grid);
    r.empirical_coverage = cw.first;
    r.avg_width = cw.second;
    r.g = goodness_g(r.p_grid, r.empirical_coverage);
    return r;
}

nlohmann::json score_report_to_json(const ScoreReport& r) {
    return {{"rmse", r.rmse},
            {"mcrps", r.mcrps},
            {"mlogs", r.mlogs},
            {"g", r.g},
            {"p_grid", r.p_grid},
            {"empirical_coverage", r.empirical_coverage},
            {"avg_width", r.avg_width}};
}

void write_curves_csv(const std::string& path, const ScoreReport& r) {
    std::ofstream out(path);
    if (!out.good()) throw DataError("cannot write curves file: " + path);
    out << "p,coverage,width\n";
    char buf[96];
    for (std::size_t k = 0; k < r.p_grid.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.p_grid[k],
                      r.empirical_coverage[k], r.avg_width[k]);
        out << buf;
    }
    if (!out.good()) throw DataError("write failed: " + path);
}

} // namespace stgp
