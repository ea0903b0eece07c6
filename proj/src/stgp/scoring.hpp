#ifndef STGP_SCORING_HPP
#define STGP_SCORING_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "stgp/gp.hpp"

namespace stgp {

struct ScoreReport {
    double rmse = 0.0;
    double mcrps = 0.0;
    double mlogs = 0.0;
    double g = 0.0;
    std::vector<double> p_grid;
    std::vector<double> empirical_coverage;
    std::vector<double> avg_width;
};

double rmse(const Eigen::VectorXd& pred_means, const Eigen::VectorXd& truths);

// CRPS of the Gaussian predictive law N(mu, sigma^2); the sigma = 0 limit is
// the absolute error.
double crps_gaussian(double y, double mu, double sigma);

// negative log predictive density of N(mu, sigma^2); lower is better
double log_score(double y, double mu, double sigma);

// empirical coverage of the central p-PI and the mean interval width, per p
std::pair<std::vector<double>, std::vector<double>>
coverage_and_width(const PredictiveDistribution& pd,
                   const Eigen::VectorXd& truths,
                   const std::vector<double>& p_grid);

// G = 1 - int_0^1 [3 a(p) - 2][cov(p) - p] dp, a(p) = 1{cov(p) >= p};
// trapezoid on the grid, extended to the [0,1] endpoints by nearest value.
double goodness_g(const std::vector<double>& p_grid,
                  const std::vector<double>& empirical_coverage);

std::vector<double> default_p_grid(); // 0.01, 0.02, ..., 0.99

ScoreReport score_predictions(const PredictiveDistribution& pd,
                              const Eigen::VectorXd& truths,
                              const std::vector<double>& p_grid = default_p_grid());

nlohmann::json score_report_to_json(const ScoreReport& r);
void write_curves_csv(const std::string& path, const ScoreReport& r);

} // namespace stgp

#endif
