#ifndef STGP_TREND_HPP
#define STGP_TREND_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "stgp/dataset.hpp"
#include "stgp/gp.hpp"

namespace stgp {

// Deterministic mean surface: intercept, two harmonic pairs in t, linear t,
// and s, s t, s t^2, s t^3, s t^4 interactions (16 coefficients for d = 2).
// The harmonic angular frequencies default to 4 pi and 16 pi (the printed
// formula); they can be overridden, e.g. with 2 pi and 4 pi for annual and
// semiannual cycles.
struct TrendModel {
    Eigen::VectorXd coefficients; // length 16
    double freq1 = 4.0 * M_PI;
    double freq2 = 16.0 * M_PI;
};

constexpr int kTrendTerms = 16;

Eigen::RowVectorXd build_design_row(const SpaceTimePoint& p,
                                    double freq1 = 4.0 * M_PI,
                                    double freq2 = 16.0 * M_PI);

TrendModel ols_fit(const std::vector<SpaceTimePoint>& points,
                   const Eigen::VectorXd& values, double freq1 = 4.0 * M_PI,
                   double freq2 = 16.0 * M_PI);

double trend_mean(const TrendModel& m, const SpaceTimePoint& p);

// residuals Y - mu_hat
Dataset detrend(const TrendModel& m, const Dataset& data);
// adds mu_hat back onto predictive means; variances untouched
PredictiveDistribution retrend(const TrendModel& m,
                               const PredictiveDistribution& pd);

nlohmann::json trend_to_json(const TrendModel& m);
TrendModel trend_from_json(const nlohmann::json& j);

} // namespace stgp

#endif
