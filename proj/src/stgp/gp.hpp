#ifndef STGP_GP_HPP
#define STGP_GP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stgp/dataset.hpp"
#include "stgp/kernels.hpp"

namespace stgp {

struct PredictiveDistribution {
    std::vector<SpaceTimePoint> targets;
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

// Cholesky with the escalating-jitter policy: on failure add 1e-10 sigma^2
// to the diagonal, escalate x10 up to 1e-4 sigma^2, then give up.
struct CholFactor {
    Eigen::MatrixXd l;     // lower triangular factor
    double jitter = 0.0;   // the diagonal shift that was applied

    double log_det() const; // of the (jittered) matrix
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd half_solve(const Eigen::MatrixXd& b) const; // L^{-1} B
};

CholFactor jittered_cholesky(const Eigen::MatrixXd& cov, double sigma2);

// One draw of a zero-mean Gaussian field at the given points; deterministic
// in (model, points, seed).
Eigen::VectorXd simulate_gp(const CovarianceModel& m,
                            const std::vector<SpaceTimePoint>& points,
                            std::uint64_t seed);

// -1/2 { log det Sigma + x' Sigma^{-1} x + N log 2 pi }
double full_loglik(const CovarianceModel& m, const Dataset& data);
double full_loglik(const CovarianceModel& m,
                   const std::vector<SpaceTimePoint>& points,
                   const Eigen::VectorXd& values);

// Conditional-Gaussian prediction at the targets given the observations.
PredictiveDistribution krige(const CovarianceModel& m, const Dataset& observed,
                             const std::vector<SpaceTimePoint>& targets);

// Central p-interval of N(mean, variance) per target.
std::pair<Eigen::VectorXd, Eigen::VectorXd>
prediction_interval(const PredictiveDistribution& pd, double p);

// Observations within w_steps time steps of t0; dt defaults to the smallest
// positive spacing among the distinct observation times.
Dataset neighborhood_interpolate(const Dataset& observed, double t0, int w_steps,
                                 std::optional<double> dt = std::nullopt);
// Observations in the trailing window [t_lo, t_hi].
Dataset neighborhood_forecast(const Dataset& observed, double t_lo, double t_hi);

// CSV columns x,y,t,mean,variance plus lo_p,hi_p per requested level.
void write_predictions_csv(const std::string& path,
                           const PredictiveDistribution& pd,
                           const std::vector<double>& interval_levels = {});

} // namespace stgp

#endif
