#ifndef STGP_KERNELS_HPP
#define STGP_KERNELS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace stgp {

struct SpaceTimePoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    bool operator==(const SpaceTimePoint&) const = default;
};

inline double spatial_dist(const SpaceTimePoint& p, const SpaceTimePoint& q) {
    double dx = p.x - q.x, dy = p.y - q.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Positive function of time, either exp of a polynomial (the estimable form)
// or a direct analytic function (used for simulation truths only; cannot be
// serialized).
class TimeFn {
public:
    TimeFn() : log_poly_{0.0} {}
    explicit TimeFn(std::vector<double> log_poly_coeffs);
    static TimeFn constant(double value); // log_poly = [log(value)]
    static TimeFn analytic(std::function<double(double)> fn);

    double operator()(double t) const;
    bool is_log_poly() const { return !analytic_; }
    const std::vector<double>& log_poly() const { return log_poly_; }

private:
    std::vector<double> log_poly_;
    std::function<double(double)> analytic_;
};

// Time-varying model: spatial scale alpha_s(t) and smoothness nu_s(t) evolve
// with time; alpha_bar pins the model so constant functions recover the
// stationary Gneiting-Matern class.
struct TvarModel {
    double sigma = 1.0;
    double a = 1.0;
    double gamma = 0.5; // in (0,1]
    double beta = 0.5;  // in [0,1]
    double delta = 0.0; // >= 0
    TimeFn alpha_fn;
    TimeFn nu_fn;
    double alpha_bar = 1.0;
    int d = 2;
    double nugget = 0.0;
};

// Stationary Gneiting-Matern class with the (a w^gamma + 1)^beta Bernstein
// function and the extra (a|u|^{2 gamma}+1)^{-delta} temporal factor.
struct GneitModel {
    double sigma = 1.0;
    double a = 1.0;
    double gamma = 0.5;
    double beta = 0.5;
    double delta = 0.0;
    double alpha = 1.0;
    double nu = 0.5;
    int d = 2;
    double nugget = 0.0;
};

// Separable product model (beta = 0 case of the above).
struct SepModel {
    double sigma = 1.0;
    double a = 1.0;
    double gamma = 0.5;
    double delta = 0.0;
    double alpha = 1.0;
    double nu = 0.5;
    int d = 2;
    double nugget = 0.0;
};

using CovarianceModel = std::variant<TvarModel, GneitModel, SepModel>;

const char* variant_name(const CovarianceModel& m);
double model_sigma(const CovarianceModel& m);
double model_nugget(const CovarianceModel& m);

// Throw DomainError if parameter bounds are violated.
void validate_model(const CovarianceModel& m);

// Matern correlation M(h | alpha, nu) = 2^{1-nu}/Gamma(nu) (alpha h)^nu
// K_nu(alpha h); equals 1 at h = 0.
double matern(double h_norm, double alpha, double nu);

// Bernstein function psi(w) = (a w^gamma + 1)^beta.
double bernstein_psi(double w, double a, double gamma, double beta);

double eval_timefn(const TimeFn& f, double t);

// Mean of alpha_s over the training time points.
double alpha_bar_mean(const TimeFn& alpha_fn,
                      const std::vector<double>& training_times);

// 1/zeta^2(t_i, t_j) = psi(|dt|^2)/abar^2 + (1/a_i^2 + 1/a_j^2)/2 - 1/abar^2
double tvar_inv_zeta2(const TvarModel& m, double ti, double tj);

// Covariance between two space-time points. nugget contributes only when the
// two points are identical (the matrix builder adds it on the index diagonal
// instead).
double cov_eval(const CovarianceModel& m, const SpaceTimePoint& p1,
                const SpaceTimePoint& p2);

// Covariance at a fixed time pair as a function of spatial distance:
// C(r) = pref * M(r | scale, nu). Lets batch evaluators hoist the per-pair
// work out of per-entry loops.
struct PairEval {
    double pref, scale, nu, lgam_nu;
    double operator()(double r) const;
};
PairEval make_pair_eval(const CovarianceModel& m, double ti, double tj);

// Gneit and Sep covariances depend on times only through |t_i - t_j|.
bool time_stationary(const CovarianceModel& m);

// Purely temporal restriction C(0, t_i, t_j).
double purely_temporal(const TvarModel& m, double ti, double tj);

// Dense covariance matrix; diagonal is sigma^2 + nugget. Symmetric by
// construction.
Eigen::MatrixXd build_cov_matrix(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points);

// Cross-covariance between two point sets (no nugget anywhere).
Eigen::MatrixXd build_cross_cov(const CovarianceModel& m,
                                const std::vector<SpaceTimePoint>& rows,
                                const std::vector<SpaceTimePoint>& cols);

// Max over random contrast vectors (sum x_i = 0, |x| = 1) of x' Q x, where
// Q = [1/zeta^2(t_i,t_j)]. Valid parameterizations keep this <= ~1e-10 |Q|.
double cnd_check(const TvarModel& m, const std::vector<double>& times,
                 int trials, std::uint64_t seed);
double cnd_check_matrix(const Eigen::MatrixXd& q, int trials,
                        std::uint64_t seed);

nlohmann::json model_to_json(const CovarianceModel& m);
CovarianceModel model_from_json(const nlohmann::json& j);

} // namespace stgp

#endif
