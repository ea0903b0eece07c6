#include "stgp/gp.hpp"
#include "stgp/errors.hpp"
#include "stgp/rng.hpp"
#include "stgp/specialfn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double CholFactor::log_det() const {
    return 2.0 * l.diagonal().array().log().sum();
}

Eigen::VectorXd CholFactor::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = l.triangularView<Eigen::Lower>().solve(b);
    return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholFactor::half_solve(const Eigen::MatrixXd& b) const {
    return l.triangularView<Eigen::Lower>().solve(b);
}

CholFactor jittered_cholesky(const Eigen::MatrixXd& cov, double sigma2) {
    const Eigen::Index n = cov.rows();
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 7; ++attempt) {
        Eigen::MatrixXd work = cov;
        if (jitter > 0.0) work.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() == Eigen::Success) {
            CholFactor f;
            f.l = llt.matrixL();
            f.jitter = jitter;
            return f;
        }
        jitter = (jitter == 0.0) ? 1e-10 * sigma2 : 10.0 * jitter;
        if (jitter > 1e-4 * sigma2 * (1.0 + 1e-12)) break;
    }
    std::ostringstream os;
    os << "cholesky failed for a " << n << "x" << n
       << " covariance matrix after jitter up to " << 1e-4 * sigma2
       << " (diag range [" << cov.diagonal().minCoeff() << ", "
       << cov.diagonal().maxCoeff() << "], max |entry| "
       << cov.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str());
}

Eigen::VectorXd simulate_gp(const CovarianceModel& m,
                            const std::vector<SpaceTimePoint>& points,
                            std::uint64_t seed) {
    auto cov = build_cov_matrix(m, points);
    double s = model_sigma(m);
    auto f = jittered_cholesky(cov, s * s);
    Rng rng(seed);
    Eigen::VectorXd eps(points.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
    return f.l.triangularView<Eigen::Lower>() * eps;
}

double full_loglik(const CovarianceModel& m,
                   const std::vector<SpaceTimePoint>& points,
                   const Eigen::VectorXd& values) {
    if (points.empty()) throw DomainError("full_loglik: empty dataset");
    if (static_cast<Eigen::Index>(points.size()) != values.size())
        throw DomainError("full_loglik: points/values length mismatch");
    auto cov = build_cov_matrix(m, points);
    double s = model_sigma(m);
    auto f = jittered_cholesky(cov, s * s);
    Eigen::VectorXd half = f.half_solve(values);
    double quad = half.squaredNorm();
    double n = static_cast<double>(points.size());
    return -0.5 * (f.log_det() + quad + n * kLog2Pi);
}

double full_loglik(const CovarianceModel& m, const Dataset& data) {
    return full_loglik(m, data.points, data.values);
}

PredictiveDistribution krige(const CovarianceModel& m, const Dataset& observed,
                             const std::vector<SpaceTimePoint>& targets) {
    if (observed.size() == 0) throw DomainError("krige: no observations");
    auto cov = build_cov_matrix(m, observed.points);
    double s = model_sigma(m);
    double prior = s * s + model_nugget(m);
    auto f = jittered_cholesky(cov, s * s);

    Eigen::VectorXd weights = f.solve(observed.values); // Sigma^{-1} x
    Eigen::MatrixXd cross = build_cross_cov(m, observed.points, targets);
    Eigen::MatrixXd half = f.half_solve(cross); // L^{-1} C_ot

    PredictiveDistribution pd;
    pd.targets = targets;
    pd.mean = cross.transpose() * weights;
    pd.variance.resize(static_cast<Eigen::Index>(targets.size()));
    for (Eigen::Index j = 0; j < pd.variance.size(); ++j) {
        double v = prior - half.col(j).squaredNorm();
        if (v < 0.0) {
            if (v < -1e-10) {
                std::ostringstream os;
                os << "krige: negative predictive variance " << v
                   << " at target " << j;
                throw NumericalError(os.str());
            }
            v = 0.0;
        }
        pd.variance[j] = std::min(v, prior);
    }
    return pd;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
prediction_interval(const PredictiveDistribution& pd, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("prediction_interval: p must lie in (0,1)");
    double q = norm_quantile(0.5 * (1.0 + p));
    Eigen::VectorXd sd = pd.variance.array().sqrt();
    return {pd.mean - q * sd, pd.mean + q * sd};
}

namespace {

Dataset select_by(const Dataset& observed,
                  const std::function<bool(double)>& keep_time,
                  const std::string& what) {
    Dataset out;
    std::vector<double> vals;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (keep_time(observed.points[i].t)) {
            out.points.push_back(observed.points[i]);
            vals.push_back(observed.values[static_cast<Eigen::Index>(i)]);
        }
    }
    if (out.points.empty())
        throw DataError("neighborhood selection is empty (" + what +
                        "); widen the window");
    out.values = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    return out;
}

} // namespace

Dataset neighborhood_interpolate(const Dataset& observed, double t0, int w_steps,
                                 std::optional<double> dt) {
    if (w_steps <= 0) throw DomainError("neighborhood: window must be positive");
    double step;
    if (dt) {
        step = *dt;
        if (!(step > 0.0)) throw DomainError("neighborhood: dt must be positive");
    } else {
        auto times = unique_times(observed.points);
        step = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < times.size(); ++i)
            step = std::min(step, times[i] - times[i - 1]);
        if (!std::isfinite(step)) step = 1.0; // single time level
    }
    double w = w_steps * step * (1.0 + 1e-9);
    return select_by(
        observed, [&](double t) { return std::fabs(t - t0) <= w; },
        "interpolation window " + std::to_string(w_steps) + " steps");
}

Dataset neighborhood_forecast(const Dataset& observed, double t_lo, double t_hi) {
    if (!(t_lo <= t_hi)) throw DomainError("neighborhood: invalid trailing range");
    return select_by(
        observed, [&](double t) { return t >= t_lo && t <= t_hi; },
        "forecast range");
}

void write_predictions_csv(const std::string& path,
                           const PredictiveDistribution& pd,
                           const std::vector<double>& interval_levels) {
    std::ofstream out(path);
    if (!out.good()) throw DataError("cannot write predictions file: " + path);
    out << "x,y,t,mean,variance";
    char buf[160];
    for (double p : interval_levels) {
        std::snprintf(buf, sizeof buf, ",lo_%g,hi_%g", p, p);
        out << buf;
    }
    out << "\n";
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> bounds;
    for (double p : interval_levels) bounds.push_back(prediction_interval(pd, p));
    for (std::size_t i = 0; i < pd.targets.size(); ++i) {
        Eigen::Index k = static_cast<Eigen::Index>(i);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g",
                      pd.targets[i].x, pd.targets[i].y, pd.targets[i].t,
                      pd.mean[k], pd.variance[k]);
        out << buf;
        for (const auto& b : bounds) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", b.first[k], b.second[k]);
            out << buf;
        }
        out << "\n";
    }
    if (!out.good()) throw DataError("write failed: " + path);
}

} // namespace stgp
