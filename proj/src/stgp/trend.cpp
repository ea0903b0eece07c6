#include "stgp/trend.hpp"
#include "stgp/errors.hpp"

#include <cmath>
#include <sstream>

namespace stgp {

namespace {

const char* kTermNames[kTrendTerms] = {
    "intercept", "sin_f1_t", "cos_f1_t", "sin_f2_t", "cos_f2_t", "t",
    "x",         "y",        "x_t",      "y_t",      "x_t2",     "y_t2",
    "x_t3",      "y_t3",     "x_t4",     "y_t4"};

} // namespace

Eigen::RowVectorXd build_design_row(const SpaceTimePoint& p, double freq1,
                                    double freq2) {
    Eigen::RowVectorXd row(kTrendTerms);
    double t = p.t;
    double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    row << 1.0, std::sin(freq1 * t), std::cos(freq1 * t), std::sin(freq2 * t),
        std::cos(freq2 * t), t, p.x, p.y, p.x * t, p.y * t, p.x * t2, p.y * t2,
        p.x * t3, p.y * t3, p.x * t4, p.y * t4;
    return row;
}

TrendModel ols_fit(const std::vector<SpaceTimePoint>& points,
                   const Eigen::VectorXd& values, double freq1, double freq2) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    if (n < kTrendTerms)
        throw DomainError("ols_fit: need at least 16 observations");
    if (values.size() != n)
        throw DomainError("ols_fit: points/values length mismatch");
    Eigen::MatrixXd design(n, kTrendTerms);
    for (Eigen::Index i = 0; i < n; ++i)
        design.row(i) = build_design_row(points[i], freq1, freq2);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < kTrendTerms) {
        // name the columns past the numerical rank
        std::ostringstream os;
        os << "ols_fit: rank-deficient design (rank " << qr.rank()
           << " of " << kTrendTerms << "); collinear columns:";
        auto perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < kTrendTerms; ++k)
            os << " " << kTermNames[perm[k]];
        throw DomainError(os.str());
    }
    TrendModel m;
    m.coefficients = qr.solve(values);
    m.freq1 = freq1;
    m.freq2 = freq2;
    return m;
}

double trend_mean(const TrendModel& m, const SpaceTimePoint& p) {
    return build_design_row(p, m.freq1, m.freq2).dot(m.coefficients);
}

Dataset detrend(const TrendModel& m, const Dataset& data) {
    Dataset out;
    out.points = data.points;
    out.values.resize(data.values.size());
    for (Eigen::Index i = 0; i < out.values.size(); ++i)
        out.values[i] = data.values[i] - trend_mean(m, data.points[i]);
    return out;
}

PredictiveDistribution retrend(const TrendModel& m,
                               const PredictiveDistribution& pd) {
    PredictiveDistribution out = pd;
    for (Eigen::Index i = 0; i < out.mean.size(); ++i)
        out.mean[i] += trend_mean(m, pd.targets[i]);
    return out;
}

nlohmann::json trend_to_json(const TrendModel& m) {
    nlohmann::json coef;
    for (int k = 0; k < kTrendTerms; ++k) coef[kTermNames[k]] = m.coefficients[k];
    return {{"coefficients", coef}, {"freq1", m.freq1}, {"freq2", m.freq2}};
}

TrendModel trend_from_json(const nlohmann::json& j) {
    if (!j.contains("coefficients") || !j["coefficients"].is_object())
        throw DataError("trend_from_json: missing 'coefficients' object");
    TrendModel m;
    m.coefficients.resize(kTrendTerms);
    for (int k = 0; k < kTrendTerms; ++k) {
        if (!j["coefficients"].contains(kTermNames[k]))
            throw DataError(std::string("trend_from_json: missing coefficient '") +
                            kTermNames[k] + "'");
        m.coefficients[k] = j["coefficients"][kTermNames[k]].get<double>();
    }
    if (j.contains("freq1")) m.freq1 = j["freq1"].get<double>();
    if (j.contains("freq2")) m.freq2 = j["freq2"].get<double>();
    return m;
}

} // namespace stgp
