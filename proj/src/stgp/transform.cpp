#include "stgp/transform.hpp"
#include "stgp/errors.hpp"

#include <cmath>

namespace stgp {

namespace {

constexpr double kDeltaEps = 1e-8;
constexpr double kClamp = 1e-9;

double fwd(double v, Xf xf, const std::string& name) {
    switch (xf) {
        case Xf::Log:
            if (!(v > 0.0)) throw DomainError("transform: " + name + " must be positive");
            return std::log(v);
        case Xf::Logit: {
            if (!(v >= 0.0 && v <= 1.0))
                throw DomainError("transform: " + name + " must lie in [0,1]");
            double c = std::min(1.0 - kClamp, std::max(kClamp, v));
            return std::log(c / (1.0 - c));
        }
        case Xf::LogEps:
            if (!(v >= 0.0))
                throw DomainError("transform: " + name + " must be nonnegative");
            return std::log(v + kDeltaEps);
        case Xf::Identity:
            if (!std::isfinite(v))
                throw DomainError("transform: " + name + " must be finite");
            return v;
    }
    throw DomainError("transform: unknown kind");
}

double bwd(double u, Xf xf) {
    switch (xf) {
        case Xf::Log:
            return std::exp(u);
        case Xf::Logit:
            return 1.0 / (1.0 + std::exp(-u));
        case Xf::LogEps:
            return std::max(0.0, std::exp(u) - kDeltaEps);
        case Xf::Identity:
            return u;
    }
    return u;
}

void append_poly(std::vector<ParamDef>& out, const char* prefix, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k)
        out.push_back({std::string(prefix) + "_c" + std::to_string(k), Xf::Identity});
}

} // namespace

std::vector<ParamDef> layout_for(const CovarianceModel& m) {
    std::vector<ParamDef> out;
    out.push_back({"sigma", Xf::Log});
    out.push_back({"a", Xf::Log});
    out.push_back({"gamma", Xf::Logit});
    if (const auto* tv = std::get_if<TvarModel>(&m)) {
        out.push_back({"beta", Xf::Logit});
        out.push_back({"delta", Xf::LogEps});
        append_poly(out, "alpha", tv->alpha_fn.log_poly().size());
        append_poly(out, "nu", tv->nu_fn.log_poly().size());
    } else if (std::holds_alternative<GneitModel>(m)) {
        out.push_back({"beta", Xf::Logit});
        out.push_back({"delta", Xf::LogEps});
        out.push_back({"alpha", Xf::Log});
        out.push_back({"nu", Xf::Log});
    } else {
        out.push_back({"delta", Xf::LogEps});
        out.push_back({"alpha", Xf::Log});
        out.push_back({"nu", Xf::Log});
    }
    return out;
}

Eigen::VectorXd pack_natural(const CovarianceModel& m) {
    std::vector<double> v;
    if (const auto* tv = std::get_if<TvarModel>(&m)) {
        if (!tv->alpha_fn.is_log_poly() || !tv->nu_fn.is_log_poly())
            throw DomainError("pack_natural: analytic time functions have no parameter vector");
        v = {tv->sigma, tv->a, tv->gamma, tv->beta, tv->delta};
        for (double c : tv->alpha_fn.log_poly()) v.push_back(c);
        for (double c : tv->nu_fn.log_poly()) v.push_back(c);
    } else if (const auto* gn = std::get_if<GneitModel>(&m)) {
        v = {gn->sigma, gn->a, gn->gamma, gn->beta, gn->delta, gn->alpha, gn->nu};
    } else {
        const auto& sp = std::get<SepModel>(m);
        v = {sp.sigma, sp.a, sp.gamma, sp.delta, sp.alpha, sp.nu};
    }
    return Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
}

CovarianceModel unpack_natural(const CovarianceModel& proto,
                               const Eigen::VectorXd& theta,
                               const std::vector<double>* training_times) {
    auto layout = layout_for(proto);
    if (theta.size() != static_cast<Eigen::Index>(layout.size()))
        throw DomainError("unpack_natural: wrong parameter count");
    if (const auto* tv = std::get_if<TvarModel>(&proto)) {
        TvarModel m = *tv;
        m.sigma = theta[0];
        m.a = theta[1];
        m.gamma = theta[2];
        m.beta = theta[3];
        m.delta = theta[4];
        std::size_t na = tv->alpha_fn.log_poly().size();
        std::size_t nn = tv->nu_fn.log_poly().size();
        std::vector<double> ac(theta.data() + 5, theta.data() + 5 + na);
        std::vector<double> nc(theta.data() + 5 + na, theta.data() + 5 + na + nn);
        m.alpha_fn = TimeFn(ac);
        m.nu_fn = TimeFn(nc);
        if (training_times)
            m.alpha_bar = alpha_bar_mean(m.alpha_fn, *training_times);
        return m;
    }
    if (const auto* gn = std::get_if<GneitModel>(&proto)) {
        GneitModel m = *gn;
        m.sigma = theta[0];
        m.a = theta[1];
        m.gamma = theta[2];
        m.beta = theta[3];
        m.delta = theta[4];
        m.alpha = theta[5];
        m.nu = theta[6];
        return m;
    }
    SepModel m = std::get<SepModel>(proto);
    m.sigma = theta[0];
    m.a = theta[1];
    m.gamma = theta[2];
    m.delta = theta[3];
    m.alpha = theta[4];
    m.nu = theta[5];
    return m;
}

Eigen::VectorXd transform_vec(const Eigen::VectorXd& natural,
                              const std::vector<ParamDef>& layout,
                              double offset) {
    if (natural.size() != static_cast<Eigen::Index>(layout.size()))
        throw DomainError("transform: wrong parameter count");
    Eigen::VectorXd u(natural.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        u[i] = fwd(natural[i], layout[i].xf, layout[i].name) + offset;
    return u;
}

Eigen::VectorXd untransform_vec(const Eigen::VectorXd& unconstrained,
                                const std::vector<ParamDef>& layout,
                                double offset) {
    if (unconstrained.size() != static_cast<Eigen::Index>(layout.size()))
        throw DomainError("untransform: wrong parameter count");
    Eigen::VectorXd v(unconstrained.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = bwd(unconstrained[i] - offset, layout[i].xf);
    return v;
}

} // namespace stgp
