#include "stgp/fit.hpp"
#include "stgp/errors.hpp"
#include "stgp/neldermead.hpp"
#include "stgp/rng.hpp"
#include "stgp/specialfn.hpp"
#include "stgp/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace stgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// concentrated purely spatial Matern log-likelihood for one time slice,
// profiled over sigma^2
struct SliceProblem {
    Eigen::VectorXd x;
    std::vector<double> dists; // unique pairwise distances
    Eigen::MatrixXi didx;      // index into dists, -1 on the diagonal

    double neg_loglik(double log_alpha, double log_nu) const {
        double alpha = std::exp(log_alpha), nu = std::exp(log_nu);
        if (alpha < 1e-6 || alpha > 1e6 || nu < 0.01 || nu > 30.0) return kInf;
        const int n = static_cast<int>(x.size());
        std::vector<double> mv(dists.size());
        for (std::size_t k = 0; k < dists.size(); ++k)
            mv[k] = matern(dists[k], alpha, nu);
        Eigen::MatrixXd r(n, n);
        for (int j = 0; j < n; ++j) {
            r(j, j) = 1.0;
            for (int i = j + 1; i < n; ++i) r(i, j) = r(j, i) = mv[didx(i, j)];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(r);
        if (llt.info() != Eigen::Success) return kInf;
        Eigen::MatrixXd l = llt.matrixL();
        double logdet = 2.0 * l.diagonal().array().log().sum();
        double quad = l.triangularView<Eigen::Lower>().solve(x).squaredNorm();
        double sigma2 = quad / n;
        if (!(sigma2 > 0.0)) return kInf;
        return n * std::log(sigma2) + logdet;
    }
};

std::vector<int> strided_subsample(int n, int cap) {
    std::vector<int> idx;
    if (n <= cap) {
        idx.resize(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
    } else {
        idx.reserve(cap);
        for (int k = 0; k < cap; ++k)
            idx.push_back(static_cast<int>(static_cast<long long>(k) * n / cap));
    }
    return idx;
}

// least squares polynomial fit of y on t, constant term first
std::vector<double> poly_fit(const std::vector<double>& t,
                             const std::vector<double>& y, int order) {
    Eigen::MatrixXd v(t.size(), order + 1);
    Eigen::VectorXd b(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            v(i, k) = p;
            p *= t[i];
        }
        b(i) = y[i];
    }
    Eigen::VectorXd c = v.colPivHouseholderQr().solve(b);
    return {c.data(), c.data() + c.size()};
}

} // namespace

std::vector<SliceEstimate> fit_time_slices(const GridIndex& grid,
                                           const Eigen::VectorXd& values,
                                           int max_locations) {
    auto sub = strided_subsample(grid.n_locations(), max_locations);
    const int n = static_cast<int>(sub.size());

    // distance structure shared by every slice
    std::map<double, int> uniq;
    Eigen::MatrixXd dist(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = j + 1; i < n; ++i) {
            double dx = grid.locations[sub[i]].first - grid.locations[sub[j]].first;
            double dy = grid.locations[sub[i]].second - grid.locations[sub[j]].second;
            double r = std::sqrt(dx * dx + dy * dy);
            dist(i, j) = r;
            uniq.emplace(r, 0);
        }
    SliceProblem prob;
    int k = 0;
    for (auto& kv : uniq) {
        prob.dists.push_back(kv.first);
        kv.second = k++;
    }
    prob.didx = Eigen::MatrixXi::Constant(n, n, -1);
    for (int j = 0; j < n; ++j)
        for (int i = j + 1; i < n; ++i)
            prob.didx(i, j) = uniq.find(dist(i, j))->second;

    double median_dist =
        prob.dists.empty() ? 1.0 : prob.dists[prob.dists.size() / 2];
    double log_alpha0 = std::log(1.0 / std::max(1e-12, median_dist));

    std::vector<SliceEstimate> out;
    for (int ti = 0; ti < grid.n_times(); ++ti) {
        prob.x.resize(n);
        for (int i = 0; i < n; ++i) prob.x[i] = values[grid.cell(sub[i], ti)];
        auto f = [&](const Eigen::VectorXd& u) {
            return prob.neg_loglik(u[0], u[1]);
        };
        Eigen::VectorXd u0(2);
        u0 << log_alpha0, std::log(0.5);
        if (!std::isfinite(f(u0))) continue;
        auto r = nelder_mead(f, u0, 0.7, 1e-5, 200);
        if (!std::isfinite(r.fx)) continue;
        SliceEstimate e;
        e.t = grid.times[ti];
        e.alpha = std::exp(r.x[0]);
        e.nu = std::exp(r.x[1]);
        // recover the profiled variance
        double alpha = e.alpha, nu = e.nu;
        std::vector<double> mv(prob.dists.size());
        for (std::size_t q = 0; q < prob.dists.size(); ++q)
            mv[q] = matern(prob.dists[q], alpha, nu);
        Eigen::MatrixXd rr(n, n);
        for (int j = 0; j < n; ++j) {
            rr(j, j) = 1.0;
            for (int i = j + 1; i < n; ++i) rr(i, j) = rr(j, i) = mv[prob.didx(i, j)];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(rr);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd l = llt.matrixL();
            e.sigma2 =
                l.triangularView<Eigen::Lower>().solve(prob.x).squaredNorm() / n;
        }
        out.push_back(e);
    }
    return out;
}

namespace {

CovarianceModel proto_from_spec(const ModelSpec& spec) {
    if (spec.variant == "tvar") {
        if (spec.alpha_poly_order < 0 || spec.nu_poly_order < 0)
            throw DomainError("ModelSpec: polynomial orders must be >= 0");
        TvarModel m;
        m.alpha_fn = TimeFn(std::vector<double>(spec.alpha_poly_order + 1, 0.0));
        m.nu_fn = TimeFn(std::vector<double>(spec.nu_poly_order + 1, 0.0));
        m.d = spec.d;
        m.nugget = spec.nugget;
        return m;
    }
    if (spec.variant == "gneit") {
        GneitModel m;
        m.d = spec.d;
        m.nugget = spec.nugget;
        return m;
    }
    if (spec.variant == "sep") {
        SepModel m;
        m.d = spec.d;
        m.nugget = spec.nugget;
        return m;
    }
    throw DomainError("ModelSpec: unknown variant '" + spec.variant + "'");
}

int index_of(const std::vector<ParamDef>& layout, const std::string& name) {
    for (std::size_t i = 0; i < layout.size(); ++i)
        if (layout[i].name == name) return static_cast<int>(i);
    return -1;
}

} // namespace

FitResult fit(const Dataset& data, const ModelSpec& spec,
              const PartitionPlan& plan, const OptimizerConfig& cfg) {
    auto grid = GridIndex::build(data.points);
    CovarianceModel proto = proto_from_spec(spec);
    RclWorkspace workspace(grid, plan, data.values, time_stationary(proto));
    auto layout = layout_for(proto);

    FitResult result;
    result.plan_seed = plan.seed;
    result.m_s = plan.m_s;
    result.r_s = plan.r_s;
    result.m_t = plan.m_t;
    result.r_t = plan.r_t;

    // ---- warm start -------------------------------------------------------
    double var = (data.values.array() - data.values.mean()).square().mean();
    double sigma0 = std::sqrt(std::max(var, 1e-12));
    Eigen::VectorXd theta0(layout.size());
    std::map<std::string, double> init;
    init["sigma"] = sigma0;
    init["a"] = 1.0;
    init["gamma"] = 0.5;
    init["beta"] = 0.5;
    init["delta"] = 0.5;

    auto slices = fit_time_slices(grid, data.values);
    if (slices.empty())
        result.warnings.push_back(
            "time-slice warm start failed; using generic initial values");
    std::vector<double> st, sla, sln;
    for (const auto& e : slices) {
        st.push_back(e.t);
        sla.push_back(std::log(e.alpha));
        sln.push_back(std::log(std::min(std::max(e.nu, 0.1), 5.0)));
    }

    if (spec.variant == "tvar") {
        int oa = spec.alpha_poly_order, on = spec.nu_poly_order;
        std::vector<double> ca(oa + 1, 0.0), cn(on + 1, 0.0);
        if (!slices.empty()) {
            int oa_eff = std::min<int>(oa, static_cast<int>(slices.size()) - 1);
            int on_eff = std::min<int>(on, static_cast<int>(slices.size()) - 1);
            if (oa_eff < oa || on_eff < on)
                result.warnings.push_back(
                    "fewer time slices than polynomial coefficients; "
                    "higher-order warm-start terms start at zero");
            auto fa = poly_fit(st, sla, oa_eff);
            auto fn = poly_fit(st, sln, on_eff);
            std::copy(fa.begin(), fa.end(), ca.begin());
            std::copy(fn.begin(), fn.end(), cn.begin());
        } else {
            ca[0] = std::log(10.0);
            cn[0] = std::log(0.5);
        }
        for (int k = 0; k <= oa; ++k) init["alpha_c" + std::to_string(k)] = ca[k];
        for (int k = 0; k <= on; ++k) init["nu_c" + std::to_string(k)] = cn[k];
    } else {
        double la = slices.empty()
                        ? std::log(10.0)
                        : std::accumulate(sla.begin(), sla.end(), 0.0) / sla.size();
        double ln = slices.empty()
                        ? std::log(0.5)
                        : std::accumulate(sln.begin(), sln.end(), 0.0) / sln.size();
        init["alpha"] = std::exp(la);
        init["nu"] = std::exp(ln);
    }

    for (const auto& kv : spec.initial) {
        if (index_of(layout, kv.first) < 0)
            throw DomainError("ModelSpec: unknown initial parameter '" + kv.first +
                              "' for variant " + spec.variant);
        init[kv.first] = kv.second;
    }
    for (const auto& kv : spec.fixed) {
        if (index_of(layout, kv.first) < 0)
            throw DomainError("ModelSpec: unknown fixed parameter '" + kv.first +
                              "' for variant " + spec.variant);
        init[kv.first] = kv.second;
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        auto it = init.find(layout[i].name);
        theta0[static_cast<Eigen::Index>(i)] = (it == init.end()) ? 0.0 : it->second;
    }

    // ---- free coordinates --------------------------------------------------
    std::vector<int> free_idx;
    std::vector<ParamDef> free_layout;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (spec.fixed.count(layout[i].name)) continue;
        free_idx.push_back(static_cast<int>(i));
        free_layout.push_back(layout[i]);
        result.free_names.push_back(layout[i].name);
    }
    if (free_idx.empty()) throw DomainError("fit: no free parameters");

    Eigen::VectorXd nat_free(free_idx.size());
    for (std::size_t j = 0; j < free_idx.size(); ++j)
        nat_free[static_cast<Eigen::Index>(j)] = theta0[free_idx[j]];
    Eigen::VectorXd u0 = transform_vec(nat_free, free_layout);

    auto assemble = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd theta = theta0;
        Eigen::VectorXd nat = untransform_vec(u, free_layout);
        for (std::size_t j = 0; j < free_idx.size(); ++j)
            theta[free_idx[j]] = nat[static_cast<Eigen::Index>(j)];
        return unpack_natural(proto, theta, &grid.times);
    };
    auto objective = [&](const Eigen::VectorXd& u) {
        try {
            return -workspace.loglik(assemble(u), cfg.n_threads);
        } catch (const NumericalError&) {
            return kInf;
        }
    };

    double f0 = objective(u0);
    if (!std::isfinite(f0)) {
        std::ostringstream os;
        os << "fit: objective is not finite at the initial point (theta0 =";
        for (Eigen::Index i = 0; i < theta0.size(); ++i) os << " " << theta0[i];
        os << ")";
        try {
            workspace.loglik(assemble(u0), cfg.n_threads);
        } catch (const NumericalError& e) {
            os << "; cause: " << e.what();
        }
        throw NumericalError(os.str());
    }

    // ---- simplex optimization with one refinement stage --------------------
    NmResult best;
    best.fx = kInf;
    int total_iters = 0;
    std::vector<double> trace;
    int starts = std::max(1, cfg.multistart);
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd u = u0;
        if (s > 0) {
            Rng jitter(Rng::derive(cfg.seed, 1000 + s));
            for (Eigen::Index i = 0; i < u.size(); ++i)
                u[i] += (jitter.uniform() - 0.5);
        }
        auto stage1 = nelder_mead(objective, u, cfg.init_step, cfg.tol,
                                  cfg.max_iters);
        auto stage2 = nelder_mead(objective, stage1.x, cfg.init_step / 4.0,
                                  cfg.tol, cfg.max_iters);
        total_iters += stage1.iterations + stage2.iterations;
        if (s == 0 || stage2.fx < best.fx) {
            best = stage2;
            trace = stage1.trace;
            trace.insert(trace.end(), stage2.trace.begin(), stage2.trace.end());
        }
    }

    result.model = assemble(best.x);
    result.theta_unconstrained = best.x;
    result.objective_value = -best.fx;
    result.iterations = total_iters;
    result.converged = best.converged;
    result.trace.reserve(trace.size());
    for (double v : trace) result.trace.push_back(-v);
    if (const auto* tv = std::get_if<TvarModel>(&result.model)) {
        result.alpha_bar_used = tv->alpha_bar;
        std::ostringstream os;
        os << "alpha_s(t), nu_s(t) were estimated on t in [" << grid.times.front()
           << ", " << grid.times.back()
           << "]; extrapolation beyond this range should be interpreted with caution";
        result.warnings.push_back(os.str());
    } else if (const auto* gn = std::get_if<GneitModel>(&result.model)) {
        result.alpha_bar_used = gn->alpha;
    } else {
        result.alpha_bar_used = std::get<SepModel>(result.model).alpha;
    }
    if (!result.converged)
        result.warnings.push_back("optimizer reached max_iters before the "
                                  "convergence tolerance; best iterate returned");
    return result;
}

nlohmann::json fit_result_to_json(const FitResult& r,
                                  const OptimizerConfig& cfg) {
    nlohmann::json j;
    j["model"] = model_to_json(r.model);
    j["free_parameters"] = r.free_names;
    j["theta_unconstrained"] =
        std::vector<double>(r.theta_unconstrained.data(),
                            r.theta_unconstrained.data() + r.theta_unconstrained.size());
    j["objective_value"] = r.objective_value;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["trace"] = r.trace;
    j["alpha_bar_used"] = r.alpha_bar_used;
    j["warnings"] = r.warnings;
    j["plan"] = {{"seed", r.plan_seed},
                 {"M_s", r.m_s},
                 {"R_s", r.r_s},
                 {"M_t", r.m_t},
                 {"R_t", r.r_t}};
    j["optimizer"] = {{"max_iters", cfg.max_iters},
                      {"tol", cfg.tol},
                      {"multistart", cfg.multistart},
                      {"seed", cfg.seed},
                      {"n_threads", cfg.n_threads},
                      {"init_step", cfg.init_step}};
    return j;
}

} // namespace stgp
