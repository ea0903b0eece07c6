#include "stgp/kernels.hpp"
#include "stgp/errors.hpp"
#include "stgp/rng.hpp"
#include "stgp/specialfn.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_map>

namespace stgp {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kNuCap = 1e5; // smoothness beyond this is a numerical blow-up

bool finite_point(const SpaceTimePoint& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.t);
}

// log of the Matern correlation at x = alpha * h > 0
double log_matern_x(double x, double nu, double lgam_nu) {
    return (1.0 - nu) * kLn2 - lgam_nu + nu * std::log(x) + log_bessel_k(nu, x);
}

// per-time quantities of the Tvar model
struct TimeEval {
    double alpha, nu, lgam_nu, log_alpha2;
};

TimeEval time_eval(const TvarModel& m, double t) {
    double a = m.alpha_fn(t);
    double n = m.nu_fn(t);
    if (!std::isfinite(a) || !std::isfinite(n) || a <= 0.0 || n <= 0.0) {
        std::ostringstream os;
        os << "cov_eval: alpha_s/nu_s must be positive and finite; at t=" << t
           << " got alpha_s=" << a << ", nu_s=" << n;
        throw NumericalError(os.str());
    }
    if (n > kNuCap) {
        std::ostringstream os;
        os << "cov_eval: nu_s(" << t << ")=" << n << " exceeds the cap " << kNuCap;
        throw NumericalError(os.str());
    }
    return {a, n, log_gamma(n), std::log(a * a)};
}

// covariance between two fixed time points as a function of spatial distance:
//   C(h) = pref * M(h | scale, nu)
struct PairCoef {
    double pref, scale, nu, lgam_nu;
};

double eval_pair(const PairCoef& pc, double r) {
    if (r == 0.0) return pc.pref;
    double x = pc.scale * r;
    return pc.pref * std::exp(log_matern_x(x, pc.nu, pc.lgam_nu));
}

PairCoef tvar_pair(const TvarModel& m, double ti, double tj,
                   const TimeEval& ei, const TimeEval& ej) {
    PairCoef pc;
    double s2 = m.sigma * m.sigma;
    if (ti == tj) {
        // purely spatial slice: sigma^2 M(h | alpha_s(t), nu_s(t))
        pc = {s2, ei.alpha, ei.nu, ei.lgam_nu};
        return pc;
    }
    double u = std::fabs(ti - tj);
    double w = u * u;
    double big_b = m.a * std::pow(w, m.gamma) + 1.0;
    double psi = std::pow(big_b, m.beta);
    double ab2 = m.alpha_bar * m.alpha_bar;
    double invz2 = psi / ab2 +
                   0.5 * (1.0 / (ei.alpha * ei.alpha) + 1.0 / (ej.alpha * ej.alpha)) -
                   1.0 / ab2;
    if (!(invz2 > 0.0) || !std::isfinite(invz2)) {
        std::ostringstream os;
        os << "cov_eval: invalid 1/zeta^2=" << invz2 << " at (t_i,t_j)=(" << ti
           << "," << tj << "), alpha_bar=" << m.alpha_bar;
        throw NumericalError(os.str());
    }
    double nu_m = 0.5 * (ei.nu + ej.nu);
    double lgam_m = log_gamma(nu_m);
    double log_pref = lgam_m - 0.5 * (ei.lgam_nu + ej.lgam_nu) -
                      0.25 * m.d * (ei.log_alpha2 + ej.log_alpha2) -
                      0.5 * m.d * std::log(invz2) - m.delta * std::log(big_b);
    if (!std::isfinite(log_pref)) {
        std::ostringstream os;
        os << "cov_eval: non-finite prefactor at (t_i,t_j)=(" << ti << "," << tj
           << "), alpha_s=(" << ei.alpha << "," << ej.alpha << "), nu_s=("
           << ei.nu << "," << ej.nu << ")";
        throw NumericalError(os.str());
    }
    pc.pref = s2 * std::exp(log_pref);
    pc.scale = 1.0 / std::sqrt(invz2);
    pc.nu = nu_m;
    pc.lgam_nu = lgam_m;
    return pc;
}

PairCoef gneit_pair(const GneitModel& m, double ti, double tj) {
    double u = std::fabs(ti - tj);
    double big_b = m.a * std::pow(u * u, m.gamma) + 1.0;
    PairCoef pc;
    pc.pref = m.sigma * m.sigma *
              std::exp(-(m.beta * m.d / 2.0 + m.delta) * std::log(big_b));
    pc.scale = m.alpha * std::pow(big_b, -m.beta / 2.0);
    pc.nu = m.nu;
    pc.lgam_nu = log_gamma(m.nu);
    return pc;
}

PairCoef sep_pair(const SepModel& m, double ti, double tj) {
    double u = std::fabs(ti - tj);
    double big_b = m.a * std::pow(u * u, m.gamma) + 1.0;
    PairCoef pc;
    pc.pref = m.sigma * m.sigma * std::exp(-m.delta * std::log(big_b));
    pc.scale = m.alpha;
    pc.nu = m.nu;
    pc.lgam_nu = log_gamma(m.nu);
    return pc;
}

PairCoef pair_for(const CovarianceModel& m, double ti, double tj) {
    if (const auto* tv = std::get_if<TvarModel>(&m))
        return tvar_pair(*tv, ti, tj, time_eval(*tv, ti), time_eval(*tv, tj));
    if (const auto* gn = std::get_if<GneitModel>(&m)) return gneit_pair(*gn, ti, tj);
    return sep_pair(std::get<SepModel>(m), ti, tj);
}

void check_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
        throw DomainError(std::string(name) + " must be positive and finite");
}

void check_common(double sigma, double a, double gamma, double delta, int d,
                  double nugget) {
    check_positive(sigma, "sigma");
    check_positive(a, "a");
    if (!std::isfinite(gamma) || gamma <= 0.0 || gamma > 1.0)
        throw DomainError("gamma must lie in (0,1]");
    if (!std::isfinite(delta) || delta < 0.0)
        throw DomainError("delta must be nonnegative");
    if (d < 1) throw DomainError("d must be a positive integer");
    if (!std::isfinite(nugget) || nugget < 0.0)
        throw DomainError("nugget must be nonnegative");
}

void check_beta(double beta) {
    if (!std::isfinite(beta) || beta < 0.0 || beta > 1.0)
        throw DomainError("beta must lie in [0,1]");
}

// exact keying of the per-pair distance cache
struct CacheKey {
    std::uint32_t pair;
    std::uint64_t r2bits;
    bool operator==(const CacheKey&) const = default;
};

struct CacheKeyHash {
    std::size_t operator()(const CacheKey& k) const {
        std::uint64_t z = k.r2bits + 0x9E3779B97F4A7C15ULL * (k.pair + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        return static_cast<std::size_t>(z ^ (z >> 31));
    }
};

} // namespace

TimeFn::TimeFn(std::vector<double> log_poly_coeffs)
    : log_poly_(std::move(log_poly_coeffs)) {
    if (log_poly_.empty()) throw DomainError("TimeFn: empty coefficient list");
    for (double c : log_poly_)
        if (!std::isfinite(c))
            throw DomainError("TimeFn: non-finite polynomial coefficient");
}

TimeFn TimeFn::constant(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw DomainError("TimeFn::constant: value must be positive");
    return TimeFn({std::log(value)});
}

TimeFn TimeFn::analytic(std::function<double(double)> fn) {
    TimeFn f;
    f.log_poly_.clear();
    f.analytic_ = std::move(fn);
    return f;
}

double TimeFn::operator()(double t) const {
    if (analytic_) return analytic_(t);
    double p = 0.0;
    for (std::size_t k = log_poly_.size(); k-- > 0;) p = p * t + log_poly_[k];
    return std::exp(p);
}

const char* variant_name(const CovarianceModel& m) {
    if (std::holds_alternative<TvarModel>(m)) return "tvar";
    if (std::holds_alternative<GneitModel>(m)) return "gneit";
    return "sep";
}

double model_sigma(const CovarianceModel& m) {
    return std::visit([](const auto& v) { return v.sigma; }, m);
}

double model_nugget(const CovarianceModel& m) {
    return std::visit([](const auto& v) { return v.nugget; }, m);
}

void validate_model(const CovarianceModel& m) {
    if (const auto* tv = std::get_if<TvarModel>(&m)) {
        check_common(tv->sigma, tv->a, tv->gamma, tv->delta, tv->d, tv->nugget);
        check_beta(tv->beta);
        check_positive(tv->alpha_bar, "alpha_bar");
    } else if (const auto* gn = std::get_if<GneitModel>(&m)) {
        check_common(gn->sigma, gn->a, gn->gamma, gn->delta, gn->d, gn->nugget);
        check_beta(gn->beta);
        check_positive(gn->alpha, "alpha");
        check_positive(gn->nu, "nu");
    } else {
        const auto& sp = std::get<SepModel>(m);
        check_common(sp.sigma, sp.a, sp.gamma, sp.delta, sp.d, sp.nugget);
        check_positive(sp.alpha, "alpha");
        check_positive(sp.nu, "nu");
    }
}

double matern(double h_norm, double alpha, double nu) {
    if (!std::isfinite(h_norm) || h_norm < 0.0)
        throw DomainError("matern: h_norm must be finite and nonnegative");
    check_positive(alpha, "alpha");
    check_positive(nu, "nu");
    if (nu > kNuCap) throw NumericalError("matern: nu exceeds the cap");
    if (h_norm == 0.0) return 1.0;
    double x = alpha * h_norm;
    return std::exp(log_matern_x(x, nu, log_gamma(nu)));
}

double bernstein_psi(double w, double a, double gamma, double beta) {
    if (!std::isfinite(w) || w < 0.0)
        throw DomainError("bernstein_psi: w must be finite and nonnegative");
    check_positive(a, "a");
    if (!std::isfinite(gamma) || gamma <= 0.0 || gamma > 1.0)
        throw DomainError("bernstein_psi: gamma must lie in (0,1]");
    check_beta(beta);
    return std::pow(a * std::pow(w, gamma) + 1.0, beta);
}

double eval_timefn(const TimeFn& f, double t) {
    if (!std::isfinite(t)) throw DomainError("eval_timefn: non-finite t");
    return f(t);
}

double alpha_bar_mean(const TimeFn& alpha_fn,
                      const std::vector<double>& training_times) {
    if (training_times.empty())
        throw DomainError("alpha_bar: empty set of training times");
    double s = 0.0;
    for (double t : training_times) s += alpha_fn(t);
    return s / static_cast<double>(training_times.size());
}

double tvar_inv_zeta2(const TvarModel& m, double ti, double tj) {
    double u = std::fabs(ti - tj);
    double psi = bernstein_psi(u * u, m.a, m.gamma, m.beta);
    double ai = m.alpha_fn(ti), aj = m.alpha_fn(tj);
    double ab2 = m.alpha_bar * m.alpha_bar;
    return psi / ab2 + 0.5 * (1.0 / (ai * ai) + 1.0 / (aj * aj)) - 1.0 / ab2;
}

double cov_eval(const CovarianceModel& m, const SpaceTimePoint& p1,
                const SpaceTimePoint& p2) {
    if (!finite_point(p1) || !finite_point(p2))
        throw DomainError("cov_eval: non-finite point coordinates");
    if (p1 == p2) {
        double s = model_sigma(m);
        return s * s + model_nugget(m);
    }
    return eval_pair(pair_for(m, p1.t, p2.t), spatial_dist(p1, p2));
}

double PairEval::operator()(double r) const {
    return eval_pair({pref, scale, nu, lgam_nu}, r);
}

PairEval make_pair_eval(const CovarianceModel& m, double ti, double tj) {
    PairCoef pc = pair_for(m, ti, tj);
    return {pc.pref, pc.scale, pc.nu, pc.lgam_nu};
}

bool time_stationary(const CovarianceModel& m) {
    return !std::holds_alternative<TvarModel>(m);
}

double purely_temporal(const TvarModel& m, double ti, double tj) {
    return cov_eval(m, {0.0, 0.0, ti}, {0.0, 0.0, tj});
}

Eigen::MatrixXd build_cov_matrix(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points) {
    const std::size_t n = points.size();
    if (n == 0) throw DomainError("build_cov_matrix: empty point list");
    for (const auto& p : points)
        if (!finite_point(p)) throw DomainError("build_cov_matrix: non-finite point");

    // index the distinct time points
    std::map<double, int> tmap;
    for (const auto& p : points) tmap.emplace(p.t, 0);
    int nt = 0;
    for (auto& kv : tmap) kv.second = nt++;
    std::vector<int> tidx(n);
    std::vector<double> tvals(nt);
    for (auto& kv : tmap) tvals[kv.second] = kv.first;
    for (std::size_t i = 0; i < n; ++i) tidx[i] = tmap.find(points[i].t)->second;

    // pair table over distinct (t_i, t_j); falls back to direct evaluation
    // when the number of time points makes the table too large
    const bool tabulate = nt <= 512;
    std::vector<PairCoef> table;
    if (tabulate) {
        std::vector<TimeEval> te;
        const auto* tv = std::get_if<TvarModel>(&m);
        if (tv) {
            te.reserve(nt);
            for (double t : tvals) te.push_back(time_eval(*tv, t));
        }
        table.resize(static_cast<std::size_t>(nt) * (nt + 1) / 2);
        for (int hi = 0; hi < nt; ++hi)
            for (int lo = 0; lo <= hi; ++lo) {
                std::size_t pid = static_cast<std::size_t>(hi) * (hi + 1) / 2 + lo;
                table[pid] = tv ? tvar_pair(*tv, tvals[lo], tvals[hi], te[lo], te[hi])
                                : pair_for(m, tvals[lo], tvals[hi]);
            }
    }

    double s = model_sigma(m);
    double diag = s * s + model_nugget(m);

    std::unordered_map<CacheKey, double, CacheKeyHash> cache;
    cache.reserve(1024);
    constexpr std::size_t kCacheCap = 1u << 21;

    Eigen::MatrixXd cov(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        cov(j, j) = diag;
        for (std::size_t i = j + 1; i < n; ++i) {
            double dx = points[i].x - points[j].x;
            double dy = points[i].y - points[j].y;
            double r2 = dx * dx + dy * dy;
            double v;
            if (tabulate) {
                int lo = tidx[i], hi = tidx[j];
                if (lo > hi) std::swap(lo, hi);
                std::uint32_t pid =
                    static_cast<std::uint32_t>(hi) * (hi + 1) / 2 + lo;
                std::uint64_t r2b;
                std::memcpy(&r2b, &r2, sizeof r2b);
                CacheKey key{pid, r2b};
                auto it = cache.find(key);
                if (it != cache.end()) {
                    v = it->second;
                } else {
                    v = eval_pair(table[pid], std::sqrt(r2));
                    if (cache.size() < kCacheCap) cache.emplace(key, v);
                }
            } else {
                v = eval_pair(pair_for(m, points[i].t, points[j].t), std::sqrt(r2));
            }
            cov(i, j) = cov(j, i) = v;
        }
    }
    return cov;
}

Eigen::MatrixXd build_cross_cov(const CovarianceModel& m,
                                const std::vector<SpaceTimePoint>& rows,
                                const std::vector<SpaceTimePoint>& cols) {
    Eigen::MatrixXd cc(rows.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            cc(i, j) = eval_pair(pair_for(m, rows[i].t, cols[j].t),
                                 spatial_dist(rows[i], cols[j]));
    return cc;
}

double cnd_check_matrix(const Eigen::MatrixXd& q, int trials,
                        std::uint64_t seed) {
    const int n = static_cast<int>(q.rows());
    if (n < 2 || q.cols() != n)
        throw DomainError("cnd_check: need a square matrix over >= 2 times");
    if (trials < 1) throw DomainError("cnd_check: trials must be >= 1");
    Rng rng(seed);
    Eigen::VectorXd x(n);
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < trials; ++k) {
        for (int i = 0; i < n; ++i) x[i] = rng.normal();
        x.array() -= x.mean();
        double nrm = x.norm();
        if (nrm < 1e-12) continue;
        x /= nrm;
        worst = std::max(worst, double(x.dot(q * x)));
    }
    return worst;
}

double cnd_check(const TvarModel& m, const std::vector<double>& times,
                 int trials, std::uint64_t seed) {
    if (times.size() < 2) throw DomainError("cnd_check: need >= 2 times");
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd q(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            q(i, j) = tvar_inv_zeta2(m, times[i], times[j]);
    return cnd_check_matrix(q, trials, seed);
}

nlohmann::json model_to_json(const CovarianceModel& m) {
    nlohmann::json j;
    j["variant"] = variant_name(m);
    if (const auto* tv = std::get_if<TvarModel>(&m)) {
        if (!tv->alpha_fn.is_log_poly() || !tv->nu_fn.is_log_poly())
            throw DataError("model_to_json: analytic time functions are not serializable");
        j["sigma"] = tv->sigma;
        j["a"] = tv->a;
        j["gamma"] = tv->gamma;
        j["beta"] = tv->beta;
        j["delta"] = tv->delta;
        j["alpha_log_poly"] = tv->alpha_fn.log_poly();
        j["nu_log_poly"] = tv->nu_fn.log_poly();
        j["alpha_bar"] = tv->alpha_bar;
        j["d"] = tv->d;
        j["nugget"] = tv->nugget;
    } else if (const auto* gn = std::get_if<GneitModel>(&m)) {
        j["sigma"] = gn->sigma;
        j["a"] = gn->a;
        j["gamma"] = gn->gamma;
        j["beta"] = gn->beta;
        j["delta"] = gn->delta;
        j["alpha"] = gn->alpha;
        j["nu"] = gn->nu;
        j["d"] = gn->d;
        j["nugget"] = gn->nugget;
    } else {
        const auto& sp = std::get<SepModel>(m);
        j["sigma"] = sp.sigma;
        j["a"] = sp.a;
        j["gamma"] = sp.gamma;
        j["delta"] = sp.delta;
        j["alpha"] = sp.alpha;
        j["nu"] = sp.nu;
        j["d"] = sp.d;
        j["nugget"] = sp.nugget;
    }
    return j;
}

namespace {

double jget(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw DataError(std::string("model_from_json: missing or non-numeric field '") +
                        key + "'");
    return j[key].get<double>();
}

double jget_or(const nlohmann::json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return jget(j, key);
}

std::vector<double> jpoly(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty())
        throw DataError(std::string("model_from_json: field '") + key +
                        "' must be a non-empty array");
    std::vector<double> c;
    for (const auto& v : j[key]) {
        if (!v.is_number())
            throw DataError(std::string("model_from_json: non-numeric entry in '") +
                            key + "'");
        c.push_back(v.get<double>());
    }
    return c;
}

} // namespace

CovarianceModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("variant") || !j["variant"].is_string())
        throw DataError("model_from_json: missing 'variant' tag");
    std::string v = j["variant"].get<std::string>();
    CovarianceModel m;
    if (v == "tvar") {
        TvarModel tv;
        tv.sigma = jget(j, "sigma");
        tv.a = jget(j, "a");
        tv.gamma = jget(j, "gamma");
        tv.beta = jget(j, "beta");
        tv.delta = jget(j, "delta");
        tv.alpha_fn = TimeFn(jpoly(j, "alpha_log_poly"));
        tv.nu_fn = TimeFn(jpoly(j, "nu_log_poly"));
        tv.alpha_bar = jget(j, "alpha_bar");
        tv.d = static_cast<int>(jget_or(j, "d", 2));
        tv.nugget = jget_or(j, "nugget", 0.0);
        m = tv;
    } else if (v == "gneit") {
        GneitModel gn;
        gn.sigma = jget(j, "sigma");
        gn.a = jget(j, "a");
        gn.gamma = jget(j, "gamma");
        gn.beta = jget(j, "beta");
        gn.delta = jget(j, "delta");
        gn.alpha = jget(j, "alpha");
        gn.nu = jget(j, "nu");
        gn.d = static_cast<int>(jget_or(j, "d", 2));
        gn.nugget = jget_or(j, "nugget", 0.0);
        m = gn;
    } else if (v == "sep") {
        SepModel sp;
        sp.sigma = jget(j, "sigma");
        sp.a = jget(j, "a");
        sp.gamma = jget(j, "gamma");
        sp.delta = jget(j, "delta");
        sp.alpha = jget(j, "alpha");
        sp.nu = jget(j, "nu");
        sp.d = static_cast<int>(jget_or(j, "d", 2));
        sp.nugget = jget_or(j, "nugget", 0.0);
        m = sp;
    } else {
        throw DataError("model_from_json: unknown variant '" + v + "'");
    }
    validate_model(m);
    return m;
}

} // namespace stgp
