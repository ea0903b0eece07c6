#include "stgp/specialfn.hpp"
#include "stgp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace stgp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLn2 = 0.69314718055994530942;

// Lanczos approximation, g = 7, 9 terms.
const double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

double log_gamma_lanczos(double x) {
    // valid for x >= 0.5
    double a = kLanczos[0];
    for (int k = 1; k < 9; ++k) a += kLanczos[k] / (x - 1.0 + k);
    double t = x + 6.5; // x + g - 0.5
    return 0.5 * std::log(2.0 * kPi) + (x - 0.5) * std::log(t) - t + std::log(a);
}

double chebev(const double* c, int m, double x) {
    // Clenshaw recurrence on [-1, 1]
    double d = 0.0, dd = 0.0;
    for (int j = m - 1; j >= 1; j--) {
        double sv = d;
        d = 2.0 * x * d - dd + c[j];
        dd = sv;
    }
    return x * d - dd + 0.5 * c[0];
}

// Temme's gamma ratios:
//   gam1 = [1/Gamma(1-mu) - 1/Gamma(1+mu)] / (2 mu)
//   gam2 = [1/Gamma(1-mu) + 1/Gamma(1+mu)] / 2
// Chebyshev fits in 8 mu^2 - 1 for |mu| <= 0.5 (SLATEC-derived data).
void temme_gamma(double xmu, double& gam1, double& gam2, double& gampl,
                 double& gammi) {
    static const double c1[7] = {-1.142022680371168e0, 6.5165112670737e-3,
                                 3.087090173086e-4,    -3.4706269649e-6,
                                 6.9437664e-9,         3.67795e-11,
                                 -1.356e-13};
    static const double c2[8] = {1.843740587300905e0,  -7.68528408447867e-2,
                                 1.2719271366546e-3,   -4.9717367042e-6,
                                 -3.31261198e-8,       2.423096e-10,
                                 -1.702e-13,           -1.49e-15};
    double xx = 8.0 * xmu * xmu - 1.0;
    gam1 = chebev(c1, 7, xx);
    gam2 = chebev(c2, 8, xx);
    gampl = gam2 - xmu * gam1; // 1/Gamma(1+mu)
    gammi = gam2 + xmu * gam1; // 1/Gamma(1-mu)
}

// K_nu(x) = mant * 2^ex2 * (scaled ? e^{-x} : 1)
struct KParts {
    double mant;
    long ex2;
    bool scaled;
};

KParts bessel_k_core(double nu, double x) {
    if (!std::isfinite(x) || !std::isfinite(nu))
        throw DomainError("bessel_k: non-finite argument");
    if (x <= 0.0)
        throw DomainError("bessel_k: requires x > 0, got x=" + std::to_string(x));
    nu = std::fabs(nu); // K_{-nu} = K_nu

    const double eps = std::numeric_limits<double>::epsilon();
    const int max_iter = 20000;

    int nl = static_cast<int>(nu + 0.5);
    double xmu = nu - nl; // in [-1/2, 1/2]
    double xmu2 = xmu * xmu;

    double rkmu, rk1; // K_mu, K_{mu+1} (times e^x on the large-x branch)
    bool scaled;

    if (x <= 2.0) {
        // Temme's series (Temme 1975, J. Comput. Phys. 19, 324)
        scaled = false;
        double x2 = 0.5 * x;
        double pimu = kPi * xmu;
        double fact = (std::fabs(pimu) < eps) ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = xmu * d;
        double fact2 = (std::fabs(e) < eps) ? 1.0 : std::sinh(e) / e;
        double gam1, gam2, gampl, gammi;
        temme_gamma(xmu, gam1, gam2, gampl, gammi);
        double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl;
        double q = 0.5 / (e * gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= max_iter; i++) {
            ff = (i * ff + p + q) / (i * i - xmu2);
            c *= d / i;
            p /= (i - xmu);
            q /= (i + xmu);
            double del = c * ff;
            sum += del;
            double del1 = c * (p - i * ff);
            sum1 += del1;
            if (std::fabs(del) < std::fabs(sum) * eps) break;
        }
        if (i > max_iter)
            throw NumericalError("bessel_k: Temme series did not converge");
        rkmu = sum;
        rk1 = sum1 * (2.0 / x);
    } else {
        // Steed's continued fraction CF2 (Thompson & Barnett 1987),
        // evaluates e^x K_mu(x) and e^x K_{mu+1}(x).
        scaled = true;
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d, delh = d;
        double q1 = 0.0, q2 = 1.0;
        double a1 = 0.25 - xmu2;
        double q = a1, c = a1, a = -a1;
        double s = 1.0 + q * delh;
        int i = 2;
        for (; i <= max_iter; i++) {
            a -= 2 * (i - 1);
            c = -a * c / i;
            double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            double dels = q * delh;
            s += dels;
            if (std::fabs(dels / s) < eps) break;
        }
        if (i > max_iter)
            throw NumericalError("bessel_k: continued fraction did not converge");
        h = a1 * h;
        rkmu = std::sqrt(kPi / (2.0 * x)) / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) / x;
    }

    // K_{mu+j+1} = K_{mu+j-1} + 2(mu+j)/x K_{mu+j}; renormalize so large
    // orders at small x do not overflow.
    long ex2 = 0;
    double xi2 = 2.0 / x;
    for (int j = 1; j <= nl; j++) {
        double rktemp = (xmu + j) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = rktemp;
        if (rk1 > 1e250) {
            rk1 = std::ldexp(rk1, -600);
            rkmu = std::ldexp(rkmu, -600);
            ex2 += 600;
        }
    }
    return {rkmu, ex2, scaled};
}

} // namespace

double log_gamma(double x) {
    if (!std::isfinite(x) || x <= 0.0)
        throw DomainError("log_gamma: requires finite x > 0, got x=" +
                          std::to_string(x));
    if (x >= 0.5) return log_gamma_lanczos(x);
    // reflection: ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1-x)
    return std::log(kPi / std::sin(kPi * x)) - log_gamma_lanczos(1.0 - x);
}

double bessel_k(double nu, double x) {
    KParts kp = bessel_k_core(nu, x);
    if (kp.ex2 != 0)
        return std::exp(std::log(kp.mant) + kp.ex2 * kLn2 -
                        (kp.scaled ? x : 0.0));
    return kp.scaled ? kp.mant * std::exp(-x) : kp.mant;
}

double log_bessel_k(double nu, double x) {
    KParts kp = bessel_k_core(nu, x);
    double lk = std::log(kp.mant) + kp.ex2 * kLn2;
    if (kp.scaled) lk -= x;
    return lk;
}

double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double norm_quantile(double p) {
    // Wichura's algorithm AS 241 (PPND16), |error| < 1e-15
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("norm_quantile: requires p in (0,1), got p=" +
                          std::to_string(p));
    static const double a[8] = {
        3.3871328727963666080e0, 1.3314166789178437745e2,
        1.9715909503065514427e3, 1.3731693765509461125e4,
        4.5921953931549871457e4, 6.7265770927008700853e4,
        3.3430575583588128105e4, 2.5090809287301226727e3};
    static const double b[8] = {
        1.0,                     4.2313330701600911252e1,
        6.8718700749205790830e2, 5.3941960214247511077e3,
        2.1213794301586595867e4, 3.9307895800092710610e4,
        2.8729085735721942674e4, 5.2264952788528545610e3};
    static const double c[8] = {
        1.42343711074968357734e0,  4.63033784615654529590e0,
        5.76949722146069140550e0,  3.64784832476320460504e0,
        1.27045825245236838258e0,  2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static const double d[8] = {
        1.0,                       2.05319162663775882187e0,
        1.67638483018380384940e0,  6.89767334985100004550e-1,
        1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static const double e[8] = {
        6.65790464350110377720e0,  5.46378491116411436990e0,
        1.78482653991729133580e0,  2.96560571828504891230e-1,
        2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static const double f[8] = {
        1.0,                       5.99832206555887937690e-1,
        1.36929880922735805310e-1, 1.48753612908506148525e-2,
        7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};
    auto poly = [](const double* cf, double r) {
        double s = cf[7];
        for (int k = 6; k >= 0; k--) s = s * r + cf[k];
        return s;
    };
    double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q * poly(a, r) / poly(b, r);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = poly(c, r) / poly(d, r);
    } else {
        r -= 5.0;
        val = poly(e, r) / poly(f, r);
    }
    return (q < 0.0) ? -val : val;
}

} // namespace stgp
