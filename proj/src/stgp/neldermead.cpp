#include "stgp/neldermead.hpp"
#include "stgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stgp {

NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, double step, double tol,
                     int max_iters) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw DomainError("nelder_mead: empty parameter vector");

    auto safe_f = [&](const Eigen::VectorXd& x) {
        double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<Eigen::VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 1; i <= n; ++i) xs[i][i - 1] += step;
    for (int i = 0; i <= n; ++i) fs[i] = safe_f(xs[i]);

    std::vector<int> order(n + 1);
    NmResult res;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fs[a] < fs[b]; });
        int lo = order[0], hi = order[n], hi2 = order[n - 1];
        res.trace.push_back(fs[lo]);

        double spread = std::fabs(fs[hi] - fs[lo]);
        if (spread <= tol * (std::fabs(fs[lo]) + tol)) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != hi) centroid += xs[i];
        centroid /= n;

        Eigen::VectorXd xr = centroid + (centroid - xs[hi]); // reflection
        double fr = safe_f(xr);
        if (fr < fs[lo]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[hi]);
            double fe = safe_f(xe);
            if (fe < fr) {
                xs[hi] = xe;
                fs[hi] = fe;
            } else {
                xs[hi] = xr;
                fs[hi] = fr;
            }
        } else if (fr < fs[hi2]) {
            xs[hi] = xr;
            fs[hi] = fr;
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (xs[hi] - centroid);
            double fc = safe_f(xc);
            if (fc < fs[hi]) {
                xs[hi] = xc;
                fs[hi] = fc;
            } else {
                for (int i = 0; i <= n; ++i) { // shrink toward the best
                    if (i == lo) continue;
                    xs[i] = xs[lo] + 0.5 * (xs[i] - xs[lo]);
                    fs[i] = safe_f(xs[i]);
                }
            }
        }
    }
    int best = static_cast<int>(
        std::min_element(fs.begin(), fs.end()) - fs.begin());
    res.x = xs[best];
    res.fx = fs[best];
    res.iterations = iter;
    return res;
}

} // namespace stgp
