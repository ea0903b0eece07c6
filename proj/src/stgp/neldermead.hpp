#ifndef STGP_NELDERMEAD_HPP
#define STGP_NELDERMEAD_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace stgp {

struct NmResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace; // best objective per iteration
};

// Derivative-free simplex minimizer. Convergence: the relative spread of the
// simplex objective values falls below tol.
NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, double step, double tol,
                     int max_iters);

} // namespace stgp

#endif
