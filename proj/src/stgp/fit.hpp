#ifndef STGP_FIT_HPP
#define STGP_FIT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "stgp/dataset.hpp"
#include "stgp/kernels.hpp"
#include "stgp/partition.hpp"
#include "stgp/rcl.hpp"

namespace stgp {

// What to fit: variant, Tvar polynomial orders, fixed parameters (by layout
// name, e.g. a = 10), optional user initial values, dimension and fixed
// nugget (the nugget is configured, not estimated).
struct ModelSpec {
    std::string variant = "gneit"; // tvar | gneit | sep
    int alpha_poly_order = 0;
    int nu_poly_order = 0;
    std::map<std::string, double> fixed;
    std::map<std::string, double> initial;
    int d = 2;
    double nugget = 0.0;
};

struct OptimizerConfig {
    int max_iters = 2000;
    double tol = 1e-6;
    int multistart = 1;
    std::uint64_t seed = 0;
    int n_threads = 2;
    double init_step = 0.4; // simplex edge in unconstrained space
};

struct FitResult {
    CovarianceModel model;
    Eigen::VectorXd theta_unconstrained; // free coordinates at the optimum
    std::vector<std::string> free_names;
    double objective_value = 0.0; // RCL log-likelihood at the optimum
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace; // objective per simplex iteration
    double alpha_bar_used = 0.0;
    std::vector<std::string> warnings;
    std::uint64_t plan_seed = 0;
    int m_s = 1, r_s = 1, m_t = 1, r_t = 1;
};

// Per-time-slice Matern estimates (the exploratory warm start).
struct SliceEstimate {
    double t = 0.0;
    double alpha = 1.0;
    double nu = 0.5;
    double sigma2 = 1.0;
};

std::vector<SliceEstimate> fit_time_slices(const GridIndex& grid,
                                           const Eigen::VectorXd& values,
                                           int max_locations = 120);

FitResult fit(const Dataset& data, const ModelSpec& spec,
              const PartitionPlan& plan, const OptimizerConfig& cfg = {});

nlohmann::json fit_result_to_json(const FitResult& r,
                                  const OptimizerConfig& cfg);

} // namespace stgp

#endif
