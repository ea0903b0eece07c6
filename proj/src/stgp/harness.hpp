#ifndef STGP_HARNESS_HPP
#define STGP_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "stgp/fit.hpp"
#include "stgp/scoring.hpp"

namespace stgp {

// True data-generating model of simulation case 1..4 (sigma = 1, a = 10,
// gamma = 0.6, beta = 0.8, delta = 0.1 throughout; alpha_bar is the mean of
// alpha_s over `times`). Case arguments are read in scaled time; the
// raw_index_time flag keeps the printed argument t/20 of case 1 instead.
TvarModel case_truth(int case_id, const std::vector<double>& times,
                     bool raw_index_time = false);

struct SplitSpec {
    double interpolation_fraction = 0.20;
    int forecast_horizon = 2;
    std::uint64_t seed = 0;
};

// Disjoint exhaustive split: V_f is every location at the trailing horizon
// times; V_i is the sampled location fraction at the remaining times.
struct Split {
    std::vector<int> training;
    std::vector<int> v_i;
    std::vector<int> v_f;
};

Split split_validation(const std::vector<SpaceTimePoint>& points,
                       const SplitSpec& spec);

struct ScaleConfig {
    int ns_x = 15, ns_y = 15, nt = 11;
    int n_runs = 20;
    int m_s = 10, r_s = 2;
    int m_t = 0, r_t = 1; // m_t = 0: one block per training time point
    SplitSpec split;
    OptimizerConfig optimizer;
    int run_workers = 2;
    bool raw_index_time = false;
};

struct RunRecord {
    bool ok = false;
    bool converged = false;
    std::string error;
    std::map<std::string, double> params;
    ScoreReport vi, vf;
    std::vector<double> alpha_curve, nu_curve; // Tvar only, on grid times
};

struct CaseModelResult {
    std::string model; // tvar | gneit | sep
    std::vector<RunRecord> runs;
    int n_failed = 0;
};

struct CaseResult {
    int case_id = 0;
    std::vector<double> times;
    std::vector<double> truth_alpha, truth_nu;
    std::vector<CaseModelResult> models;
};

struct SimStudyReport {
    ScaleConfig config;
    std::uint64_t seed = 0;
    std::vector<CaseResult> cases;
};

SimStudyReport run_sim_study(const std::vector<int>& cases,
                             const ScaleConfig& cfg, std::uint64_t seed);

nlohmann::json sim_report_to_json(const SimStudyReport& rep);
// report.json plus params.csv / metrics.csv / curves.csv / coverage.csv
void write_sim_report(const std::string& out_dir, const SimStudyReport& rep);

// mean and sample standard deviation
std::pair<double, double> mean_sd(const std::vector<double>& v);

} // namespace stgp

#endif
