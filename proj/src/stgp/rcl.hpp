#ifndef STGP_RCL_HPP
#define STGP_RCL_HPP

#include <Eigen/Dense>
#include <vector>

#include "stgp/dataset.hpp"
#include "stgp/kernels.hpp"
#include "stgp/partition.hpp"

namespace stgp {

// Complete space x time grid index over a dataset; the RCL objective needs
// (locations subset x all times) and (all locations x times subset)
// sub-vectors to be extractable.
struct GridIndex {
    std::vector<std::pair<double, double>> locations; // sorted
    std::vector<double> times;                        // sorted
    Eigen::MatrixXi cell;                             // loc x time -> data index

    int n_locations() const { return static_cast<int>(locations.size()); }
    int n_times() const { return static_cast<int>(times.size()); }

    static GridIndex build(const std::vector<SpaceTimePoint>& points);
};

struct Block {
    std::vector<SpaceTimePoint> points;
    std::vector<int> data_index;
    bool spatial = true;
    int replicate = 0;
    int index = 0;
};

std::vector<Block> make_blocks(const GridIndex& grid, const PartitionPlan& plan);

Eigen::VectorXd block_values(const Block& b, const Eigen::VectorXd& values);

// Eq.-(10)-style objective: half the sum of block log-likelihoods over the
// spatial replicates plus half the sum over the temporal replicates. Blocks
// evaluate independently (optionally in parallel) and reduce in a fixed
// order, so the value is reproducible.
double rcl_loglik(const CovarianceModel& m, const Dataset& data,
                  const PartitionPlan& plan, int n_threads = 1);
double rcl_loglik_blocks(const CovarianceModel& m,
                         const std::vector<Block>& blocks,
                         const Eigen::VectorXd& values, int n_threads = 1);

// Precomputed evaluation structure for repeated objective calls with the
// same data and plan (the optimizer's hot path). Every block entry is an
// index into one global table of distinct (time pair, distance) pairs, so a
// covariance value is computed once per objective evaluation no matter how
// many blocks share it. Time-stationary variants key the table on |dt|.
class RclWorkspace {
public:
    RclWorkspace(const GridIndex& grid, const PartitionPlan& plan,
                 const Eigen::VectorXd& values, bool stationary_keys);

    double loglik(const CovarianceModel& m, int n_threads = 1) const;
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    struct BlockData {
        std::vector<int> eidx; // lower-triangle entry -> unique combo id
        Eigen::VectorXd x;
        bool spatial;
        int replicate, index;
    };
    std::vector<std::pair<double, double>> pair_times_; // representative (ti, tj)
    std::vector<int> combo_pair_;
    std::vector<double> combo_r_;
    std::vector<BlockData> blocks_data_;
    std::vector<Block> blocks_;
};

enum class ScoreMethod { FiniteDifference, Analytic };

// Gradient of the RCL objective in the natural parameters of the variant.
// The analytic path uses the trace/quadratic-form expansion with dSigma by
// central differences on the covariance builder; the finite-difference path
// differences the objective itself.
Eigen::VectorXd rcl_score(const CovarianceModel& m, const Dataset& data,
                          const PartitionPlan& plan, ScoreMethod method,
                          int n_threads = 1);

// Negative expected Hessian H(theta); refuses beyond desk scale.
Eigen::MatrixXd expected_hessian(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points,
                                 const PartitionPlan& plan);

// Score covariance J(theta) from the exact cross-block trace expansion.
Eigen::MatrixXd score_covariance(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points,
                                 const PartitionPlan& plan);

// Sandwich variance G^{-1} = H^{-1} J H^{-1} of the RCL estimator.
Eigen::MatrixXd godambe_variance(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points,
                                 const PartitionPlan& plan);

} // namespace stgp

#endif
