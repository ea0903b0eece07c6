#ifndef STGP_TRANSFORM_HPP
#define STGP_TRANSFORM_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stgp/kernels.hpp"

namespace stgp {

// Unconstrained reparameterization for the optimizer: log for sigma, a;
// log(delta + 1e-8) for delta; logit with a 1e-9 boundary clamp for gamma
// and beta; identity for polynomial coefficients.
enum class Xf { Log, Logit, LogEps, Identity };

struct ParamDef {
    std::string name;
    Xf xf;
};

// canonical natural-parameter layout of a model variant
std::vector<ParamDef> layout_for(const CovarianceModel& m);

Eigen::VectorXd pack_natural(const CovarianceModel& m);

// Rebuild a model of the same shape as `proto` from a natural vector; for
// Tvar, alpha_bar is recomputed from the training times (its definition
// depends on theta).
CovarianceModel unpack_natural(const CovarianceModel& proto,
                               const Eigen::VectorXd& theta,
                               const std::vector<double>* training_times);

// The optional offset shifts every unconstrained coordinate; optimizing in
// shifted coordinates must land on the same natural optimum.
Eigen::VectorXd transform_vec(const Eigen::VectorXd& natural,
                              const std::vector<ParamDef>& layout,
                              double offset = 0.0);
Eigen::VectorXd untransform_vec(const Eigen::VectorXd& unconstrained,
                                const std::vector<ParamDef>& layout,
                                double offset = 0.0);

} // namespace stgp

#endif
