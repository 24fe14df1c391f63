#pragma once

#include <Eigen/Dense>
#include <vector>

#include "factorml/ring.hpp"

namespace factorml {

/// The normal-equation ingredients of least-squares training, extracted
/// from one covariance payload: N = count, Q(i,j) = sum(x_i*x_j),
/// r(i) = sum(x_i*y), y_sq = sum(y^2). Feature keys follow the lift-spec
/// order with categorical features expanded to their observed categories.
struct SigmaSystem {
    double n = 0;
    std::vector<FeatureKey> keys;
    Eigen::MatrixXd Q;
    Eigen::VectorXd r;
    double y_sq = 0;
    LiftSpec spec;
};

/// Missing q entries read as zero (sparse semantics). Raises an
/// empty-training-set error when the join has no tuples, and a type error
/// when the response is not continuous.
SigmaSystem build_sigma_system(const CovariancePayload &payload, const LiftSpec &spec);

}  // namespace factorml
