#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "factorml/ivm.hpp"
#include "factorml/sigma_system.hpp"

namespace factorml {

struct RidgeModel {
    std::vector<FeatureKey> keys;
    Eigen::VectorXd theta;
    double lambda = 0;
    double gradient_norm = 0;
    int iterations = 0;
    LiftSpec spec;
};

struct GdParams {
    double initial_step = 1.0;
    double tol = 1e-8;  // stop when the gradient infinity-norm drops below
    int max_iters = 50'000;
};

/// L(theta) and its gradient, both read off the sigma system alone.
double ridge_loss(const SigmaSystem &sys, double lambda, const Eigen::VectorXd &theta);
Eigen::VectorXd ridge_gradient(const SigmaSystem &sys, double lambda,
                               const Eigen::VectorXd &theta);

/// Gradient descent on L(theta) = (1/2N) sum (x.theta - y)^2
///                              + (lambda/2) |theta|^2
/// driven entirely by the sigma system:
///   grad = (Q theta - r)/N + lambda theta.
/// Starts from zero (or the warm start), halves the step on loss increase,
/// stops at tol or max_iters. Raises an optimization error when no step
/// reduction decreases the loss.
RidgeModel train_ridge_gd(const SigmaSystem &sys, double lambda, const GdParams &params = {},
                          const std::optional<RidgeModel> &warm_start = std::nullopt);

/// Closed-form oracle: solves (Q + N lambda I) theta = r by Gaussian
/// elimination with partial pivoting. Raises a singularity error (advising
/// lambda > 0) when a pivot vanishes.
RidgeModel ridge_closed_form(const SigmaSystem &sys, double lambda);

/// Applies the events to the maintained covariance state, then retrains
/// warm-started from the previous parameters. New categories appearing in
/// the updated data start at zero. The optional callback sees each event's
/// root delta (for maintenance logging).
RidgeModel maintain_ridge(
    MaterializedState<CovarianceRing> &state, const RidgeModel &model,
    const std::vector<UpdateEvent> &events, const GdParams &params = {},
    const std::function<void(const UpdateEvent &, const CovariancePayload &)> &on_event = {});

/// Sigma payload of a maintained covariance state, with the query's
/// intercept folded in.
CovariancePayload state_sigma(const MaterializedState<CovarianceRing> &state);

}  // namespace factorml
