#include "factorml/ridge.hpp"

#include <cmath>

namespace factorml {

double ridge_loss(const SigmaSystem &sys, double lambda, const Eigen::VectorXd &theta) {
    double quad = theta.dot(sys.Q * theta) - 2.0 * theta.dot(sys.r) + sys.y_sq;
    return quad / (2.0 * sys.n) + 0.5 * lambda * theta.squaredNorm();
}

Eigen::VectorXd ridge_gradient(const SigmaSystem &sys, double lambda,
                               const Eigen::VectorXd &theta) {
    return (sys.Q * theta - sys.r) / sys.n + lambda * theta;
}

RidgeModel train_ridge_gd(const SigmaSystem &sys, double lambda, const GdParams &params,
                          const std::optional<RidgeModel> &warm_start) {
    if (sys.n < 0.5) throw Error(ErrorKind::EmptyTrainingSet, "the join result has no tuples");
    if (lambda < 0) throw Error(ErrorKind::Config, "lambda must be non-negative");

    const auto m = static_cast<Eigen::Index>(sys.keys.size());
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    if (warm_start) {
        // align by feature key; categories unseen before start at zero
        for (Eigen::Index i = 0; i < m; ++i)
            for (size_t j = 0; j < warm_start->keys.size(); ++j)
                if (warm_start->keys[j] == sys.keys[i]) {
                    theta(i) = warm_start->theta(static_cast<Eigen::Index>(j));
                    break;
                }
    }

    Eigen::VectorXd grad = ridge_gradient(sys, lambda, theta);

    int iter = 0;
    for (; iter < params.max_iters; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() < params.tol) break;
        // The loss is quadratic, so the change along -grad is exactly
        // dL(step) = step * (step/2 * g'Hg - g'g); evaluating this form
        // avoids the cancellation that evaluating L at two nearby points
        // suffers near the optimum. Each search starts from the initial
        // step and halves while the loss would not decrease.
        Eigen::VectorXd hg = sys.Q * grad / sys.n + lambda * grad;
        double gg = grad.squaredNorm();
        double ghg = grad.dot(hg);
        double step = params.initial_step;
        while (!(step * (0.5 * step * ghg - gg) < 0.0)) {
            step *= 0.5;
            if (step < 1e-18)
                throw Error(ErrorKind::Optimization,
                            "gradient descent diverged: no step reduction decreases the loss");
        }
        theta -= step * grad;
        grad = ridge_gradient(sys, lambda, theta);
    }

    RidgeModel model;
    model.keys = sys.keys;
    model.theta = std::move(theta);
    model.lambda = lambda;
    model.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    model.iterations = iter;
    model.spec = sys.spec;
    return model;
}

RidgeModel ridge_closed_form(const SigmaSystem &sys, double lambda) {
    if (sys.n < 0.5) throw Error(ErrorKind::EmptyTrainingSet, "the join result has no tuples");
    const auto m = static_cast<Eigen::Index>(sys.keys.size());
    Eigen::MatrixXd a = sys.Q + sys.n * lambda * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b = sys.r;

    // Gaussian elimination with partial pivoting
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> perm(m);
    for (Eigen::Index col = 0; col < m; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index row = col + 1; row < m; ++row)
            if (std::abs(a(row, col)) > std::abs(a(pivot, col))) pivot = row;
        if (std::abs(a(pivot, col)) <= 1e-10 * scale)
            throw Error(ErrorKind::Singular,
                        "normal equations are singular; use lambda > 0 (one-hot features plus "
                        "an intercept are perfectly collinear)");
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            std::swap(b(pivot), b(col));
        }
        for (Eigen::Index row = col + 1; row < m; ++row) {
            double f = a(row, col) / a(col, col);
            if (f == 0.0) continue;
            a.row(row).tail(m - col) -= f * a.row(col).tail(m - col);
            b(row) -= f * b(col);
        }
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    for (Eigen::Index row = m - 1; row >= 0; --row) {
        double acc = b(row);
        for (Eigen::Index col = row + 1; col < m; ++col) acc -= a(row, col) * theta(col);
        theta(row) = acc / a(row, row);
    }

    RidgeModel model;
    model.keys = sys.keys;
    model.theta = std::move(theta);
    model.lambda = lambda;
    model.gradient_norm = ridge_gradient(sys, lambda, model.theta).lpNorm<Eigen::Infinity>();
    model.iterations = 0;
    model.spec = sys.spec;
    return model;
}

CovariancePayload state_sigma(const MaterializedState<CovarianceRing> &state) {
    CovariancePayload root = state.root_payload();
    if (!state.query().intercept || detail::exact_zero(root)) return root;
    return times(root, lift_intercept(state.ring().spec));
}

RidgeModel maintain_ridge(
    MaterializedState<CovarianceRing> &state, const RidgeModel &model,
    const std::vector<UpdateEvent> &events, const GdParams &params,
    const std::function<void(const UpdateEvent &, const CovariancePayload &)> &on_event) {
    for (const auto &ev : events) {
        CovariancePayload delta = state.apply_update(ev);
        if (on_event) on_event(ev, delta);
    }
    SigmaSystem sys = build_sigma_system(state_sigma(state), state.ring().spec);
    return train_ridge_gd(sys, model.lambda, params, model);
}

}  // namespace factorml
