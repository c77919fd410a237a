#pragma once

#include <functional>

#include <Eigen/Core>

namespace biascav {

/// Residual vector r(p) and its Jacobian dr/dp for a nonlinear least-squares fit.
struct LeastSquaresProblem {
    Eigen::Index residual_count = 0;
    std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)> residuals;
    std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& jac)> jacobian;
};

struct LeastSquaresOptions {
    double xtol = 1e-12;
    double ftol = 1e-12;
    int max_evaluations = 2000;
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  ///< (J^T J)^-1 * rss / (N - p)
    double rss = 0.0;
    int evaluations = 0;
};

/// Levenberg-Marquardt. Throws ConvergenceError when the evaluation budget runs out or
/// the result is not finite.
[[nodiscard]] LeastSquaresResult least_squares(const LeastSquaresProblem& problem,
                                               const Eigen::VectorXd& start,
                                               const LeastSquaresOptions& options = {});

}  // namespace biascav
