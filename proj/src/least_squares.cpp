#include "biascav/least_squares.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/LevenbergMarquardt>

#include <Eigen/Cholesky>

#include "biascav/error.hpp"

namespace biascav {

namespace {

struct Functor : Eigen::DenseFunctor<double> {
    const LeastSquaresProblem& problem;

    Functor(const LeastSquaresProblem& p, Eigen::Index n_params)
        : Eigen::DenseFunctor<double>(static_cast<int>(n_params),
                                      static_cast<int>(p.residual_count)),
          problem(p) {}

    int operator()(const InputType& x, ValueType& fvec) const {
        Eigen::VectorXd r(values());
        problem.residuals(x, r);
        fvec = r;
        return 0;
    }

    int df(const InputType& x, JacobianType& fjac) const {
        Eigen::MatrixXd j(values(), inputs());
        problem.jacobian(x, j);
        fjac = j;
        return 0;
    }
};

}  // namespace

LeastSquaresResult least_squares(const LeastSquaresProblem& problem, const Eigen::VectorXd& start,
                                 const LeastSquaresOptions& options) {
    const Eigen::Index n = start.size();
    if (n == 0 || problem.residual_count <= n) {
        throw ValidationError("least squares needs more residuals than parameters");
    }
    if (!problem.residuals || !problem.jacobian) {
        throw ValidationError("least squares problem is missing its residual or Jacobian");
    }

    Functor f(problem, n);
    Eigen::LevenbergMarquardt<Functor> lm(f);
    lm.setXtol(options.xtol);
    lm.setFtol(options.ftol);
    lm.setMaxfev(options.max_evaluations);

    Eigen::VectorXd p = start;
    const auto status = lm.minimize(p);

    Eigen::VectorXd r(problem.residual_count);
    problem.residuals(p, r);
    const double rss = r.squaredNorm();
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
        throw ValidationError("least squares rejected its input parameters");
    }
    if (status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation ||
        !p.allFinite() || !std::isfinite(rss)) {
        throw ConvergenceError("least-squares fit did not converge", std::sqrt(rss),
                               static_cast<long>(lm.nfev()));
    }

    Eigen::MatrixXd jac(problem.residual_count, n);
    problem.jacobian(p, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const auto dof = static_cast<double>(problem.residual_count - n);
    LeastSquaresResult out;
    out.params = p;
    out.rss = rss;
    out.evaluations = static_cast<int>(lm.nfev());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jtj);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        out.covariance = ldlt.solve(Eigen::MatrixXd::Identity(n, n)) * (rss / dof);
    } else {
        out.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace biascav
