#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <functional>
#include <utility>

namespace polaron {

struct LeastSquaresResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    double rms = 0.0;
    int status = 0;
    int evaluations = 0;
};

/// Levenberg-Marquardt (MINPACK port shipped with Eigen) with a
/// forward-difference Jacobian.
inline LeastSquaresResult least_squares(std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> residual, Eigen::VectorXd x0,
                                        int n_residuals, int max_evaluations = 4000) {
    struct Functor {
        using Scalar = double;
        enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
        using InputType = Eigen::VectorXd;
        using ValueType = Eigen::VectorXd;
        using JacobianType = Eigen::MatrixXd;

        std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> f;
        int n_in;
        int n_out;

        int inputs() const { return n_in; }
        int values() const { return n_out; }
        int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
            f(x, fvec);
            return 0;
        }
    };

    Functor functor{std::move(residual), static_cast<int>(x0.size()), n_residuals};
    Eigen::NumericalDiff<Functor> diff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor>, double> lm(diff);
    lm.parameters.maxfev = max_evaluations;
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    LeastSquaresResult out;
    out.status = static_cast<int>(lm.minimize(x0));
    out.evaluations = static_cast<int>(lm.nfev);
    out.params = x0;
    out.residuals.resize(n_residuals);
    functor(x0, out.residuals);
    out.rms = n_residuals > 0 ? std::sqrt(out.residuals.squaredNorm() / n_residuals) : 0.0;
    return out;
}

}  // namespace polaron
