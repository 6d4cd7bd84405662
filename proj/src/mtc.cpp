#include <chrono>
#include <cmath>

#include "eivlpe/estimators.hpp"
#include "iterate.hpp"

namespace eivlpe {

namespace {

struct MtcEval {
    double value = 0.0;
    Eigen::VectorXd grad;
};

MtcEval mtc_eval(const EivProblem& problem, const Eigen::VectorXd& w, double sigma)
{
    if (!(sigma > 0.0))
        throw InvalidInput("kernel_sigma must be positive");
    const double wbar2 = 1.0 / (problem.eps0 * problem.eps0) + w.squaredNorm();
    const Eigen::VectorXd e = problem.y - problem.X * w;
    const double n = static_cast<double>(problem.rows());
    const double s2 = sigma * sigma;
    const Eigen::ArrayXd k = (-e.array().square() / (2.0 * s2 * wbar2)).exp();
    MtcEval out;
    out.value = k.sum() / n;
    // (1/(n s^2)) sum_i k_i (|wbar|^2 e_i x_i + e_i^2 w) / |wbar|^4
    const Eigen::VectorXd ke = (k * e.array()).matrix();
    out.grad = (wbar2 * (problem.X.transpose() * ke) + (k * e.array().square()).sum() * w) /
               (n * s2 * wbar2 * wbar2);
    return out;
}

void check_start(const EstimatorConfig& config, Eigen::Index p)
{
    if (config.w0 && config.w0->size() != p)
        throw InvalidInput("w0 has the wrong length");
}

}  // namespace

double mtc_objective(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma)
{
    return mtc_eval(problem, w, kernel_sigma).value;
}

Eigen::VectorXd mtc_gradient(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma)
{
    return mtc_eval(problem, w, kernel_sigma).grad;
}

EstimateResult mtc_estimate(const EivProblem& problem, const EstimatorConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    problem.validate();
    config.validate();
    check_start(config, problem.cols());
    EstimateResult res;
    res.method = Method::MTC;
    const Eigen::VectorXd w0 = config.w0 ? *config.w0 : Eigen::VectorXd::Zero(problem.cols());
    detail::iterate(res, w0, config, [&](const Eigen::VectorXd& w) {
        MtcEval ev = mtc_eval(problem, w, config.kernel_sigma);
        return detail::StepEval{ev.value, w + config.step * ev.grad};
    });
    res.elapsed = detail::seconds_since(t0);
    return res;
}

EstimateResult cmtc_estimate(const EivProblem& problem, const EstimatorConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    problem.validate();
    config.validate();
    check_start(config, problem.cols());
    if (!problem.constraint)
        throw InvalidInput("CMTC needs an equality constraint");
    const Eigen::MatrixXd& C = problem.constraint->C;
    const Eigen::VectorXd& f = problem.constraint->f;
    const Eigen::MatrixXd CtC = C.transpose() * C;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(CtC);
    if (!lu.isInvertible())
        throw NumericalError("CMTC: C^T C is singular");
    const double eta = config.step;

    EstimateResult res;
    res.method = Method::CMTC;
    const Eigen::VectorXd w0 = config.w0 ? *config.w0 : Eigen::VectorXd::Zero(problem.cols());
    detail::iterate(res, w0, config, [&](const Eigen::VectorXd& w) {
        MtcEval ev = mtc_eval(problem, w, config.kernel_sigma);
        const Eigen::VectorXd step = eta * ev.grad;
        const Eigen::VectorXd lambda = lu.solve(f - C.transpose() * w - C.transpose() * step) / eta;
        return detail::StepEval{ev.value, w + step + eta * (C * lambda)};
    });
    res.elapsed = detail::seconds_since(t0);
    return res;
}

}  // namespace eivlpe
