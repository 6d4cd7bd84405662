#include <chrono>
#include <cmath>
#include <numbers>

#include "eivlpe/estimators.hpp"
#include "iterate.hpp"

namespace eivlpe {

Eigen::VectorXd total_error(const EivProblem& problem, const Eigen::VectorXd& w)
{
    const double q = w.squaredNorm() + 1.0 / (problem.eps0 * problem.eps0);
    return (problem.y - problem.X * w) / std::sqrt(q);
}

namespace {

struct MteeEval {
    double value = 0.0;
    Eigen::VectorXd grad;
};

// Information potential (1/n^2) sum_ij G_{s*sqrt2}(e_j - e_i) and, if asked, its exact gradient.
MteeEval mtee_eval(const EivProblem& problem, const Eigen::VectorXd& w, double sigma, bool want_grad)
{
    if (!(sigma > 0.0))
        throw InvalidInput("kernel_sigma must be positive");
    const Eigen::Index n = problem.rows();
    const double q = w.squaredNorm() + 1.0 / (problem.eps0 * problem.eps0);
    const Eigen::VectorXd e = (problem.y - problem.X * w) / std::sqrt(q);
    const double inv4s2 = 1.0 / (4.0 * sigma * sigma);
    const double g0 = 1.0 / (2.0 * sigma * std::sqrt(std::numbers::pi));

    double ksum = 0.0;   // sum_{i<j} K_ij
    double d2sum = 0.0;  // sum_{i<j} K_ij d_ij^2
    Eigen::VectorXd c = Eigen::VectorXd::Zero(want_grad ? n : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ei = e(i);
        double ci = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = e(j) - ei;
            const double k = std::exp(-d * d * inv4s2);
            ksum += k;
            if (want_grad) {
                const double kd = k * d;
                d2sum += kd * d;
                ci -= kd;
                c(j) += kd;
            }
        }
        if (want_grad)
            c(i) += ci;
    }
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    MteeEval out;
    out.value = g0 * (static_cast<double>(n) + 2.0 * ksum) / nn;
    if (want_grad) {
        // d/dw of G(e_j - e_i) with de_i/dw = -x_i/sqrt(q) - e_i w/q; pairs counted twice.
        const double scale = g0 / (2.0 * sigma * sigma * nn);
        out.grad = scale * 2.0 * (d2sum / q * w + problem.X.transpose() * c / std::sqrt(q));
    }
    return out;
}

}  // namespace

double mtee_objective(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma)
{
    return mtee_eval(problem, w, kernel_sigma, false).value;
}

Eigen::VectorXd mtee_gradient(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma)
{
    return mtee_eval(problem, w, kernel_sigma, true).grad;
}

EstimateResult mtee_estimate(const EivProblem& problem, const EstimatorConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    problem.validate();
    config.validate();
    if (!config.w0)
        throw InvalidInput("MTEE needs an initial w0");
    EstimateResult res;
    res.method = Method::MTEE;
    detail::iterate(res, *config.w0, config, [&](const Eigen::VectorXd& w) {
        MteeEval ev = mtee_eval(problem, w, config.kernel_sigma, true);
        return detail::StepEval{ev.value, w + config.step * ev.grad};
    });
    res.elapsed = detail::seconds_since(t0);
    return res;
}

}  // namespace eivlpe
