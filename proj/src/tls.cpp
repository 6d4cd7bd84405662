#include <chrono>
#include <cmath>

#include "eivlpe/estimators.hpp"
#include "iterate.hpp"

namespace eivlpe {

EstimateResult tls_estimate(const EivProblem& problem)
{
    const auto t0 = std::chrono::steady_clock::now();
    problem.validate();
    const Eigen::Index n = problem.rows(), p = problem.cols();
    if (n < p + 1)
        throw InvalidInput("TLS needs n >= p + 1");
    Eigen::MatrixXd A(n, p + 1);
    A << problem.X, problem.y;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd v = svd.matrixV().col(p);
    if (std::abs(v(p)) < 1e-14)
        throw NumericalError("no TLS solution: last right singular vector has zero y-component");

    EstimateResult res;
    res.method = Method::TLS;
    res.w_hat = -v.head(p) / v(p);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s(p - 1) <= 1e-12 * s(0))
        res.note = "rank deficient [X y]: solution not unique";
    else if (s(p - 1) - s(p) <= 1e-12 * s(0))
        res.note = "repeated smallest singular value: solution not unique";
    res.iterations = 1;
    res.converged = true;
    // Trace objective: orthogonal residual sum |y - X w|^2 / (1 + |w|^2).
    auto cost = [&](const Eigen::VectorXd& w) { return (problem.y - problem.X * w).squaredNorm() / (1.0 + w.squaredNorm()); };
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
    res.trace.push_back({zero, cost(zero)});
    res.trace.push_back({res.w_hat, cost(res.w_hat)});
    res.elapsed = detail::seconds_since(t0);
    return res;
}

}  // namespace eivlpe
