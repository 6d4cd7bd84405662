#include <cmath>
#include <numbers>

#include "eivlpe/estimators.hpp"

namespace eivlpe {

std::string method_name(Method m)
{
    switch (m) {
    case Method::TLS: return "TLS";
    case Method::MTEE: return "MTEE";
    case Method::MTC: return "MTC";
    case Method::CMTC: return "CMTC";
    case Method::EGLE: return "EGLE";
    }
    return "?";
}

Method parse_method(const std::string& s)
{
    for (Method m : {Method::TLS, Method::MTEE, Method::MTC, Method::CMTC, Method::EGLE}) {
        std::string name = method_name(m);
        if (s.size() == name.size() &&
            std::equal(s.begin(), s.end(), name.begin(), [](char a, char b) { return std::toupper(a) == b; }))
            return m;
    }
    throw InvalidInput("unknown estimator method '" + s + "'");
}

void EstimatorConfig::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step))
        throw InvalidInput("step must be positive");
    if (!(kernel_sigma > 0.0) || !std::isfinite(kernel_sigma))
        throw InvalidInput("kernel_sigma must be positive");
    if (max_iters < 1)
        throw InvalidInput("max_iters must be >= 1");
    if (!(tol > 0.0))
        throw InvalidInput("tol must be positive");
    if (egle_m_max < 1)
        throw InvalidInput("egle_m_max must be >= 1");
    if (!(egle_inner_tol > 0.0) || !(egle_outer_tol > 0.0) || egle_inner_max < 1)
        throw InvalidInput("EGLE tolerances must be positive");
    if (w0 && !w0->allFinite())
        throw InvalidInput("w0 must be finite");
}

EstimatorConfig default_config(Method m)
{
    EstimatorConfig c;
    c.method = m;
    switch (m) {
    case Method::TLS:
        c.max_iters = 1;
        break;
    case Method::MTEE:
        c.step = 2.0;
        c.kernel_sigma = 0.05;
        c.max_iters = 5000;
        break;
    case Method::MTC:
    case Method::CMTC:
        c.step = 0.1;
        c.kernel_sigma = 0.05;
        c.max_iters = 50000;
        break;
    case Method::EGLE:
        c.max_iters = 100;
        break;
    }
    return c;
}

double curvature_step(const EivProblem& problem, const Eigen::VectorXd& w, Method method, double kernel_sigma)
{
    problem.validate();
    if (!(kernel_sigma > 0.0))
        throw InvalidInput("kernel_sigma must be positive");
    if (method != Method::MTEE && method != Method::MTC && method != Method::CMTC)
        throw InvalidInput("curvature_step applies to MTEE, MTC and CMTC");
    const double n = static_cast<double>(problem.rows());
    const double q = w.squaredNorm() + 1.0 / (problem.eps0 * problem.eps0);
    const double s2 = kernel_sigma * kernel_sigma;
    Eigen::MatrixXd X = problem.X;
    double scale = 1.0;
    if (method == Method::MTEE) {
        X.rowwise() -= X.colwise().mean();
        scale = 1.0 / (2.0 * kernel_sigma * std::sqrt(std::numbers::pi));
    }
    const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(X.transpose() * X / n,
                                                                       Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    if (!(lam > 0.0))
        throw NumericalError("curvature_step: X has no spread");
    return s2 * q / (scale * lam);
}

EstimateResult run_estimator(const EivProblem& problem, const EstimatorConfig& config)
{
    EstimatorConfig cfg = config;
    if (!cfg.w0 && cfg.method != Method::TLS) {
        if (cfg.start == StartKind::Zero)
            cfg.w0 = Eigen::VectorXd::Zero(problem.cols());
        else
            cfg.w0 = tls_estimate(problem).w_hat;
    }
    if (cfg.auto_step && cfg.method != Method::TLS && cfg.method != Method::EGLE)
        cfg.step = curvature_step(problem, *cfg.w0, cfg.method, cfg.kernel_sigma);
    switch (cfg.method) {
    case Method::TLS: return tls_estimate(problem);
    case Method::MTEE: return mtee_estimate(problem, cfg);
    case Method::MTC: return mtc_estimate(problem, cfg);
    case Method::CMTC: return cmtc_estimate(problem, cfg);
    case Method::EGLE: return egle_estimate(problem, cfg);
    }
    throw InvalidInput("unknown method");
}

}  // namespace eivlpe
