#include <doctest.h>

#include "eivlpe/estimators.hpp"
#include "eivlpe/scenario.hpp"
#include "oracles.hpp"

using namespace eivlpe;

TEST_CASE("MTC objective and gradient")
{
    std::mt19937_64 rng(12);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.3, 2.0);
    for (int k = 0; k < 30; ++k) {
        const int n = 3 + k % 18, p = 1 + k % 4;
        EivProblem prob;
        prob.X.resize(n, p);
        prob.y.resize(n);
        for (int i = 0; i < n; ++i) {
            prob.y(i) = N(rng);
            for (int j = 0; j < p; ++j)
                prob.X(i, j) = N(rng);
        }
        prob.eps0 = U(rng);
        const Eigen::VectorXd w = Eigen::VectorXd::Random(p);
        const double s = U(rng);
        CHECK(mtc_objective(prob, w, s) == doctest::Approx(oracle::mtc_mean(prob.X, prob.y, w, s, prob.eps0)).epsilon(1e-13));
        const Eigen::VectorXd g = mtc_gradient(prob, w, s);
        const Eigen::VectorXd fd =
            oracle::central_diff([&](const Eigen::VectorXd& v) { return mtc_objective(prob, v, s); }, w, 1e-6);
        CHECK((g - fd).norm() <= 1e-5 * std::max(fd.norm(), 1e-8));
    }
}

TEST_CASE("CMTC iterates stay on the constraint")
{
    Scenario sc;
    sc.profile.n_records = 200;
    sc.noise = GmmModel{{0.3, 0.7}, {0.0, 0.01}, {4e-6, 4e-6}};
    const auto truth = generate_true_records(sc);
    const EivProblem prob = scenario_problem(sc, truth.records);
    EstimatorConfig cfg = default_config(Method::CMTC);
    cfg.max_iters = 3000;
    // Start off the constraint; the first step projects onto it.
    cfg.w0 = Eigen::Vector4d(3.0, 30.0, -2.0, -30.0);
    const EstimateResult res = cmtc_estimate(prob, cfg);
    for (std::size_t k = 1; k < res.trace.size(); ++k)
        CHECK(std::abs(res.trace[k].w(0) + res.trace[k].w(2)) <= 1e-10);
    CHECK(res.trace.size() == static_cast<std::size_t>(res.iterations + 1));

    EivProblem free = prob;
    free.constraint.reset();
    CHECK_THROWS_AS(cmtc_estimate(free, cfg), InvalidInput);
}

TEST_CASE("MTC improves its objective and recovers a noiseless line")
{
    Scenario sc;
    sc.profile.n_records = 50;
    const auto truth = generate_true_records(sc);
    const EivProblem prob = build_regression(truth.records, true);
    for (Method m : {Method::MTC, Method::CMTC}) {
        EstimatorConfig cfg = default_config(m);
        cfg.w0 = params_to_admittance(database_guess(sc.line, 2));
        const EstimateResult res = run_estimator(prob, cfg);
        CHECK(res.converged);
        CHECK(res.trace.back().objective >= res.trace.front().objective);
        const LineParameters p = admittance_to_params(res.w_hat);
        CHECK(oracle::rel(p.r, sc.line.r) < 1e-6);
        CHECK(oracle::rel(p.x, sc.line.x) < 1e-6);
        CHECK(oracle::rel(p.b, sc.line.b) < 1e-6);
    }
}

TEST_CASE("curvature step is the inverse of the largest Hessian eigenvalue at a noiseless fit")
{
    Scenario sc;
    sc.profile.n_records = 40;
    const EivProblem prob = build_regression(generate_true_records(sc).records, false);
    const Eigen::VectorXd w = params_to_admittance(sc.line);
    for (Method m : {Method::MTEE, Method::MTC}) {
        const double s = 0.05;
        auto grad = [&](const Eigen::VectorXd& v) {
            return m == Method::MTEE ? mtee_gradient(prob, v, s) : mtc_gradient(prob, v, s);
        };
        Eigen::MatrixXd H(4, 4);
        for (int k = 0; k < 4; ++k) {
            Eigen::VectorXd a = w, b = w;
            a(k) += 1e-5;
            b(k) -= 1e-5;
            H.col(k) = (grad(a) - grad(b)) / 2e-5;
        }
        const Eigen::MatrixXd Hs = -(H + H.transpose()) / 2;
        const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Hs).eigenvalues().maxCoeff();
        CHECK(curvature_step(prob, w, m, s) == doctest::Approx(1.0 / lmax).epsilon(1e-4));
    }
    CHECK_THROWS_AS(curvature_step(prob, w, Method::TLS, 0.05), InvalidInput);
}
