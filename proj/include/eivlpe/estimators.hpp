#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eivlpe/line_model.hpp"
#include "eivlpe/noise.hpp"

namespace eivlpe {

struct DivergenceError : NumericalError {
    using NumericalError::NumericalError;
};

enum class Method { TLS, MTEE, MTC, CMTC, EGLE };

// Start point used when w0 is not given: a database guess (scenario runs only),
// the zero vector, or the TLS solution.
enum class StartKind { Database, Zero, Tls };

std::string method_name(Method m);
Method parse_method(const std::string& s);

struct EstimatorConfig {
    Method method = Method::TLS;
    std::optional<Eigen::VectorXd> w0;
    StartKind start = StartKind::Database;
    double step = 0.1;          // mu for MTEE, eta for MTC/CMTC
    bool auto_step = false;     // replace step with curvature_step at the start point
    double kernel_sigma = 0.05;
    int max_iters = 50000;
    double tol = 1e-10;
    int egle_m_max = 3;
    double egle_inner_tol = 1e-10;
    double egle_outer_tol = 1e-6;
    int egle_inner_max = 50;
    bool constrained = false;   // EGLE only; CMTC is always constrained
    bool egle_zero_mean = false;  // pin every noise component mean at zero
    std::uint64_t seed = 0;     // EM restarts inside EGLE

    void validate() const;
};

EstimatorConfig default_config(Method m);

struct TraceEntry {
    Eigen::VectorXd w;
    double objective = 0.0;
};

struct EgleCandidate {
    int m = 0;
    double bic = 0.0;
    double loglik = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    Eigen::VectorXd w;
    GmmModel y_gmm, x_gmm;
    std::string error;
};

struct EgleMeta {
    int m_star = 0;
    std::vector<EgleCandidate> candidates;
};

struct EstimateResult {
    Method method = Method::TLS;
    Eigen::VectorXd w_hat;
    int iterations = 0;
    bool converged = false;
    double last_step = 0.0;
    std::vector<TraceEntry> trace;
    double elapsed = 0.0;
    std::optional<EgleMeta> egle_meta;
    std::string note;
};

// TLS
EstimateResult tls_estimate(const EivProblem& problem);

// Total error of each row, (y - X w) / sqrt(|w|^2 + eps0^-2).
Eigen::VectorXd total_error(const EivProblem& problem, const Eigen::VectorXd& w);

// MTEE
double mtee_objective(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma);
Eigen::VectorXd mtee_gradient(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma);
EstimateResult mtee_estimate(const EivProblem& problem, const EstimatorConfig& config);

// MTC / CMTC
double mtc_objective(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma);
Eigen::VectorXd mtc_gradient(const EivProblem& problem, const Eigen::VectorXd& w, double kernel_sigma);
EstimateResult mtc_estimate(const EivProblem& problem, const EstimatorConfig& config);
EstimateResult cmtc_estimate(const EivProblem& problem, const EstimatorConfig& config);

// EGLE
struct EgleGmms {
    GmmModel y;
    GmmModel x;
};

struct NoiseEstimates {
    Eigen::VectorXd y_e;
    Eigen::MatrixXd X_e;
};

struct EgleSolve {
    Eigen::VectorXd w;
    int iterations = 0;
    bool converged = false;
};

double egle_standardized_sse(const EivProblem& problem, const Eigen::VectorXd& w, const NoiseEstimates& est,
                             const EgleGmms& gmms, const NoiseAssignment& assignment);
NoiseEstimates egle_noise_estimates(const EivProblem& problem, const Eigen::VectorXd& w, const EgleGmms& gmms,
                                    const NoiseAssignment& assignment);
// Residual of the stationarity system sum_i (x_i - x_e,i) alpha_i.
Eigen::VectorXd egle_stationarity(const EivProblem& problem, const Eigen::VectorXd& w, const EgleGmms& gmms,
                                  const NoiseAssignment& assignment);
EgleSolve egle_solve_params(const EivProblem& problem, const EgleGmms& gmms, const NoiseAssignment& assignment,
                            const Eigen::VectorXd& w0, double inner_tol = 1e-10, int max_inner = 50);
EstimateResult egle_estimate(const EivProblem& problem, const EstimatorConfig& config);

// Step 1/L, with L the largest curvature of the MTEE or MTC objective at w for
// noise-free residuals: g0 lambda_max(Xc^T Xc / n) / (sigma^2 q) for MTEE with
// column-centered Xc, lambda_max(X^T X / n) / (sigma^2 q) for MTC and CMTC.
double curvature_step(const EivProblem& problem, const Eigen::VectorXd& w, Method method, double kernel_sigma);

// Dispatch on config.method. Without w0, StartKind::Zero starts from zero and
// the other kinds from the TLS solution.
EstimateResult run_estimator(const EivProblem& problem, const EstimatorConfig& config);

}  // namespace eivlpe
