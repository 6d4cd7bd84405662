#include <chrono>
#include <cmath>
#include <functional>

#include "eivlpe/estimators.hpp"
#include "iterate.hpp"

namespace eivlpe {

namespace {

double floored(double v) { return v >= kVarianceCollapse ? v : kVarianceFloor; }

void check_inputs(const EivProblem& problem, const Eigen::VectorXd& w, const EgleGmms& gmms,
                  const NoiseAssignment& assignment)
{
    if (w.size() != problem.cols())
        throw InvalidInput("EGLE: w has the wrong length");
    if (gmms.y.m() != gmms.x.m() || gmms.y.m() < 1)
        throw InvalidInput("EGLE: y and X noise models need the same component count");
    if (static_cast<Eigen::Index>(assignment.labels.size()) != problem.rows())
        throw InvalidInput("EGLE: one component label per row is required");
    for (int g : assignment.labels) {
        if (g < 0 || g >= gmms.y.m())
            throw InvalidInput("EGLE: component label out of range");
    }
}

// Per-component offset and scale of the row residual.
struct GroupStats {
    std::vector<double> mu, var;
};

GroupStats group_stats(const Eigen::VectorXd& w, const EgleGmms& gmms)
{
    const int m = gmms.y.m();
    const double W = w.squaredNorm(), S = w.sum();
    GroupStats gs;
    for (int g = 0; g < m; ++g) {
        gs.mu.push_back(gmms.y.means[g] - gmms.x.means[g] * S);
        gs.var.push_back(floored(gmms.y.variances[g]) + floored(gmms.x.variances[g]) * W);
    }
    return gs;
}

Eigen::VectorXd alphas(const EivProblem& problem, const Eigen::VectorXd& w, const EgleGmms& gmms,
                       const NoiseAssignment& assignment)
{
    const GroupStats gs = group_stats(w, gmms);
    const Eigen::VectorXd r = problem.y - problem.X * w;
    Eigen::VectorXd a(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const int g = assignment.labels[i];
        a(i) = (r(i) - gs.mu[g]) / gs.var[g];
    }
    return a;
}

}  // namespace

NoiseEstimates egle_noise_estimates(const EivProblem& problem, const Eigen::VectorXd& w, const EgleGmms& gmms,
                                    const NoiseAssignment& assignment)
{
    check_inputs(problem, w, gmms, assignment);
    const Eigen::VectorXd a = alphas(problem, w, gmms, assignment);
    const Eigen::Index n = problem.rows(), p = problem.cols();
    NoiseEstimates est;
    est.y_e.resize(n);
    est.X_e.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int g = assignment.labels[i];
        est.y_e(i) = floored(gmms.y.variances[g]) * a(i) + gmms.y.means[g];
        for (Eigen::Index j = 0; j < p; ++j)
            est.X_e(i, j) = -w(j) * floored(gmms.x.variances[g]) * a(i) + gmms.x.means[g];
    }
    return est;
}

double egle_standardized_sse(const EivProblem& problem, const Eigen::VectorXd& w, const NoiseEstimates& est,
                             const EgleGmms& gmms, const NoiseAssignment& assignment)
{
    check_inputs(problem, w, gmms, assignment);
    if (est.y_e.size() != problem.rows() || est.X_e.rows() != problem.rows() || est.X_e.cols() != problem.cols())
        throw InvalidInput("EGLE: noise estimate shape mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < problem.rows(); ++i) {
        const int g = assignment.labels[i];
        const double dy = est.y_e(i) - gmms.y.means[g];
        s += dy * dy / floored(gmms.y.variances[g]);
        double sx = 0.0;
        for (Eigen::Index j = 0; j < problem.cols(); ++j) {
            const double dx = est.X_e(i, j) - gmms.x.means[g];
            sx += dx * dx;
        }
        s += sx / floored(gmms.x.variances[g]);
    }
    return 0.5 * s;
}

Eigen::VectorXd egle_stationarity(const EivProblem& problem, const Eigen::VectorXd& w, const EgleGmms& gmms,
                                  const NoiseAssignment& assignment)
{
    check_inputs(problem, w, gmms, assignment);
    const Eigen::VectorXd a = alphas(problem, w, gmms, assignment);
    // (x_i - x_e,i) = x_i + w X_sigma alpha_i - X_mu
    Eigen::VectorXd xa = problem.X.transpose() * a;
    double wterm = 0.0;
    Eigen::VectorXd mterm = Eigen::VectorXd::Zero(problem.cols());
    for (Eigen::Index i = 0; i < problem.rows(); ++i) {
        const int g = assignment.labels[i];
        wterm += floored(gmms.x.variances[g]) * a(i) * a(i);
        mterm.array() += gmms.x.means[g] * a(i);
    }
    return xa + wterm * w - mterm;
}

namespace {

// Newton iteration on F(z) = 0 with a forward-difference Jacobian. The first
// p unknowns are w; when C is present, C^T w = f is enforced by a KKT step.
EgleSolve newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F, Eigen::VectorXd z,
                 Eigen::Index p, const std::optional<LinearConstraint>& con, double tol, int max_inner)
{
    const Eigen::Index d = z.size();
    const Eigen::Index c = con ? con->C.cols() : 0;
    EgleSolve out;
    Eigen::VectorXd Fz = F(z);
    for (int it = 1; it <= max_inner; ++it) {
        Eigen::MatrixXd J(d, d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(z(j)));
            Eigen::VectorXd zh = z;
            zh(j) += h;
            J.col(j) = (F(zh) - Fz) / h;
        }
        Eigen::VectorXd dz;
        if (c == 0) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
            if (!lu.isInvertible())
                throw NumericalError("EGLE: singular Jacobian, rcond " + std::to_string(lu.rcond()));
            dz = lu.solve(-Fz);
        } else {
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d + c, d + c);
            K.topLeftCorner(d, d) = J;
            K.block(0, d, p, c) = con->C;
            K.block(d, 0, c, p) = con->C.transpose();
            Eigen::VectorXd rhs(d + c);
            rhs << -Fz, con->f - con->C.transpose() * z.head(p);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
            if (!lu.isInvertible())
                throw NumericalError("EGLE: singular KKT matrix, rcond " + std::to_string(lu.rcond()));
            dz = lu.solve(rhs).head(d);
        }
        z += dz;
        if (con) {
            // Remove rounding drift off the affine constraint set.
            const Eigen::VectorXd viol = con->C.transpose() * z.head(p) - con->f;
            z.head(p) -= con->C * (con->C.transpose() * con->C).ldlt().solve(viol);
        }
        if (!z.allFinite())
            throw NumericalError("EGLE: Newton iterate became non-finite");
        Fz = F(z);
        out.iterations = it;
        const Eigen::VectorXd w = z.head(p);
        if (dz.head(p).lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, w.lpNorm<Eigen::Infinity>())) {
            out.converged = true;
            break;
        }
    }
    out.w = z;
    return out;
}

std::vector<int> component_counts(const EgleGmms& gmms, const NoiseAssignment& assignment)
{
    std::vector<int> counts(gmms.y.m(), 0);
    for (int g : assignment.labels)
        ++counts[g];
    for (int c : counts) {
        if (c < 1)
            throw InvalidInput("EGLE: every component needs at least one row");
    }
    return counts;
}

}  // namespace

EgleSolve egle_solve_params(const EivProblem& problem, const EgleGmms& gmms, const NoiseAssignment& assignment,
                            const Eigen::VectorXd& w0, double inner_tol, int max_inner)
{
    problem.validate();
    check_inputs(problem, w0, gmms, assignment);
    component_counts(gmms, assignment);
    auto F = [&](const Eigen::VectorXd& w) { return egle_stationarity(problem, w, gmms, assignment); };
    return newton(F, w0, problem.cols(), problem.constraint, inner_tol, max_inner);
}

namespace {

// Splits a mixture of the total row noise into y- and X-noise models with variance ratio eps0^2.
EgleGmms split_total(const GmmModel& total, const Eigen::VectorXd& w, double eps0)
{
    const double share = 1.0 / (1.0 + eps0 * eps0 * w.squaredNorm());
    EgleGmms g;
    g.y = total;
    g.x = total;
    for (int k = 0; k < total.m(); ++k) {
        g.y.variances[k] = total.variances[k] * share;
        g.x.variances[k] = eps0 * eps0 * total.variances[k] * share;
        g.x.means[k] = 0.0;
    }
    return g;
}

// Moves each component mean into its variance, keeping the second moment.
void pin_zero_mean(GmmModel& g)
{
    for (int k = 0; k < g.m(); ++k) {
        g.variances[k] += g.means[k] * g.means[k];
        g.means[k] = 0.0;
    }
}

struct OuterRun {
    EgleCandidate cand;
    std::vector<TraceEntry> trace;
    double last_step = 0.0;
};

OuterRun run_fixed_m(const EivProblem& problem, const EstimatorConfig& cfg, int m)
{
    const Eigen::Index n = problem.rows();
    OuterRun run;
    run.cand.m = m;
    Eigen::VectorXd w = *cfg.w0;
    EgleGmms gmms = split_total(GmmModel{{1.0}, {0.0}, {1.0}}, w, problem.eps0);
    NoiseAssignment asg;
    asg.labels.assign(n, 0);

    auto total_noise = [&](const Eigen::VectorXd& wc) {
        const NoiseEstimates est = egle_noise_estimates(problem, wc, gmms, asg);
        const Eigen::VectorXd t = est.y_e - est.X_e * wc;
        return std::vector<double>(t.data(), t.data() + t.size());
    };

    run.trace.push_back({w, egle_standardized_sse(problem, w, egle_noise_estimates(problem, w, gmms, asg), gmms, asg)});
    GmmModel total;
    for (int outer = 1; outer <= cfg.max_iters; ++outer) {
        const GmmFit fit = gmm_em_fit(total_noise(w), m, cfg.seed, outer > 1 ? &total : nullptr);
        total = fit.model;
        asg = fit.assignment;
        if (cfg.egle_zero_mean)
            pin_zero_mean(total);
        const EgleGmms mixed = split_total(total, w, problem.eps0);

        // Parameter step, solved jointly with the offsets of the occupied components.
        std::vector<int> slot(m, -1), occupied;
        {
            std::vector<int> counts(m, 0);
            for (int g : asg.labels)
                ++counts[g];
            for (int g = 0; g < m; ++g) {
                if (counts[g] > 0 && !cfg.egle_zero_mean) {
                    slot[g] = static_cast<int>(occupied.size());
                    occupied.push_back(g);
                }
            }
        }
        const Eigen::Index p = problem.cols();
        const Eigen::Index k = static_cast<Eigen::Index>(occupied.size());
        auto F = [&](const Eigen::VectorXd& z) {
            EgleGmms gz = mixed;
            for (Eigen::Index j = 0; j < k; ++j)
                gz.y.means[occupied[j]] = z(p + j);
            const Eigen::VectorXd wz = z.head(p);
            const Eigen::VectorXd a = alphas(problem, wz, gz, asg);
            Eigen::VectorXd out(p + k);
            out.head(p) = egle_stationarity(problem, wz, gz, asg);
            out.tail(k).setZero();
            for (Eigen::Index i = 0; i < problem.rows(); ++i) {
                if (slot[asg.labels[i]] >= 0)
                    out(p + slot[asg.labels[i]]) += a(i);
            }
            return out;
        };
        Eigen::VectorXd z0(p + k);
        z0.head(p) = w;
        for (Eigen::Index j = 0; j < k; ++j)
            z0(p + j) = mixed.y.means[occupied[j]];
        const EgleSolve sol = newton(F, z0, p, problem.constraint, cfg.egle_inner_tol, cfg.egle_inner_max);
        for (Eigen::Index j = 0; j < k; ++j)
            total.means[occupied[j]] = sol.w(p + j);
        gmms = split_total(total, w, problem.eps0);
        const Eigen::VectorXd wn = sol.w.head(p);
        run.last_step = (wn - w).lpNorm<Eigen::Infinity>();
        w = wn;
        const NoiseEstimates est = egle_noise_estimates(problem, w, gmms, asg);
        run.trace.push_back({w, egle_standardized_sse(problem, w, est, gmms, asg)});
        run.cand.outer_iterations = outer;
        if (run.last_step < cfg.egle_outer_tol) {
            run.cand.converged = true;
            break;
        }
    }
    GmmFit final_fit = gmm_em_fit(total_noise(w), m, cfg.seed);
    if (cfg.egle_zero_mean) {
        pin_zero_mean(final_fit.model);
        final_fit.loglik = gmm_loglik(final_fit.model, total_noise(w));
    }
    run.cand.w = w;
    run.cand.loglik = final_fit.loglik;
    run.cand.bic = gmm_bic(final_fit.loglik, m, static_cast<std::size_t>(n));
    const EgleGmms split = split_total(final_fit.model, w, problem.eps0);
    run.cand.y_gmm = split.y;
    run.cand.x_gmm = split.x;
    return run;
}

}  // namespace

EstimateResult egle_estimate(const EivProblem& problem, const EstimatorConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    problem.validate();
    config.validate();
    if (!config.w0)
        throw InvalidInput("EGLE needs an initial w0");
    if (config.w0->size() != problem.cols())
        throw InvalidInput("w0 has the wrong length");
    EivProblem prob = problem;
    if (!config.constrained)
        prob.constraint.reset();
    else if (!prob.constraint)
        throw InvalidInput("constrained EGLE needs an equality constraint");

    // The outer-iteration cap reuses max_iters.
    std::vector<OuterRun> runs;
    int best = -1;
    for (int m = 1; m <= config.egle_m_max; ++m) {
        OuterRun run;
        try {
            run = run_fixed_m(prob, config, m);
        } catch (const std::exception& ex) {
            run.cand.m = m;
            run.cand.error = ex.what();
        }
        runs.push_back(std::move(run));
        const EgleCandidate& c = runs.back().cand;
        if (c.converged && c.error.empty() &&
            (best < 0 || c.bic < runs[best].cand.bic - 1e-9))
            best = static_cast<int>(runs.size()) - 1;
    }
    EgleMeta meta;
    for (const auto& r : runs)
        meta.candidates.push_back(r.cand);
    if (best < 0) {
        std::string msg = "EGLE: no component count converged;";
        for (const auto& c : meta.candidates)
            msg += " m=" + std::to_string(c.m) + (c.error.empty() ? " outer cap reached" : " " + c.error) + ";";
        throw NumericalError(msg);
    }
    meta.m_star = runs[best].cand.m;

    EstimateResult res;
    res.method = Method::EGLE;
    res.w_hat = runs[best].cand.w;
    res.iterations = runs[best].cand.outer_iterations;
    res.converged = true;
    res.last_step = runs[best].last_step;
    res.trace = std::move(runs[best].trace);
    res.egle_meta = std::move(meta);
    res.elapsed = detail::seconds_since(t0);
    return res;
}

}  // namespace eivlpe
