#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "eivlpe/noise.hpp"

namespace eivlpe {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLoglikTol = 1e-9;
constexpr int kMaxEmIters = 500;

double log_normal(double x, double mean, double var)
{
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

// Per-sample log of weighted component densities, and the log-sum-exp.
double component_logs(const GmmModel& g, double x, std::vector<double>& lp)
{
    const int m = g.m();
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
        lp[k] = g.weights[k] > 0.0 ? std::log(g.weights[k]) + log_normal(x, g.means[k], g.variances[k])
                                   : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, lp[k]);
    }
    double s = 0.0;
    for (int k = 0; k < m; ++k)
        s += std::exp(lp[k] - mx);
    return mx + std::log(s);
}

struct EmRun {
    GmmModel model;
    double loglik = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool floored = false;
    std::vector<double> trace;
};

bool floor_variances(GmmModel& g)
{
    bool hit = false;
    for (double& v : g.variances) {
        if (!(v >= kVarianceCollapse)) {
            v = kVarianceFloor;
            hit = true;
        }
    }
    return hit;
}

EmRun run_em(const std::vector<double>& x, GmmModel g)
{
    const std::size_t n = x.size();
    const int m = g.m();
    EmRun run;
    run.floored = floor_variances(g);
    std::vector<double> lp(m), nk(m), sx(m), sxx(m), resp(n * m);
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < kMaxEmIters; ++it) {
        std::fill(nk.begin(), nk.end(), 0.0);
        std::fill(sx.begin(), sx.end(), 0.0);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double lse = component_logs(g, x[i], lp);
            ll += lse;
            for (int k = 0; k < m; ++k) {
                const double r = std::exp(lp[k] - lse);
                resp[i * m + k] = r;
                nk[k] += r;
                sx[k] += r * x[i];
            }
        }
        // ll belongs to the parameters before this M-step.
        run.trace.push_back(ll);
        if (it > 0 && ll - prev < kLoglikTol) {
            run.loglik = ll;
            run.iterations = it;
            run.model = g;
            return run;
        }
        prev = ll;
        GmmModel next = g;
        for (int k = 0; k < m; ++k) {
            if (nk[k] > 0.0)
                next.means[k] = sx[k] / nk[k];
        }
        std::fill(sxx.begin(), sxx.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < m; ++k) {
                const double d = x[i] - next.means[k];
                sxx[k] += resp[i * m + k] * d * d;
            }
        }
        for (int k = 0; k < m; ++k) {
            next.weights[k] = nk[k] / static_cast<double>(n);
            if (nk[k] > 0.0)
                next.variances[k] = sxx[k] / nk[k];
        }
        run.floored = floor_variances(next) || run.floored;
        g = std::move(next);
    }
    run.model = g;
    run.loglik = gmm_loglik(g, x);
    run.trace.push_back(run.loglik);
    run.iterations = kMaxEmIters;
    return run;
}

void sort_by_mean(GmmModel& g)
{
    std::vector<int> idx(g.m());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return g.means[a] < g.means[b]; });
    GmmModel s;
    for (int k : idx) {
        s.weights.push_back(g.weights[k]);
        s.means.push_back(g.means[k]);
        s.variances.push_back(g.variances[k]);
    }
    g = std::move(s);
}

}  // namespace

double gmm_loglik(const GmmModel& model, const std::vector<double>& samples)
{
    std::vector<double> lp(model.m());
    double ll = 0.0;
    for (double x : samples)
        ll += component_logs(model, x, lp);
    return ll;
}

GmmFit gmm_em_fit(const std::vector<double>& samples, int m, std::uint64_t seed, const GmmModel* warm)
{
    if (m < 1)
        throw InvalidInput("gmm_em_fit needs m >= 1");
    if (samples.size() < static_cast<std::size_t>(m))
        throw InvalidInput("gmm_em_fit needs at least m samples");
    for (double v : samples) {
        if (!std::isfinite(v))
            throw InvalidInput("gmm_em_fit: non-finite sample");
    }
    const std::size_t n = samples.size();
    const double dn = static_cast<double>(n);
    double mean = 0.0;
    for (double v : samples)
        mean += v;
    mean /= dn;
    double var = 0.0;
    for (double v : samples)
        var += (v - mean) * (v - mean);
    var /= dn;

    GmmFit fit;
    if (m == 1) {
        fit.model = {{1.0}, {mean}, {var}};
        fit.variance_floored = floor_variances(fit.model);
        fit.loglik = gmm_loglik(fit.model, samples);
        fit.loglik_trace = {fit.loglik};
        fit.iterations = 0;
    } else if (warm) {
        if (warm->m() != m)
            throw InvalidInput("gmm_em_fit: warm start has the wrong component count");
        EmRun run = run_em(samples, *warm);
        fit.model = run.model;
        fit.loglik = run.loglik;
        fit.iterations = run.iterations;
        fit.variance_floored = run.floored;
        fit.loglik_trace = std::move(run.trace);
        sort_by_mean(fit.model);
    } else {
        std::vector<double> sorted = samples;
        std::sort(sorted.begin(), sorted.end());
        GmmModel init;
        for (int k = 0; k < m; ++k) {
            const double q = (k + 0.5) / m;
            const std::size_t pos = std::min(n - 1, static_cast<std::size_t>(q * dn));
            init.weights.push_back(1.0 / m);
            init.means.push_back(sorted[pos]);
            init.variances.push_back(var);
        }
        EmRun best = run_em(samples, init);

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        GmmModel restart = init;
        const double jitter = 0.5 * std::sqrt(var) / m;
        for (double& mu : restart.means)
            mu += jitter * nd(rng);
        EmRun alt = run_em(samples, restart);
        if (alt.loglik > best.loglik)
            best = std::move(alt);

        fit.model = best.model;
        fit.loglik = best.loglik;
        fit.iterations = best.iterations;
        fit.variance_floored = best.floored;
        fit.loglik_trace = std::move(best.trace);
        sort_by_mean(fit.model);
    }

    fit.assignment.labels.resize(n);
    fit.assignment.responsibilities.assign(n, std::vector<double>(m));
    std::vector<double> lp(m);
    for (std::size_t i = 0; i < n; ++i) {
        const double lse = component_logs(fit.model, samples[i], lp);
        int arg = 0;
        for (int k = 0; k < m; ++k) {
            fit.assignment.responsibilities[i][k] = std::exp(lp[k] - lse);
            if (fit.assignment.responsibilities[i][k] > fit.assignment.responsibilities[i][arg])
                arg = k;
        }
        fit.assignment.labels[i] = arg;
    }
    return fit;
}

double gmm_bic(double loglik, int m, std::size_t n_samples)
{
    if (n_samples < 1)
        throw InvalidInput("gmm_bic needs n_samples >= 1");
    const double k = 3.0 * m - 1.0;
    return k * std::log(static_cast<double>(n_samples)) - 2.0 * loglik;
}

}  // namespace eivlpe
