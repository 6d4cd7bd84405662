#pragma once

#include <chrono>
#include <cmath>
#include <functional>

#include "eivlpe/estimators.hpp"

namespace eivlpe::detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline constexpr double kDivergenceNorm = 1e6;

struct StepEval {
    double objective;      // objective at the evaluated point
    Eigen::VectorXd next;  // the iterate that follows it
};

// Fixed-step iteration; eval(w) returns the objective at w and the next iterate.
inline void iterate(EstimateResult& res, Eigen::VectorXd w, const EstimatorConfig& cfg,
                    const std::function<StepEval(const Eigen::VectorXd&)>& eval)
{
    StepEval ev = eval(w);
    res.trace.push_back({w, ev.objective});
    res.iterations = 0;
    res.converged = false;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        if (!ev.next.allFinite() || ev.next.norm() > kDivergenceNorm)
            throw DivergenceError(method_name(res.method) + " diverged at iteration " + std::to_string(it));
        res.last_step = (ev.next - w).lpNorm<Eigen::Infinity>();
        w = std::move(ev.next);
        res.iterations = it;
        ev = eval(w);
        res.trace.push_back({w, ev.objective});
        if (res.last_step <= cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.w_hat = w;
}

}  // namespace eivlpe::detail
