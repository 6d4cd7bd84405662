#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "eivlpe/bench.hpp"

namespace eivlpe {

int resolve_jobs(std::optional<int> flag)
{
    if (flag) {
        if (*flag < 1)
            throw ConfigError("--jobs must be >= 1");
        return *flag;
    }
    if (const char* env = std::getenv("EIV_LPE_JOBS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1)
            throw ConfigError(std::string("EIV_LPE_JOBS must be a positive integer, got '") + env + "'");
        return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<std::size_t> trace_indices(std::size_t length, int max_points)
{
    std::vector<std::size_t> idx;
    if (length == 0)
        return idx;
    if (max_points <= 0 || length <= static_cast<std::size_t>(max_points)) {
        for (std::size_t k = 0; k < length; ++k)
            idx.push_back(k);
        return idx;
    }
    const std::size_t dense = std::min<std::size_t>(101, static_cast<std::size_t>(max_points) / 2);
    for (std::size_t k = 0; k < dense; ++k)
        idx.push_back(k);
    const std::size_t rest = static_cast<std::size_t>(max_points) - dense;
    const double lo = std::log(static_cast<double>(dense));
    const double hi = std::log(static_cast<double>(length - 1));
    for (std::size_t k = 1; k <= rest; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(rest);
        const auto i = static_cast<std::size_t>(std::llround(std::exp(lo + t * (hi - lo))));
        if (i > idx.back() && i < length)
            idx.push_back(i);
    }
    if (idx.back() != length - 1)
        idx.push_back(length - 1);
    return idx;
}

namespace {

struct Cell {
    std::size_t scenario;
    EstimatorSpec estimator;
    std::uint64_t seed;
};

RunRow run_cell(const ScenarioSpec& sc, const Cell& cell, const std::vector<PmuRecord>* clean, int trace_points)
{
    Scenario s = sc.scenario;
    s.seed = cell.seed;
    RunRow row;
    row.scenario = s.label;
    row.estimator = cell.estimator.label;
    row.method = method_name(cell.estimator.config.method);
    row.seed = cell.seed;
    row.truth = s.line;
    row.n_rows = 4 * (clean ? static_cast<int>(clean->size()) : s.profile.n_records);

    ScenarioOutcome out;
    try {
        out = run_scenario(s, {cell.estimator.config}, clean);
    } catch (const std::exception& ex) {
        row.error = ex.what();
        return row;
    }
    ScenarioRun& run = out.runs.front();
    if (!run.error.empty() || !run.result) {
        row.error = run.error.empty() ? "no result" : run.error;
        return row;
    }
    EstimateResult& res = *run.result;
    row.ok = true;
    row.estimate = *run.estimate;
    row.are = run.are;
    row.are.estimator = row.estimator;
    row.w_hat = res.w_hat.head<4>();
    row.iterations = res.iterations;
    row.converged = res.converged;
    row.elapsed = res.elapsed;
    if (res.egle_meta)
        row.m_star = res.egle_meta->m_star;
    const bool constrained = cell.estimator.config.method == Method::CMTC ||
                             (cell.estimator.config.method == Method::EGLE && cell.estimator.config.constrained);
    if (constrained) {
        double worst = std::abs(res.w_hat(0) + res.w_hat(2));
        for (std::size_t k = 1; k < res.trace.size(); ++k)
            worst = std::max(worst, std::abs(res.trace[k].w(0) + res.trace[k].w(2)));
        row.constraint_residual = worst;
    }
    for (std::size_t k : trace_indices(res.trace.size(), trace_points)) {
        row.trace.push_back(res.trace[k]);
        row.trace_iterations.push_back(static_cast<int>(k));
    }
    return row;
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg, int jobs)
{
    cfg.validate();
    std::vector<std::optional<std::vector<PmuRecord>>> clean(cfg.scenarios.size());
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
        const ScenarioSpec& sc = cfg.scenarios[s];
        if (sc.records_csv)
            clean[s] = read_pmu_csv(*sc.records_csv);
        for (const EstimatorSpec& e : resolve_estimators(cfg, sc)) {
            for (std::uint64_t seed : cfg.seeds)
                cells.push_back({s, e, seed});
        }
    }

    BenchReport report;
    report.rows.resize(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cells.size())
                return;
            const Cell& c = cells[k];
            const auto* recs = clean[c.scenario] ? &*clean[c.scenario] : nullptr;
            report.rows[k] = run_cell(cfg.scenarios[c.scenario], c, recs, cfg.trace_points);
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    report.aggregates = aggregate(report.rows);
    return report;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

double quantile(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double iqr(std::vector<double> v)
{
    if (v.empty())
        return std::nan("");
    std::sort(v.begin(), v.end());
    return quantile(v, 0.75) - quantile(v, 0.25);
}

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows)
{
    std::vector<AggregateRow> out;
    std::vector<std::vector<const RunRow*>> groups;
    for (const RunRow& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
            return a.scenario == r.scenario && a.estimator == r.estimator;
        });
        if (it == out.end()) {
            AggregateRow a;
            a.scenario = r.scenario;
            a.estimator = r.estimator;
            out.push_back(a);
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        AggregateRow& a = out[g];
        std::vector<double> er, ex, eb, ar, ax, ab, t, it;
        for (const RunRow* r : groups[g]) {
            ++a.runs;
            if (!r->ok) {
                ++a.failures;
                continue;
            }
            er.push_back(r->estimate.r);
            ex.push_back(r->estimate.x);
            eb.push_back(r->estimate.b);
            ar.push_back(r->are.r);
            ax.push_back(r->are.x);
            ab.push_back(r->are.b);
            t.push_back(r->elapsed);
            it.push_back(r->iterations);
        }
        a.median_r = median(er);
        a.median_x = median(ex);
        a.median_b = median(eb);
        a.median_are_r = median(ar);
        a.median_are_x = median(ax);
        a.median_are_b = median(ab);
        a.iqr_are_r = iqr(ar);
        a.iqr_are_x = iqr(ax);
        a.iqr_are_b = iqr(ab);
        a.median_time = median(t);
        a.median_iterations = median(it);
    }
    return out;
}

}  // namespace eivlpe
