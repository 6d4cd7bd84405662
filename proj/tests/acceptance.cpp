// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "eivlpe/bench.hpp"
#include "oracles.hpp"

using namespace eivlpe;

namespace {

struct Verdict {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string pct(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g%%", 100.0 * v);
    return buf;
}

double seconds(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ----

Verdict noiseless_identity()
{
    Verdict v{1, "Noiseless identity"};
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> lx(std::log(0.01), std::log(0.1)), ratio(5.0, 20.0),
        lb(std::log(0.05), std::log(1.0));
    const Method methods[] = {Method::TLS, Method::MTEE, Method::MTC, Method::CMTC, Method::EGLE};
    double worst[5] = {0, 0, 0, 0, 0};
    int bad[5] = {0, 0, 0, 0, 0};
    for (int k = 0; k < 100; ++k) {
        const double x = std::exp(lx(rng));
        const LineParameters line{x / ratio(rng), x, std::exp(lb(rng))};
        Scenario sc;
        sc.line = line;
        sc.profile.n_records = 50;
        const EivProblem con = build_regression(generate_true_records(sc).records, true);
        EivProblem free = con;
        free.constraint.reset();
        const Eigen::VectorXd w0 = params_to_admittance(database_guess(line, static_cast<std::uint64_t>(k)));
        for (int j = 0; j < 5; ++j) {
            EstimatorConfig cfg = default_config(methods[j]);
            if (methods[j] != Method::TLS)
                cfg.w0 = w0;
            cfg.auto_step = true;
            double err = 1.0;
            try {
                const EstimateResult r = run_estimator(methods[j] == Method::CMTC ? con : free, cfg);
                const LineParameters p = admittance_to_params(r.w_hat);
                err = std::max({oracle::rel(p.r, line.r), oracle::rel(p.x, line.x), oracle::rel(p.b, line.b)});
            } catch (const std::exception&) {
            }
            worst[j] = std::max(worst[j], err);
            if (err > (methods[j] == Method::TLS ? 1e-10 : 1e-6))
                ++bad[j];
        }
    }
    const double t = seconds(t0);
    std::ostringstream d;
    v.pass = t < 60.0;
    for (int j = 0; j < 5; ++j) {
        d << method_name(methods[j]) << " worst " << worst[j] << " (" << bad[j] << " over)  ";
        v.pass = v.pass && bad[j] == 0;
    }
    d << "runtime " << t << " s";
    v.detail = d.str();
    return v;
}

// ---- 6 ----

Verdict gradient_suite()
{
    Verdict v{6, "Gradient suite"};
    std::mt19937_64 rng(6);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> S(0.5, 2.0);
    double worst_mtee = 0, worst_mtc = 0;
    for (int k = 0; k < 100; ++k) {
        const int p = 1 + k % 4;
        const int n = p + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(20 - p));
        EivProblem prob;
        prob.X.resize(n, p);
        prob.y.resize(n);
        for (int i = 0; i < n; ++i) {
            prob.y(i) = N(rng);
            for (int j = 0; j < p; ++j)
                prob.X(i, j) = N(rng);
        }
        Eigen::VectorXd w(p);
        for (int j = 0; j < p; ++j)
            w(j) = N(rng);
        const double s = S(rng);
        auto relerr = [](const Eigen::VectorXd& g, const Eigen::VectorXd& fd) {
            return (g - fd).norm() / std::max(fd.norm(), 1e-12);
        };
        const Eigen::VectorXd fd1 =
            oracle::central_diff([&](const Eigen::VectorXd& u) { return mtee_objective(prob, u, s); }, w, 1e-6);
        const Eigen::VectorXd fd2 =
            oracle::central_diff([&](const Eigen::VectorXd& u) { return mtc_objective(prob, u, s); }, w, 1e-6);
        worst_mtee = std::max(worst_mtee, relerr(mtee_gradient(prob, w, s), fd1));
        worst_mtc = std::max(worst_mtc, relerr(mtc_gradient(prob, w, s), fd2));
    }
    v.pass = worst_mtee <= 1e-5 && worst_mtc <= 1e-5;
    std::ostringstream d;
    d << "worst relative error MTEE " << worst_mtee << ", MTC " << worst_mtc << " over 100 instances";
    v.detail = d.str();
    return v;
}

// ---- 8 ----

Verdict oracle_equivalences()
{
    Verdict v{8, "Oracle equivalences"};
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N(0.0, 1.0);
    double tls_worst = 0;
    for (int k = 0; k < 50; ++k) {
        const int p = 1 + k % 4;
        const int n = p + 2 + static_cast<int>(rng() % 20);
        EivProblem prob;
        prob.X.resize(n, p);
        Eigen::VectorXd w(p);
        for (int j = 0; j < p; ++j)
            w(j) = N(rng);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j)
                prob.X(i, j) = N(rng);
        }
        prob.y = prob.X * w;
        for (int i = 0; i < n; ++i)
            prob.y(i) += 0.1 * N(rng);
        const Eigen::VectorXd o = oracle::tls(prob.X, prob.y);
        tls_worst = std::max(tls_worst, (tls_estimate(prob).w_hat - o).norm() / std::max(1.0, o.norm()));
    }

    double egle_worst = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Scenario sc;
        sc.seed = seed;
        sc.profile.n_records = 200;
        sc.noise = GaussianNoise{0.0, 0.005};
        EivProblem prob = scenario_problem(sc, generate_true_records(sc).records);
        prob.constraint.reset();
        EstimatorConfig cfg = default_config(Method::EGLE);
        cfg.egle_m_max = 1;
        cfg.egle_zero_mean = true;
        cfg.w0 = params_to_admittance(database_guess(sc.line, seed));
        double err = 1.0;
        try {
            const LineParameters e = admittance_to_params(egle_estimate(prob, cfg).w_hat);
            const LineParameters t = admittance_to_params(tls_estimate(prob).w_hat);
            err = std::max({oracle::rel(e.r, t.r), oracle::rel(e.x, t.x), oracle::rel(e.b, t.b)});
        } catch (const std::exception&) {
        }
        egle_worst = std::max(egle_worst, err);
    }

    double mtee_worst = 0;
    for (int k = 0; k < 50; ++k) {
        const int p = 1 + k % 4;
        const int n = 2 + static_cast<int>(rng() % 40);
        EivProblem prob;
        prob.X.resize(n, p);
        prob.y.resize(n);
        for (int i = 0; i < n; ++i) {
            prob.y(i) = N(rng);
            for (int j = 0; j < p; ++j)
                prob.X(i, j) = N(rng);
        }
        Eigen::VectorXd w(p);
        for (int j = 0; j < p; ++j)
            w(j) = N(rng);
        const double s = 0.2 + 0.05 * k;
        const double a = mtee_objective(prob, w, s);
        const double b = oracle::mtee_double_sum(prob.X, prob.y, w, s);
        mtee_worst = std::max(mtee_worst, std::abs(a - b) / b);
    }
    v.pass = tls_worst <= 1e-10 && egle_worst <= 1e-3 && mtee_worst <= 1e-14;
    std::ostringstream d;
    d << "TLS vs Jacobi SVD " << tls_worst << " (50), EGLE m=1 vs TLS " << egle_worst
      << " (20), MTEE vs double sum " << mtee_worst << " (50)";
    v.detail = d.str();
    return v;
}

// ---- 9 ----

Verdict complexity_proxy()
{
    Verdict v{9, "Complexity proxy"};
    auto per_iter = [](int records) {
        Scenario sc;
        sc.profile.n_records = records;
        sc.noise = GmmModel{{0.3, 0.7}, {0.0, 0.01}, {4e-6, 4e-6}};
        const EivProblem prob = scenario_problem(sc, generate_true_records(sc).records);
        EstimatorConfig cfg = default_config(Method::MTEE);
        cfg.w0 = params_to_admittance(database_guess(sc.line, 0));
        cfg.max_iters = 200;
        cfg.tol = 1e-300;
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const EstimateResult r = mtee_estimate(prob, cfg);
            best = std::min(best, r.elapsed / (r.iterations + 1));
        }
        return best;
    };
    const double t200 = per_iter(50), t400 = per_iter(100);
    const double ratio = t400 / t200;

    Scenario sc;
    sc.profile.n_records = 500;
    sc.noise = GmmModel{{0.3, 0.7}, {0.0, 0.01}, {4e-6, 4e-6}};
    const ScenarioOutcome out = run_scenario(sc, {default_config(Method::MTEE), default_config(Method::MTC)});
    double tm = 0, tc = 0;
    if (out.runs[0].result && out.runs[1].result) {
        tm = out.runs[0].result->elapsed;
        tc = out.runs[1].result->elapsed;
    }
    v.pass = ratio >= 3 && ratio <= 5 && tc > 0 && tm >= 10 * tc;
    std::ostringstream d;
    d << "per-iteration time n=400/n=200 = " << ratio << "; at n=2000 MTEE " << tm << " s ("
      << (out.runs[0].result ? out.runs[0].result->iterations : 0) << " it) vs MTC " << tc << " s ("
      << (out.runs[1].result ? out.runs[1].result->iterations : 0) << " it), ratio " << (tc > 0 ? tm / tc : 0);
    v.detail = d.str();
    return v;
}

// ---- studies: 2, 3, 4, 5, 7 ----

struct Medians {
    double r = 0, x = 0, b = 0;
    int ok = 0, runs = 0;
};

Medians medians(const std::vector<RunRow>& rows, const std::string& scenario, const std::string& label)
{
    std::vector<double> r, x, b;
    Medians m;
    for (const RunRow& row : rows) {
        if (row.scenario != scenario || row.estimator != label)
            continue;
        ++m.runs;
        if (!row.ok)
            continue;
        ++m.ok;
        r.push_back(row.are.r);
        x.push_back(row.are.x);
        b.push_back(row.are.b);
    }
    m.r = median(r);
    m.x = median(x);
    m.b = median(b);
    return m;
}

bool within(const Medians& m, double br, double bx, double bb, bool check_b = true)
{
    return m.runs > 0 && m.ok == m.runs && m.r <= br && m.x <= bx && (!check_b || m.b <= bb);
}

std::string show(const std::string& label, const Medians& m)
{
    std::ostringstream d;
    d << label << " " << pct(m.r) << "/" << pct(m.x) << "/" << pct(m.b);
    if (m.ok != m.runs)
        d << " [" << m.runs - m.ok << " failed]";
    return d.str();
}

// ARE(r) at an iteration, holding the last value once a run has stopped.
double are_r_at(const RunRow& row, int iteration)
{
    double last = std::nan("");
    for (std::size_t k = 0; k < row.trace.size(); ++k) {
        if (row.trace_iterations[k] > iteration)
            break;
        last = are(admittance_to_params(row.trace[k].w), row.truth).r;
    }
    return last;
}

const char* kGauss = "L_64-65_gaussian";
const char* kLap = "L_64-65_laplacian";
const char* kGmm = "L_64-65_gmm";

std::string mtee_scenario(const BenchConfig& cfg, const std::string& study)
{
    for (const auto& s : cfg.scenarios) {
        if (s.study == study && s.scenario.label != study)
            return s.scenario.label;
    }
    return study;
}

std::vector<Verdict> studies(const fs::path& out_dir, int jobs)
{
    BenchConfig cfg = studies_config();
    cfg.trace_points = 0;
    cfg.output_dir = out_dir.string();
    const auto t0 = std::chrono::steady_clock::now();
    BenchReport rep = run_bench(cfg, jobs);
    std::cout << "  studies: " << rep.rows.size() << " runs in " << seconds(t0) << " s with " << jobs
              << " worker(s)\n";

    std::vector<Verdict> out;
    const auto& rows = rep.rows;

    {
        Verdict v{2, "Gaussian study"};
        const std::string mt = mtee_scenario(cfg, kGauss);
        bool ok = true;
        std::ostringstream d;
        for (const char* l : {"TLS", "MTC", "CMTC"}) {
            const Medians m = medians(rows, kGauss, l);
            ok = ok && within(m, 0.02, 0.015, 0.005);
            d << show(l, m) << "  ";
        }
        const Medians e = medians(rows, kGauss, "EGLE");
        ok = ok && within(e, 0.01, 0.005, 0.001);
        d << show("EGLE", e) << "  " << show("EGLE-C", medians(rows, kGauss, "EGLE-C")) << "  ";
        const Medians mm = medians(rows, mt, "MTEE");
        ok = ok && within(mm, 0.02, 0.015, 0.005);
        d << show("MTEE(n=400)", mm) << "  ";
        double serial = 0;
        for (const RunRow& r : rows) {
            if (r.scenario == kGauss)
                serial += r.elapsed;
        }
        ok = ok && serial < 600;
        d << "non-MTEE serial time " << serial << " s";
        v.pass = ok;
        v.detail = d.str();
        out.push_back(v);
    }
    {
        Verdict v{3, "Laplacian study"};
        const std::string mt = mtee_scenario(cfg, kLap);
        bool ok = true;
        std::ostringstream d;
        for (const char* l : {"MTC", "CMTC", "EGLE"}) {
            const Medians m = medians(rows, kLap, l);
            ok = ok && within(m, 0.02, 0.015, 0.005);
            d << show(l, m) << "  ";
        }
        const Medians mm = medians(rows, mt, "MTEE");
        ok = ok && within(mm, 0.02, 0.015, 0.005);
        d << show("MTEE", mm) << "  " << show("EGLE-C", medians(rows, kLap, "EGLE-C")) << "  "
          << show("TLS", medians(rows, kLap, "TLS"));
        v.pass = ok;
        v.detail = d.str();
        out.push_back(v);
    }
    {
        Verdict v{4, "GMM study"};
        const std::string mt = mtee_scenario(cfg, kGmm);
        const Medians mm = medians(rows, mt, "MTEE");
        const Medians e = medians(rows, kGmm, "EGLE");
        std::map<int, int> mstar;
        for (const RunRow& r : rows) {
            if (r.scenario == kGmm && r.estimator == "EGLE" && r.ok)
                ++mstar[r.m_star];
        }
        const bool acc = within(mm, 0.02, 0.02, 0, false) && within(e, 0.02, 0.02, 0, false);
        v.pass = acc && mstar[2] >= 8;
        std::ostringstream d;
        d << show("MTEE", mm) << "  " << show("EGLE", e) << "  (ARE r/x/b, b unconstrained)  m* counts:";
        for (const auto& [m, c] : mstar)
            d << " m=" << m << ":" << c;
        d << "  [accuracy " << (acc ? "met" : "not met") << ", m*=2 in " << mstar[2] << "/10]";
        v.detail = d.str();
        out.push_back(v);
    }
    {
        Verdict v{5, "Convergence ordering"};
        const std::string mt = mtee_scenario(cfg, kGmm);
        int egle_max = 0, mtee_min = 1 << 30, mtee_max = 0;
        bool all_conv = true;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> at;
        for (const RunRow& r : rows) {
            if (!r.ok) {
                if ((r.scenario == kGmm || r.scenario == mt) && r.estimator != "TLS")
                    all_conv = false;
                continue;
            }
            if (r.scenario == kGmm && r.estimator == "EGLE") {
                egle_max = std::max(egle_max, r.iterations);
                all_conv = all_conv && r.converged;
            }
            if (r.scenario == mt && r.estimator == "MTEE") {
                mtee_min = std::min(mtee_min, r.iterations);
                mtee_max = std::max(mtee_max, r.iterations);
                all_conv = all_conv && r.converged;
            }
            if (r.scenario == kGmm && (r.estimator == "MTC" || r.estimator == "CMTC")) {
                at[r.estimator].first.push_back(are_r_at(r, 1000));
                at[r.estimator].second.push_back(are_r_at(r, 10000));
            }
        }
        bool improving = at.size() == 2;
        std::ostringstream d;
        d << "EGLE max outer " << egle_max << ", MTEE iterations " << mtee_min << ".." << mtee_max;
        for (const auto& [l, p] : at) {
            const double a = median(p.first), b = median(p.second);
            improving = improving && b < a;
            d << ", " << l << " median ARE(r) " << pct(a) << " @1e3 -> " << pct(b) << " @1e4";
        }
        v.pass = all_conv && egle_max <= 50 && mtee_min >= 100 && mtee_max <= 5000 && improving;
        if (!all_conv)
            d << " [some runs did not converge]";
        v.detail = d.str();
        out.push_back(v);
    }
    {
        Verdict v{7, "Constraint suite"};
        double worst = 0;
        int n = 0;
        bool ok = true;
        for (const RunRow& r : rows) {
            if (r.estimator != "CMTC" && r.estimator != "EGLE-C")
                continue;
            ++n;
            ok = ok && r.ok;
            worst = std::max(worst, r.constraint_residual);
        }
        v.pass = ok && n > 0 && worst <= 1e-10;
        std::ostringstream d;
        d << "max |Y1 + Y3| " << worst << " over every CMTC iterate and EGLE-C output in " << n << " runs";
        v.detail = d.str();
        out.push_back(v);
    }

    // Persist the tables with thinned traces.
    for (RunRow& r : rep.rows) {
        std::vector<TraceEntry> t;
        std::vector<int> it;
        for (std::size_t k : trace_indices(r.trace.size(), 400)) {
            t.push_back(r.trace[k]);
            it.push_back(r.trace_iterations[k]);
        }
        r.trace = std::move(t);
        r.trace_iterations = std::move(it);
    }
    try {
        write_bench_outputs(out_dir, cfg, rep, true);
        std::cout << "  tables and traces written to " << out_dir.string() << "\n";
    } catch (const std::exception& ex) {
        std::cout << "  could not write study outputs: " << ex.what() << "\n";
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    const fs::path out_dir = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    const int jobs = resolve_jobs(std::nullopt);
    std::vector<Verdict> all;
    auto run = [&](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v = fn();
        std::cout << "  criterion " << v.id << " evaluated in " << seconds(t0) << " s\n" << std::flush;
        all.push_back(std::move(v));
    };
    run(noiseless_identity);
    run(gradient_suite);
    run(oracle_equivalences);
    for (Verdict& v : studies(out_dir, jobs))
        all.push_back(std::move(v));
    run(complexity_proxy);
    std::sort(all.begin(), all.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });

    bool ok = true;
    std::cout << "\n";
    for (const Verdict& v : all) {
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << v.id << "  " << v.name << ": " << v.detail
                  << "\n";
        ok = ok && v.pass;
    }
    return ok ? 0 : 1;
}
