#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "eivlpe/bench.hpp"

using namespace eivlpe;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kFailure = 3;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool no_plots = false;
    std::string dataset;
};

// "stock" and "studies" name the built-in configs unless a file of that name exists.
BenchConfig bench_config(const Options& o)
{
    BenchConfig cfg;
    if (o.config.empty() || (o.config == "stock" && !fs::exists(o.config)))
        cfg = stock_config();
    else if (o.config == "studies" && !fs::exists(o.config))
        cfg = studies_config();
    else
        cfg = load_bench_config(o.config);
    if (!o.out.empty())
        cfg.output_dir = o.out;
    if (o.seed)
        cfg.seeds = {*o.seed};
    cfg.validate();
    return cfg;
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream os(path, std::ios::binary);
    os << j.dump(2) << '\n';
    if (!os)
        throw IoError("cannot write " + path.string());
}

int cmd_generate(const Options& o)
{
    const BenchConfig cfg = bench_config(o);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    json manifest = {{"schema", kSchema}, {"kind", "dataset"}, {"scenarios", json::array()}};
    for (const ScenarioSpec& sc : cfg.scenarios) {
        Scenario s = sc.scenario;
        s.seed = cfg.seeds.front();
        TrueRecords truth;
        if (sc.records_csv) {
            truth.records = read_pmu_csv(*sc.records_csv);
            truth.condition_number = condition_number(build_regression(truth.records, false).X);
        } else {
            truth = generate_true_records(s);
        }
        const auto noisy = apply_noise(truth.records, s.noise, s.seed);
        const std::string stem = s.label;
        write_pmu_csv(dir / (stem + "_clean.csv"), truth.records);
        write_pmu_csv(dir / (stem + "_noisy.csv"), noisy);
        manifest["scenarios"].push_back({{"label", s.label},
                                         {"seed", s.seed},
                                         {"line", {{"r", s.line.r}, {"x", s.line.x}, {"b", s.line.b}}},
                                         {"n_records", truth.records.size()},
                                         {"noise", noise_to_json(s.noise)},
                                         {"condition_number", truth.condition_number},
                                         {"clean", stem + "_clean.csv"},
                                         {"noisy", stem + "_noisy.csv"}});
        if (!truth.warning.empty())
            std::cerr << "warning: " << s.label << ": " << truth.warning << '\n';
    }
    write_json(dir / "manifest.json", manifest);
    std::cout << "wrote " << cfg.scenarios.size() << " scenario pairs to " << dir.string() << '\n';
    return kOk;
}

// Truth for a dataset file listed in a sibling manifest, if any.
std::optional<LineParameters> manifest_truth(const fs::path& dataset)
{
    const fs::path mp = dataset.parent_path() / "manifest.json";
    std::ifstream is(mp);
    if (!is)
        return std::nullopt;
    try {
        const json m = json::parse(is);
        for (const json& s : m.at("scenarios")) {
            const std::string name = dataset.filename().string();
            if (s.value("clean", "") == name || s.value("noisy", "") == name) {
                const json& l = s.at("line");
                return LineParameters{l.at("r").get<double>(), l.at("x").get<double>(), l.at("b").get<double>()};
            }
        }
    } catch (const json::exception&) {
    }
    return std::nullopt;
}

int cmd_estimate(const Options& o)
{
    EstimatorSpec spec;
    if (o.config.empty()) {
        spec.config = default_config(Method::TLS);
        spec.label = "TLS";
    } else {
        std::ifstream is(o.config);
        if (!is)
            throw ConfigError("cannot open estimator config " + o.config);
        json j;
        try {
            j = json::parse(is);
        } catch (const json::parse_error& ex) {
            throw ConfigError(o.config + ": " + ex.what());
        }
        if (j.contains("schema")) {
            if (j.at("schema") != kSchema)
                throw ConfigError(o.config + ": unsupported schema");
            j.erase("schema");
        }
        spec = estimator_from_json(j);
    }
    if (o.seed)
        spec.config.seed = *o.seed;

    const fs::path dataset = o.dataset;
    std::vector<PmuRecord> records;
    try {
        records = read_pmu_csv(dataset);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kFailure;
    }
    const bool constrained =
        spec.config.method == Method::CMTC || (spec.config.method == Method::EGLE && spec.config.constrained);
    const EivProblem problem = build_regression(records, constrained);
    const std::optional<LineParameters> truth = manifest_truth(dataset);

    EstimateResult res;
    try {
        res = run_estimator(problem, spec.config);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << spec.label << " failed on " << dataset.string() << ": " << ex.what() << '\n';
        return kFailure;
    }
    const LineParameters est = admittance_to_params(res.w_hat);

    const fs::path dir = o.out.empty() ? fs::path("out") : fs::path(o.out);
    fs::create_directories(dir);
    const std::string stem = dataset.stem().string() + "_" + spec.label;
    {
        const fs::path p = dir / (stem + "_result.csv");
        std::ofstream os(p, std::ios::binary);
        os << "estimator,method,w1,w2,w3,w4,r,x,b,iterations,converged,elapsed,m_star,note\n";
        os << spec.label << ',' << method_name(res.method);
        for (int k = 0; k < 4; ++k)
            os << ',' << format_double(res.w_hat(k));
        os << ',' << format_double(est.r) << ',' << format_double(est.x) << ',' << format_double(est.b) << ','
           << res.iterations << ',' << (res.converged ? 1 : 0) << ',' << format_double(res.elapsed) << ','
           << (res.egle_meta ? res.egle_meta->m_star : 0) << ',' << '"' << res.note << '"' << '\n';
        if (!os)
            throw IoError("cannot write " + p.string());
    }
    write_trace_csv(dir / (stem + "_trace.csv"), res.trace, truth ? &*truth : nullptr);
    std::cout << spec.label << ": r=" << format_double(est.r) << " x=" << format_double(est.x)
              << " b=" << format_double(est.b) << " iterations=" << res.iterations
              << (res.converged ? "" : " (not converged)") << '\n';
    if (truth) {
        const AreReport a = are(est, *truth);
        std::cout << "ARE: r=" << 100 * a.r << "% x=" << 100 * a.x << "% b=" << 100 * a.b << "%\n";
    }
    return kOk;
}

int cmd_bench(const Options& o)
{
    const BenchConfig cfg = bench_config(o);
    const int jobs = resolve_jobs(o.jobs);
    const BenchReport report = run_bench(cfg, jobs);
    write_bench_outputs(cfg.output_dir, cfg, report, !o.no_plots);
    int failures = 0;
    for (const RunRow& r : report.rows) {
        if (!r.ok) {
            ++failures;
            std::cerr << "failed: " << r.scenario << " / " << r.estimator << " / seed " << r.seed << ": " << r.error
                      << '\n';
        }
    }
    for (const AggregateRow& a : report.aggregates) {
        std::cout << a.scenario << "  " << a.estimator << "  ARE r/x/b % = " << 100 * a.median_are_r << " / "
                  << 100 * a.median_are_x << " / " << 100 * a.median_are_b << "  time " << a.median_time << " s\n";
    }
    std::cout << report.rows.size() << " runs, " << failures << " failed, output in " << cfg.output_dir << '\n';
    return !report.rows.empty() && failures == static_cast<int>(report.rows.size()) ? kFailure : kOk;
}

int cmd_report(const Options& o)
{
    const fs::path dir = !o.dataset.empty() ? fs::path(o.dataset) : !o.out.empty() ? fs::path(o.out) : "out";
    rebuild_report(dir, !o.no_plots);
    std::cout << "rebuilt report in " << dir.string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Errors-in-variables line parameter estimation from PMU data"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub, bool jobs) {
        sub->add_option("--config", o.config, "JSON config file (bench/generate accept 'stock' or 'studies')");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--seed", o.seed, "Override the seed list with one seed");
        sub->add_flag("--no-plots", o.no_plots, "Skip SVG plots");
        if (jobs)
            sub->add_option("--jobs", o.jobs, "Worker threads (falls back to EIV_LPE_JOBS)");
    };
    CLI::App* gen = app.add_subcommand("generate", "Write clean and noisy PMU CSVs per scenario");
    common(gen, true);
    CLI::App* est = app.add_subcommand("estimate", "Run one estimator on a PMU CSV");
    common(est, true);
    est->add_option("dataset", o.dataset, "PMU CSV file")->required();
    CLI::App* bench = app.add_subcommand("bench", "Run the scenario x estimator x seed grid");
    common(bench, true);
    CLI::App* rep = app.add_subcommand("report", "Rebuild aggregates, tables and plots from a bench directory");
    common(rep, true);
    rep->add_option("dir", o.dataset, "Bench output directory (defaults to --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*gen)
            return cmd_generate(o);
        if (*est)
            return cmd_estimate(o);
        if (*bench)
            return cmd_bench(o);
        return cmd_report(o);
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kConfigError;
    } catch (const InvalidInput& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kConfigError;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kFailure;
    }
}
