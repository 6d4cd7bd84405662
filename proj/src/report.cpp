#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "eivlpe/bench.hpp"

namespace eivlpe {

namespace {

const char* kRunsHeader =
    "scenario,estimator,method,seed,n_rows,ok,r,x,b,true_r,true_x,true_b,are_r,are_x,are_b,"
    "are_Y1,are_Y2,are_Y3,are_Y4,w1,w2,w3,w4,iterations,converged,elapsed,m_star,constraint_residual,error";

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot write " + path.string());
    return os;
}

void finish(std::ofstream& os, const fs::path& path)
{
    os.flush();
    if (!os)
        throw IoError("write failed for " + path.string());
}

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + '"';
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out(1);
    bool in_q = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (in_q) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                out.back() += '"';
                ++k;
            } else if (c == '"') {
                in_q = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            in_q = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

std::string safe_name(const std::string& s)
{
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out;
}

fs::path trace_path(const fs::path& dir, const RunRow& r)
{
    return dir / "traces" /
           (safe_name(r.scenario) + "__" + safe_name(r.estimator) + "__seed" + std::to_string(r.seed) + ".csv");
}

// Median of step-held per-seed traces on the union of their iteration grids.
PlotSeries median_trace(const std::string& name, const std::vector<std::vector<std::pair<int, double>>>& runs)
{
    PlotSeries s{name, {}};
    std::set<int> grid;
    for (const auto& r : runs) {
        for (const auto& [i, _] : r)
            grid.insert(i);
    }
    for (int it : grid) {
        if (it < 1)
            continue;
        std::vector<double> vals;
        for (const auto& r : runs) {
            auto p = std::upper_bound(r.begin(), r.end(), it,
                                      [](int v, const std::pair<int, double>& e) { return v < e.first; });
            if (p == r.begin())
                continue;
            const double v = std::prev(p)->second;
            if (std::isfinite(v))
                vals.push_back(v);
        }
        if (!vals.empty())
            s.points.emplace_back(it, 100.0 * median(vals));
    }
    return s;
}

void write_plots(const fs::path& dir, const std::vector<RunRow>& rows)
{
    std::vector<std::string> scenarios;
    for (const RunRow& r : rows) {
        if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end())
            scenarios.push_back(r.scenario);
    }
    for (const std::string& sc : scenarios) {
        std::vector<std::string> labels;
        for (const RunRow& r : rows) {
            if (r.scenario == sc && r.ok && std::find(labels.begin(), labels.end(), r.estimator) == labels.end())
                labels.push_back(r.estimator);
        }
        std::vector<PlotSeries> series;
        for (const std::string& l : labels) {
            std::vector<std::vector<std::pair<int, double>>> runs;
            for (const RunRow& r : rows) {
                if (r.scenario != sc || r.estimator != l || !r.ok)
                    continue;
                const fs::path p = trace_path(dir, r);
                if (fs::exists(p))
                    runs.push_back(read_trace_are_r(p));
            }
            series.push_back(median_trace(l, runs));
        }
        const fs::path out = dir / "plots" / (safe_name(sc) + "_are_r.svg");
        std::ofstream os = open_out(out);
        os << render_svg(sc + ": median %ARE(r) vs iteration", series);
        finish(os, out);
    }
}

std::map<std::string, StudyInfo> study_map(const BenchConfig& cfg)
{
    std::map<std::string, StudyInfo> m;
    for (const auto& s : cfg.scenarios)
        m[s.scenario.label] = {s.study.empty() ? s.scenario.label : s.study, s.scenario.line};
    return m;
}

}  // namespace

void write_runs_csv(const fs::path& path, const std::vector<RunRow>& rows)
{
    std::ofstream os = open_out(path);
    os << kRunsHeader << '\n';
    auto d = [](double v) { return format_double(v); };
    for (const RunRow& r : rows) {
        os << quote(r.scenario) << ',' << quote(r.estimator) << ',' << r.method << ',' << r.seed << ','
           << r.n_rows << ',' << (r.ok ? 1 : 0) << ',' << d(r.estimate.r) << ',' << d(r.estimate.x) << ','
           << d(r.estimate.b) << ',' << d(r.truth.r) << ',' << d(r.truth.x) << ',' << d(r.truth.b) << ','
           << d(r.are.r) << ',' << d(r.are.x) << ',' << d(r.are.b);
        for (double y : r.are.Y)
            os << ',' << d(y);
        for (int k = 0; k < 4; ++k)
            os << ',' << d(r.w_hat(k));
        os << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << d(r.elapsed) << ',' << r.m_star
           << ',' << d(r.constraint_residual) << ',' << quote(r.error) << '\n';
    }
    finish(os, path);
}

std::vector<RunRow> read_runs_csv(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || split_csv(line) != split_csv(kRunsHeader))
        throw IoError(path.string() + ":1: unexpected header");
    std::vector<RunRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const auto f = split_csv(line);
        if (f.size() != 29)
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 29 fields");
        try {
            RunRow r;
            std::size_t k = 0;
            r.scenario = f[k++];
            r.estimator = f[k++];
            r.method = f[k++];
            r.seed = std::stoull(f[k++]);
            r.n_rows = std::stoi(f[k++]);
            r.ok = f[k++] == "1";
            r.estimate = {parse_double(f[k]), parse_double(f[k + 1]), parse_double(f[k + 2])};
            k += 3;
            r.truth = {parse_double(f[k]), parse_double(f[k + 1]), parse_double(f[k + 2])};
            k += 3;
            r.are.r = parse_double(f[k++]);
            r.are.x = parse_double(f[k++]);
            r.are.b = parse_double(f[k++]);
            for (double& y : r.are.Y)
                y = parse_double(f[k++]);
            for (int j = 0; j < 4; ++j)
                r.w_hat(j) = parse_double(f[k++]);
            r.iterations = std::stoi(f[k++]);
            r.converged = f[k++] == "1";
            r.elapsed = parse_double(f[k++]);
            r.m_star = std::stoi(f[k++]);
            r.constraint_residual = parse_double(f[k++]);
            r.error = f[k++];
            r.are.estimator = r.estimator;
            r.are.seed = r.seed;
            rows.push_back(std::move(r));
        } catch (const std::exception& ex) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return rows;
}

void write_aggregate_csv(const fs::path& path, const std::vector<AggregateRow>& rows)
{
    std::ofstream os = open_out(path);
    os << "scenario,estimator,runs,failures,median_r,median_x,median_b,median_are_r,median_are_x,median_are_b,"
          "iqr_are_r,iqr_are_x,iqr_are_b,median_time,median_iterations\n";
    auto d = [](double v) { return format_double(v); };
    for (const AggregateRow& a : rows) {
        os << quote(a.scenario) << ',' << quote(a.estimator) << ',' << a.runs << ',' << a.failures << ','
           << d(a.median_r) << ',' << d(a.median_x) << ',' << d(a.median_b) << ',' << d(a.median_are_r) << ','
           << d(a.median_are_x) << ',' << d(a.median_are_b) << ',' << d(a.iqr_are_r) << ',' << d(a.iqr_are_x)
           << ',' << d(a.iqr_are_b) << ',' << d(a.median_time) << ',' << d(a.median_iterations) << '\n';
    }
    finish(os, path);
}

void write_tables(const fs::path& dir, const std::vector<AggregateRow>& rows,
                  const std::map<std::string, StudyInfo>& scenarios)
{
    std::vector<std::string> studies;
    for (const AggregateRow& a : rows) {
        auto it = scenarios.find(a.scenario);
        const std::string st = it == scenarios.end() ? a.scenario : it->second.study;
        if (std::find(studies.begin(), studies.end(), st) == studies.end())
            studies.push_back(st);
    }
    for (const std::string& st : studies) {
        std::vector<const AggregateRow*> cols;
        std::optional<LineParameters> truth;
        for (const AggregateRow& a : rows) {
            auto it = scenarios.find(a.scenario);
            if ((it == scenarios.end() ? a.scenario : it->second.study) != st)
                continue;
            if (it != scenarios.end() && !truth)
                truth = it->second.truth;
            const bool seen = std::any_of(cols.begin(), cols.end(),
                                          [&](const AggregateRow* c) { return c->estimator == a.estimator; });
            if (!seen)
                cols.push_back(&a);
        }
        const fs::path path = dir / ("table_" + safe_name(st) + ".csv");
        std::ofstream os = open_out(path);
        os << ",TV";
        for (const AggregateRow* c : cols)
            os << ',' << quote(c->estimator);
        os << '\n';
        auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
        const char* names[] = {"r", "x", "b"};
        for (int k = 0; k < 3; ++k) {
            os << names[k] << ',';
            if (truth)
                os << cell(k == 0 ? truth->r : k == 1 ? truth->x : truth->b);
            for (const AggregateRow* c : cols)
                os << ',' << cell(k == 0 ? c->median_r : k == 1 ? c->median_x : c->median_b);
            os << '\n';
        }
        os << "Time (s),";
        for (const AggregateRow* c : cols)
            os << ',' << cell(c->median_time);
        os << '\n';
        finish(os, path);
    }
}

void write_trace_csv(const fs::path& path, const std::vector<TraceEntry>& trace, const LineParameters* truth,
                     int max_points, const std::vector<int>& iterations)
{
    if (!iterations.empty() && iterations.size() != trace.size())
        throw InvalidInput("trace iteration numbers do not match the trace length");
    std::ofstream os = open_out(path);
    os << "iteration,w1,w2,w3,w4,objective";
    if (truth)
        os << ",are_r,are_x,are_b";
    os << '\n';
    for (std::size_t k : trace_indices(trace.size(), max_points)) {
        const TraceEntry& e = trace[k];
        os << (iterations.empty() ? static_cast<int>(k) : iterations[k]);
        for (Eigen::Index j = 0; j < 4; ++j)
            os << ',' << format_double(j < e.w.size() ? e.w(j) : std::nan(""));
        os << ',' << format_double(e.objective);
        if (truth) {
            double ar = std::nan(""), ax = ar, ab = ar;
            try {
                const AreReport rep = are(admittance_to_params(e.w), *truth);
                ar = rep.r;
                ax = rep.x;
                ab = rep.b;
            } catch (const std::exception&) {
            }
            os << ',' << format_double(ar) << ',' << format_double(ax) << ',' << format_double(ab);
        }
        os << '\n';
    }
    finish(os, path);
}

std::vector<std::pair<int, double>> read_trace_are_r(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(is, line);
    const auto head = split_csv(line);
    const auto col = std::find(head.begin(), head.end(), "are_r");
    if (col == head.end())
        throw IoError(path.string() + ":1: no are_r column");
    const auto c = static_cast<std::size_t>(col - head.begin());
    std::vector<std::pair<int, double>> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        try {
            out.emplace_back(std::stoi(f.at(0)), parse_double(f.at(c)));
        } catch (const std::exception& ex) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

void write_bench_outputs(const fs::path& dir, const BenchConfig& cfg, const BenchReport& report, bool plots)
{
    fs::create_directories(dir);
    write_runs_csv(dir / "runs.csv", report.rows);
    write_aggregate_csv(dir / "aggregate.csv", report.aggregates);
    write_tables(dir, report.aggregates, study_map(cfg));
    for (const RunRow& r : report.rows) {
        if (r.ok)
            write_trace_csv(trace_path(dir, r), r.trace, &r.truth, 0, r.trace_iterations);
    }
    int failures = 0;
    for (const RunRow& r : report.rows)
        failures += r.ok ? 0 : 1;
    json manifest = {{"schema", kSchema},
                     {"kind", "bench"},
                     {"config", bench_config_to_json(cfg)},
                     {"runs", report.rows.size()},
                     {"failures", failures}};
    {
        const fs::path p = dir / "manifest.json";
        std::ofstream os = open_out(p);
        os << manifest.dump(2) << '\n';
        finish(os, p);
    }
    if (plots) {
        try {
            write_plots(dir, report.rows);
        } catch (const std::exception&) {
            // plots are best-effort
        }
    }
}

void rebuild_report(const fs::path& dir, bool plots)
{
    const fs::path mp = dir / "manifest.json";
    std::ifstream is(mp);
    if (!is)
        throw IoError("cannot open " + mp.string());
    json manifest;
    try {
        manifest = json::parse(is);
    } catch (const json::parse_error& ex) {
        throw ConfigError(mp.string() + ": " + ex.what());
    }
    if (!manifest.contains("config"))
        throw ConfigError(mp.string() + ": no config block");
    const BenchConfig cfg = bench_config_from_json(manifest.at("config"));
    const std::vector<RunRow> rows = read_runs_csv(dir / "runs.csv");
    const std::vector<AggregateRow> agg = aggregate(rows);
    write_aggregate_csv(dir / "aggregate.csv", agg);
    write_tables(dir, agg, study_map(cfg));
    if (plots) {
        try {
            write_plots(dir, rows);
        } catch (const std::exception&) {
        }
    }
}

}  // namespace eivlpe
