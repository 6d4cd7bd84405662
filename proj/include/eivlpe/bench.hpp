#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eivlpe/estimators.hpp"
#include "eivlpe/scenario.hpp"

namespace eivlpe {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kSchema = "eiv-lpe/1";

// ---- number formatting and PMU CSV ----

// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);
double parse_double(const std::string& s);

std::string pmu_csv_header();
void write_pmu_csv(std::ostream& os, const std::vector<PmuRecord>& records);
void write_pmu_csv(const fs::path& path, const std::vector<PmuRecord>& records);
std::vector<PmuRecord> read_pmu_csv(std::istream& is, const std::string& source);
std::vector<PmuRecord> read_pmu_csv(const fs::path& path);

// ---- configuration ----

struct EstimatorSpec {
    std::string label;
    EstimatorConfig config;
};

struct ScenarioSpec {
    Scenario scenario;                      // seed is overwritten per grid cell
    std::string study;                      // table grouping; defaults to the label
    std::vector<std::string> estimators;    // labels to run; empty means all
    std::map<std::string, json> overrides;  // per-label estimator field overrides
    std::optional<fs::path> records_csv;    // clean records replacing the generator
};

struct Sweep {
    std::vector<std::string> estimators;
    std::vector<double> step;
    std::vector<double> kernel_sigma;
};

struct BenchConfig {
    std::string schema = kSchema;
    std::vector<ScenarioSpec> scenarios;
    std::vector<EstimatorSpec> estimators;
    std::vector<std::uint64_t> seeds;
    std::optional<Sweep> sweep;
    std::string output_dir = "out";
    int trace_points = 400;  // per-run trace rows kept (log-spaced); 0 keeps all

    void validate() const;
};

json noise_to_json(const NoiseModel& model);
NoiseModel noise_from_json(const json& j);
json estimator_to_json(const EstimatorSpec& spec);
EstimatorSpec estimator_from_json(const json& j);
json bench_config_to_json(const BenchConfig& cfg);
BenchConfig bench_config_from_json(const json& j, const fs::path& base_dir = {});
BenchConfig load_bench_config(const fs::path& path);

// Ten lines sharing the L_64-65 truth, two-component GMM noise, one seed.
BenchConfig stock_config();
// Gaussian, Laplacian and GMM studies on L_64-65 over ten seeds.
BenchConfig studies_config();

// Estimator specs after sweep expansion and scenario overrides.
std::vector<EstimatorSpec> resolve_estimators(const BenchConfig& cfg, const ScenarioSpec& sc);

// ---- execution ----

struct RunRow {
    std::string scenario;
    std::string estimator;
    std::string method;
    std::uint64_t seed = 0;
    int n_rows = 0;
    bool ok = false;
    LineParameters estimate;
    LineParameters truth;
    AreReport are;
    Eigen::Vector4d w_hat = Eigen::Vector4d::Zero();
    int iterations = 0;
    bool converged = false;
    double elapsed = 0.0;
    int m_star = 0;
    double constraint_residual = 0.0;  // max |Y1 + Y3| over the trace, constrained runs only
    std::string error;
    std::vector<TraceEntry> trace;        // thinned
    std::vector<int> trace_iterations;    // iteration number of each kept entry
};

struct AggregateRow {
    std::string scenario;
    std::string estimator;
    int runs = 0;
    int failures = 0;
    double median_r = 0, median_x = 0, median_b = 0;        // estimates
    double median_are_r = 0, median_are_x = 0, median_are_b = 0;
    double iqr_are_r = 0, iqr_are_x = 0, iqr_are_b = 0;
    double median_time = 0;
    double median_iterations = 0;
};

struct BenchReport {
    std::vector<RunRow> rows;
    std::vector<AggregateRow> aggregates;
};

int resolve_jobs(std::optional<int> flag);

// Runs every (scenario, estimator, seed) cell on a worker pool.
BenchReport run_bench(const BenchConfig& cfg, int jobs);

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows);

// Median over a sample; IQR via linear-interpolated quartiles.
double median(std::vector<double> v);
double iqr(std::vector<double> v);

// ---- reports ----

void write_runs_csv(const fs::path& path, const std::vector<RunRow>& rows);
std::vector<RunRow> read_runs_csv(const fs::path& path);
void write_aggregate_csv(const fs::path& path, const std::vector<AggregateRow>& rows);
// One file per scenario, rows r, x, b plus a Time (s) row.
struct StudyInfo {
    std::string study;
    LineParameters truth;
};
void write_tables(const fs::path& dir, const std::vector<AggregateRow>& rows,
                  const std::map<std::string, StudyInfo>& scenarios);
// Iteration numbers default to the entry index; max_points > 0 thins the rows.
void write_trace_csv(const fs::path& path, const std::vector<TraceEntry>& trace, const LineParameters* truth,
                     int max_points = 0, const std::vector<int>& iterations = {});
std::vector<std::pair<int, double>> read_trace_are_r(const fs::path& path);

// Median %ARE(r) against iteration for each estimator of a scenario, log-x.
struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};
std::string render_svg(const std::string& title, const std::vector<PlotSeries>& series);

// Writes runs.csv, aggregate.csv, tables, traces, optional plots and the manifest.
void write_bench_outputs(const fs::path& dir, const BenchConfig& cfg, const BenchReport& report, bool plots);
// Rebuilds aggregates, tables and plots from a bench directory.
void rebuild_report(const fs::path& dir, bool plots);

// Thinned iteration indices: every index up to 100, then log-spaced.
std::vector<std::size_t> trace_indices(std::size_t length, int max_points);

}  // namespace eivlpe
