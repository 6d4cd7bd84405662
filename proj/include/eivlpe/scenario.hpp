#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eivlpe/estimators.hpp"
#include "eivlpe/line_model.hpp"
#include "eivlpe/noise.hpp"

namespace eivlpe {

// Linear ramp over the record index. The sending-end angle drifts against the
// system reference while the k-l angle difference widens with the transfer.
struct LoadRampProfile {
    int n_records = 500;
    std::pair<double, double> vk_mag{1.10, 1.05};
    std::pair<double, double> vl_mag{0.95, 0.90};
    std::pair<double, double> angle_spread{0.40, 0.50};
    std::pair<double, double> vk_angle{0.50, -1.00};

    void validate() const;
};

struct Scenario {
    LineParameters line{0.00269, 0.0302, 0.38};
    LoadRampProfile profile;
    NoiseModel noise = GaussianNoise{0.0, 0.005};
    std::uint64_t seed = 0;
    std::string label = "L_64-65";
};

struct AreReport {
    double r = 0.0, x = 0.0, b = 0.0;
    std::array<double, 4> Y{};
    std::string estimator;
    std::uint64_t seed = 0;
};

struct TrueRecords {
    std::vector<PmuRecord> records;
    double condition_number = 0.0;
    std::string warning;
};

struct ScenarioRun {
    EstimatorConfig config;
    std::optional<EstimateResult> result;
    std::optional<LineParameters> estimate;
    AreReport are;
    std::string error;
};

struct ScenarioOutcome {
    std::vector<ScenarioRun> runs;
    double condition_number = 0.0;
    std::string warning;
};

constexpr double kConditionLimit = 1e8;

double condition_number(const Eigen::MatrixXd& X);

TrueRecords generate_true_records(const Scenario& scenario);

AreReport are(const LineParameters& w_hat, const LineParameters& w_true);

// Database-style starting guess: each of r, x, b scaled by 1 + U(-20%, 20%).
LineParameters database_guess(const LineParameters& truth, std::uint64_t seed);

// Noisy regression for a scenario, with the Y1 + Y3 = 0 constraint attached.
EivProblem scenario_problem(const Scenario& scenario, const std::vector<PmuRecord>& clean);

// clean replaces the synthetic generator when given.
ScenarioOutcome run_scenario(const Scenario& scenario, const std::vector<EstimatorConfig>& configs,
                             const std::vector<PmuRecord>* clean = nullptr);

}  // namespace eivlpe
