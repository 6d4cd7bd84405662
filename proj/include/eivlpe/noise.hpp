#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "eivlpe/line_model.hpp"

namespace eivlpe {

struct GmmModel {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;

    int m() const { return static_cast<int>(weights.size()); }
    void validate() const;
};

struct GaussianNoise {
    double mu = 0.0;
    double sigma = 0.0;
};

struct LaplacianNoise {
    double mu = 0.0;
    double scale = 0.0;
};

using NoiseModel = std::variant<GaussianNoise, LaplacianNoise, GmmModel>;

struct NoiseAssignment {
    std::vector<int> labels;                         // 0-based component index
    std::vector<std::vector<double>> responsibilities;  // labels.size() x m
};

struct GmmFit {
    GmmModel model;
    NoiseAssignment assignment;
    double loglik = 0.0;
    int iterations = 0;
    bool variance_floored = false;
    std::vector<double> loglik_trace;
};

constexpr double kVarianceCollapse = 1e-14;
constexpr double kVarianceFloor = 1e-12;

void validate_noise(const NoiseModel& model);
std::string noise_kind(const NoiseModel& model);
double noise_mean(const NoiseModel& model);
double noise_variance(const NoiseModel& model);

std::vector<double> sample_noise(const NoiseModel& model, std::size_t count, std::uint64_t seed);

// Adds independent draws to all 8 Cartesian components of every record.
std::vector<PmuRecord> apply_noise(const std::vector<PmuRecord>& records, const NoiseModel& model,
                                   std::uint64_t seed);

double gmm_loglik(const GmmModel& model, const std::vector<double>& samples);
// Cold start: k-quantile means, pooled variance, uniform weights, plus one
// seed-perturbed restart; the higher log-likelihood wins. A warm model with m
// components replaces both starts.
GmmFit gmm_em_fit(const std::vector<double>& samples, int m, std::uint64_t seed,
                  const GmmModel* warm = nullptr);
double gmm_bic(double loglik, int m, std::size_t n_samples);

}  // namespace eivlpe
