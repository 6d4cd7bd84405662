#include "eivlpe/noise.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace eivlpe {

void GmmModel::validate() const
{
    const std::size_t m = weights.size();
    if (m == 0)
        throw InvalidInput("GMM needs at least one component");
    if (means.size() != m || variances.size() != m)
        throw InvalidInput("GMM weights, means and variances differ in length");
    double sum = 0.0;
    for (std::size_t g = 0; g < m; ++g) {
        if (!(weights[g] > 0.0) || !std::isfinite(weights[g]))
            throw InvalidInput("GMM weights must be positive");
        if (!(variances[g] > 0.0) || !std::isfinite(variances[g]))
            throw InvalidInput("GMM variances must be positive");
        if (!std::isfinite(means[g]))
            throw InvalidInput("GMM means must be finite");
        sum += weights[g];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw InvalidInput("GMM weights must sum to 1");
}

void validate_noise(const NoiseModel& model)
{
    if (const auto* g = std::get_if<GaussianNoise>(&model)) {
        // sigma = 0 is allowed so that zero noise can be expressed.
        if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma) || !std::isfinite(g->mu))
            throw InvalidInput("Gaussian noise needs finite mu and sigma >= 0");
    } else if (const auto* l = std::get_if<LaplacianNoise>(&model)) {
        if (!(l->scale > 0.0) || !std::isfinite(l->scale) || !std::isfinite(l->mu))
            throw InvalidInput("Laplacian noise needs finite mu and scale > 0");
    } else {
        std::get<GmmModel>(model).validate();
    }
}

std::string noise_kind(const NoiseModel& model)
{
    switch (model.index()) {
    case 0: return "gaussian";
    case 1: return "laplacian";
    default: return "gmm";
    }
}

double noise_mean(const NoiseModel& model)
{
    if (const auto* g = std::get_if<GaussianNoise>(&model))
        return g->mu;
    if (const auto* l = std::get_if<LaplacianNoise>(&model))
        return l->mu;
    const auto& gm = std::get<GmmModel>(model);
    double s = 0.0;
    for (int k = 0; k < gm.m(); ++k)
        s += gm.weights[k] * gm.means[k];
    return s;
}

double noise_variance(const NoiseModel& model)
{
    if (const auto* g = std::get_if<GaussianNoise>(&model))
        return g->sigma * g->sigma;
    if (const auto* l = std::get_if<LaplacianNoise>(&model))
        return 2.0 * l->scale * l->scale;
    const auto& gm = std::get<GmmModel>(model);
    const double mu = noise_mean(model);
    double s = 0.0;
    for (int k = 0; k < gm.m(); ++k) {
        const double d = gm.means[k] - mu;
        s += gm.weights[k] * (gm.variances[k] + d * d);
    }
    return s;
}

namespace {

// Uniform on the open interval (0, 1).
double open_uniform(std::mt19937_64& rng)
{
    double u;
    do {
        u = std::generate_canonical<double, 53>(rng);
    } while (u <= 0.0);
    return u;
}

}  // namespace

std::vector<double> sample_noise(const NoiseModel& model, std::size_t count, std::uint64_t seed)
{
    validate_noise(model);
    std::vector<double> out(count);
    std::mt19937_64 rng(seed);
    if (const auto* g = std::get_if<GaussianNoise>(&model)) {
        if (g->sigma == 0.0) {
            std::fill(out.begin(), out.end(), g->mu);
            return out;
        }
        std::normal_distribution<double> nd(g->mu, g->sigma);
        for (auto& v : out)
            v = nd(rng);
    } else if (const auto* l = std::get_if<LaplacianNoise>(&model)) {
        for (auto& v : out) {
            const double u = open_uniform(rng) - 0.5;
            v = l->mu - l->scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
        }
    } else {
        const auto& gm = std::get<GmmModel>(model);
        std::discrete_distribution<int> pick(gm.weights.begin(), gm.weights.end());
        std::normal_distribution<double> nd(0.0, 1.0);
        for (auto& v : out) {
            const int k = pick(rng);
            v = gm.means[k] + std::sqrt(gm.variances[k]) * nd(rng);
        }
    }
    return out;
}

std::vector<PmuRecord> apply_noise(const std::vector<PmuRecord>& records, const NoiseModel& model,
                                   std::uint64_t seed)
{
    const std::vector<double> z = sample_noise(model, 8 * records.size(), seed);
    std::vector<PmuRecord> out = records;
    const auto* g = std::get_if<GaussianNoise>(&model);
    if (g && g->sigma == 0.0 && g->mu == 0.0)
        return out;
    std::size_t k = 0;
    for (auto& r : out) {
        for (Phasor* p : {&r.vk, &r.vl, &r.ik, &r.il}) {
            p->re += z[k++];
            p->im += z[k++];
        }
    }
    return out;
}

}  // namespace eivlpe
