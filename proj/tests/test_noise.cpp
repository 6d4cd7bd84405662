#include <numeric>

#include <doctest.h>

#include "eivlpe/noise.hpp"

using namespace eivlpe;

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v)
{
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0;
    for (double x : v)
        s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

const GmmModel kMixture{{0.3, 0.7}, {0.0, 0.01}, {0.002 * 0.002, 0.002 * 0.002}};

}  // namespace

TEST_CASE("gaussian sample moments")
{
    const auto v = sample_noise(GaussianNoise{0.0, 0.005}, 100000, 1);
    const auto [m, s] = mean_std(v);
    CHECK(std::abs(m) < 5e-5);
    CHECK(std::abs(s / 0.005 - 1) < 0.02);
}

TEST_CASE("gmm sample mean")
{
    const auto v = sample_noise(kMixture, 100000, 2);
    const auto [m, s] = mean_std(v);
    CHECK(noise_mean(kMixture) == doctest::Approx(0.007));
    // Var = sum w (s^2 + mu^2) - mean^2
    const double var = 0.3 * 4e-6 + 0.7 * (4e-6 + 1e-4) - 0.007 * 0.007;
    CHECK(noise_variance(kMixture) == doctest::Approx(var).epsilon(1e-12));
    CHECK(std::abs(m - 0.007) < 3 * std::sqrt(var / 100000));
    CHECK(s * s == doctest::Approx(var).epsilon(0.03));
}

TEST_CASE("laplacian sample moments")
{
    const LaplacianNoise lap{0.001, 0.005};
    const auto v = sample_noise(lap, 200000, 3);
    const auto [m, s] = mean_std(v);
    CHECK(noise_variance(lap) == doctest::Approx(2 * 0.005 * 0.005));
    CHECK(std::abs(m - 0.001) < 3 * std::sqrt(2 * 0.005 * 0.005 / 200000));
    CHECK(s * s == doctest::Approx(2 * 0.005 * 0.005).epsilon(0.03));
    // Mean absolute deviation of a Laplacian is its scale.
    double mad = 0;
    for (double x : v)
        mad += std::abs(x - 0.001);
    CHECK(mad / static_cast<double>(v.size()) == doctest::Approx(0.005).epsilon(0.01));
}

TEST_CASE("sampling is deterministic per seed")
{
    for (const NoiseModel& m : std::vector<NoiseModel>{GaussianNoise{0, 1}, LaplacianNoise{0, 1}, kMixture}) {
        CHECK(sample_noise(m, 50, 7) == sample_noise(m, 50, 7));
        CHECK(sample_noise(m, 50, 7) != sample_noise(m, 50, 8));
    }
}

TEST_CASE("zero noise leaves records unchanged")
{
    std::vector<PmuRecord> recs(3);
    recs[1].vk = {1.0, 0.5};
    recs[2].il = {-0.25, 2.0};
    const auto out = apply_noise(recs, GaussianNoise{0.0, 0.0}, 4);
    for (std::size_t k = 0; k < recs.size(); ++k) {
        CHECK(out[k].vk.re == recs[k].vk.re);
        CHECK(out[k].vk.im == recs[k].vk.im);
        CHECK(out[k].il.re == recs[k].il.re);
        CHECK(out[k].il.im == recs[k].il.im);
    }
}

TEST_CASE("noise model validation")
{
    CHECK_THROWS_AS(validate_noise(GaussianNoise{0, -1}), InvalidInput);
    CHECK_THROWS_AS(validate_noise(LaplacianNoise{0, 0}), InvalidInput);
    CHECK_THROWS_AS(validate_noise(GmmModel{{0.5, 0.6}, {0, 0}, {1, 1}}), InvalidInput);
    CHECK_THROWS_AS(validate_noise(GmmModel{{1.0}, {0, 0}, {1}}), InvalidInput);
    CHECK_THROWS_AS(validate_noise(GmmModel{{0.5, 0.5}, {0, 0}, {1, 0}}), InvalidInput);
    CHECK_NOTHROW(validate_noise(kMixture));
    CHECK(noise_kind(kMixture) == "gmm");
    CHECK(noise_kind(LaplacianNoise{0, 1}) == "laplacian");
}
