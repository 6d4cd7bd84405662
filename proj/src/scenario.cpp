#include "eivlpe/scenario.hpp"

#include <cmath>
#include <random>

namespace eivlpe {

namespace {

double lerp(const std::pair<double, double>& ab, double t) { return ab.first + (ab.second - ab.first) * t; }

bool in_band(const std::pair<double, double>& ab, double lo, double hi)
{
    return ab.first >= lo && ab.first <= hi && ab.second >= lo && ab.second <= hi;
}

}  // namespace

void LoadRampProfile::validate() const
{
    if (n_records < 1)
        throw InvalidInput("profile needs n_records >= 1");
    if (!in_band(vk_mag, 0.9, 1.1) || !in_band(vl_mag, 0.9, 1.1))
        throw InvalidInput("voltage magnitudes must lie in [0.9, 1.1] p.u.");
    if (!in_band(angle_spread, -0.5, 0.5))
        throw InvalidInput("|angle difference| must not exceed 0.5 rad");
    if (!std::isfinite(vk_angle.first) || !std::isfinite(vk_angle.second))
        throw InvalidInput("vk_angle must be finite");
}

double condition_number(const Eigen::MatrixXd& X)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 0.0)
        return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

TrueRecords generate_true_records(const Scenario& scenario)
{
    const LoadRampProfile& pf = scenario.profile;
    pf.validate();
    TrueRecords out;
    out.records.reserve(pf.n_records);
    for (int k = 0; k < pf.n_records; ++k) {
        const double t = pf.n_records > 1 ? static_cast<double>(k) / (pf.n_records - 1) : 0.0;
        const double th = lerp(pf.vk_angle, t);
        const double vk = lerp(pf.vk_mag, t), vl = lerp(pf.vl_mag, t);
        const double thl = th - lerp(pf.angle_spread, t);
        PmuRecord rec;
        rec.t = k;
        rec.vk = {vk * std::cos(th), vk * std::sin(th)};
        rec.vl = {vl * std::cos(thl), vl * std::sin(thl)};
        std::tie(rec.ik, rec.il) = branch_currents(rec.vk, rec.vl, scenario.line);
        out.records.push_back(rec);
    }
    out.condition_number = condition_number(build_regression(out.records, false).X);
    if (!(out.condition_number <= kConditionLimit))
        out.warning = "regression matrix is ill-conditioned (condition number " +
                      std::to_string(out.condition_number) + ")";
    return out;
}

AreReport are(const LineParameters& w_hat, const LineParameters& w_true)
{
    if (w_true.r == 0.0 || w_true.x == 0.0 || w_true.b == 0.0)
        throw InvalidInput("ARE undefined for a zero true component");
    AreReport rep;
    rep.r = std::abs(w_hat.r - w_true.r) / std::abs(w_true.r);
    rep.x = std::abs(w_hat.x - w_true.x) / std::abs(w_true.x);
    rep.b = std::abs(w_hat.b - w_true.b) / std::abs(w_true.b);
    const AdmittanceVector yt = params_to_admittance(w_true);
    const AdmittanceVector yh = params_to_admittance(w_hat);
    for (int k = 0; k < 4; ++k)
        rep.Y[k] = std::abs(yh(k) - yt(k)) / std::abs(yt(k));
    return rep;
}

LineParameters database_guess(const LineParameters& truth, std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0x5deece66dULL);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    LineParameters g = truth;
    g.r *= 1.0 + u(rng);
    g.x *= 1.0 + u(rng);
    g.b *= 1.0 + u(rng);
    return g;
}

EivProblem scenario_problem(const Scenario& scenario, const std::vector<PmuRecord>& clean)
{
    return build_regression(apply_noise(clean, scenario.noise, scenario.seed), true);
}

ScenarioOutcome run_scenario(const Scenario& scenario, const std::vector<EstimatorConfig>& configs,
                             const std::vector<PmuRecord>* clean)
{
    TrueRecords truth;
    if (clean) {
        truth.records = *clean;
        truth.condition_number = condition_number(build_regression(truth.records, false).X);
        if (!(truth.condition_number <= kConditionLimit))
            truth.warning = "regression matrix is ill-conditioned";
    } else {
        truth = generate_true_records(scenario);
    }
    const EivProblem constrained = scenario_problem(scenario, truth.records);
    EivProblem free = constrained;
    free.constraint.reset();
    const Eigen::VectorXd guess = params_to_admittance(database_guess(scenario.line, scenario.seed));

    ScenarioOutcome out;
    out.condition_number = truth.condition_number;
    out.warning = truth.warning;
    for (const EstimatorConfig& cfg0 : configs) {
        ScenarioRun run;
        run.config = cfg0;
        if (!run.config.w0 && run.config.method != Method::TLS && run.config.start == StartKind::Database)
            run.config.w0 = guess;
        run.are.estimator = method_name(cfg0.method);
        run.are.seed = scenario.seed;
        try {
            const bool use_c = cfg0.method == Method::CMTC || (cfg0.method == Method::EGLE && cfg0.constrained);
            EstimateResult res = run_estimator(use_c ? constrained : free, run.config);
            const LineParameters est = admittance_to_params(res.w_hat);
            AreReport rep = are(est, scenario.line);
            rep.estimator = run.are.estimator;
            rep.seed = scenario.seed;
            run.are = rep;
            run.estimate = est;
            run.result = std::move(res);
        } catch (const std::exception& ex) {
            run.error = ex.what();
        }
        out.runs.push_back(std::move(run));
    }
    return out;
}

}  // namespace eivlpe
